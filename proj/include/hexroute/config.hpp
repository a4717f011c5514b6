#pragma once
#include <cstdint>
#include <string>

#include <json.hpp>

#include "hexroute/envdata.hpp"
#include "hexroute/model.hpp"
#include "hexroute/solvers.hpp"
#include "hexroute/synthbench.hpp"

namespace hexroute {

struct SolverChoice {
    std::string name{"anneal"};  // exhaustive | linegraph | anneal | external
    AnnealSchedule schedule;
    std::string adapter_command;  // overridable via HEXROUTE_ADAPTER
};

struct BenchGrid {
    std::vector<int> sizes{12};
    std::vector<double> densities{0.5};
    std::vector<std::string> solvers{"exhaustive", "anneal"};
    std::vector<std::uint64_t> seeds{1};
    SynthParams params;
};

// One canonical record per run; flags override fields, and the fully
// resolved config is echoed into every output bundle.
struct RunConfig {
    std::string corridor_path;
    std::string landmask_path;
    std::string env_csv_path;
    int resolution{5};
    GeoPoint start{};
    GeoPoint goal{};
    std::string date;  // snapshot selector for map_to_cells
    Weights weights;
    PathBounds bounds{0, 0};  // 0 = derive defaults from the grid
    CalibrationPolicy calibration;
    SolverChoice solver;
    BenchGrid bench;
    std::string output_dir{"out"};
    std::uint64_t seed{1};
    int threads{1};

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    // Existence/range checks for the fields a command consumes.
    void validate_for_optimize() const;
    void validate_for_grid() const;
};

}  // namespace hexroute
