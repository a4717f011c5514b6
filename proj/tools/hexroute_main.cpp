#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hexroute/config.hpp"
#include "hexroute/envdata.hpp"
#include "hexroute/errors.hpp"
#include "hexroute/geojson.hpp"
#include "hexroute/hexgrid.hpp"
#include "hexroute/model.hpp"
#include "hexroute/recovery.hpp"
#include "hexroute/solvers.hpp"
#include "hexroute/synthbench.hpp"

namespace {

namespace fs = std::filesystem;
using hexroute::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;
constexpr int kExitAdapter = 5;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> solver;
    std::optional<std::string> out;
    std::optional<int> threads;
};

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig config =
        flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
    if (flags.seed) {
        config.seed = *flags.seed;
        config.solver.schedule.seed = *flags.seed;
    } else {
        config.solver.schedule.seed = config.seed;
    }
    if (flags.solver) config.solver.name = *flags.solver;
    if (flags.out) config.output_dir = *flags.out;
    if (flags.threads) {
        config.threads = *flags.threads;
        config.solver.schedule.threads = *flags.threads;
    } else {
        config.solver.schedule.threads = config.threads;
    }
    if (const char* adapter = std::getenv("HEXROUTE_ADAPTER")) {
        if (adapter[0] != '\0') config.solver.adapter_command = adapter;
    }
    return config;
}

hexroute::CorridorGrid build_grid_from_config(const RunConfig& config) {
    auto corridor_polys = hexroute::read_polygons(config.corridor_path);
    std::vector<hexroute::Polygon> land;
    if (!config.landmask_path.empty()) {
        land = hexroute::read_polygons(config.landmask_path);
    }
    return hexroute::CorridorGrid::build(corridor_polys.front(), land, config.resolution);
}

void ensure_dir(const fs::path& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw hexroute::IoError("cannot create output directory " + path.string());
    if (!fs::is_directory(path)) {
        throw hexroute::IoError("output path is not a directory: " + path.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw hexroute::IoError("cannot write " + path.string());
    out << text;
    if (!out) throw hexroute::IoError("failed writing " + path.string());
}

int cmd_build_grid(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    config.validate_for_grid();
    ensure_dir(config.output_dir);

    hexroute::CorridorGrid grid = build_grid_from_config(config);

    std::ostringstream dump;
    grid.dump(dump);
    write_text(fs::path(config.output_dir) / "grid.csv", dump.str());
    write_text(fs::path(config.output_dir) / "config_echo.json",
               config.to_json().dump(2) + "\n");

    std::size_t ocean = 0;
    for (const auto& [id, cell] : grid.cells()) {
        if (cell.is_ocean) ++ocean;
    }
    std::ostringstream summary;
    summary << "cells " << grid.size() << "\n"
            << "ocean_cells " << ocean << "\n"
            << "ocean_fraction " << (grid.size() ? double(ocean) / grid.size() : 0.0) << "\n"
            << "resolution " << config.resolution << "\n"
            << "mean_cell_area_km2 " << hexroute::mean_cell_area_km2(config.resolution) << "\n";
    write_text(fs::path(config.output_dir) / "grid_summary.txt", summary.str());
    if (grid.size() == 0) {
        std::cerr << "warning: corridor produced an empty grid (fully masked?)\n";
    }
    std::cout << summary.str();
    return kExitOk;
}

int cmd_map_features(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    config.validate_for_optimize();
    ensure_dir(config.output_dir);

    hexroute::CorridorGrid grid = build_grid_from_config(config);
    auto load = hexroute::load_samples(config.env_csv_path);
    std::cout << load.summary() << "\n";
    for (const auto& d : load.rejected) {
        std::cerr << "row " << d.row << ": " << d.message << "\n";
    }
    auto features = hexroute::map_to_cells(load.samples, grid, config.date);
    auto cal = hexroute::calibrate(features, config.calibration);

    std::ostringstream fdump;
    hexroute::dump_features(features, fdump);
    write_text(fs::path(config.output_dir) / "features.csv", fdump.str());
    write_text(fs::path(config.output_dir) / "calibration.txt", cal.to_text());
    write_text(fs::path(config.output_dir) / "config_echo.json",
               config.to_json().dump(2) + "\n");
    std::cout << "cells_with_features " << features.size() << "\n";
    return kExitOk;
}

struct OptimizeArtifacts {
    hexroute::SolverResult result;
    hexroute::Route route;
    hexroute::RouteMetrics metrics;
    std::size_t nodes{0};
    std::size_t quad_terms{0};
};

OptimizeArtifacts run_optimize(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);

    hexroute::CorridorGrid grid = build_grid_from_config(config);
    if (grid.size() == 0) {
        throw hexroute::ValidationError("corridor produced an empty grid");
    }
    auto load = hexroute::load_samples(config.env_csv_path);
    auto features = hexroute::map_to_cells(load.samples, grid, config.date);
    if (features.empty()) {
        throw hexroute::ValidationError("no environmental samples for date " + config.date);
    }
    auto cal = hexroute::calibrate(features, config.calibration);

    hexroute::CellId s = grid.nearest_cell(config.start);
    hexroute::CellId g = grid.nearest_cell(config.goal);
    double snap_s = hexroute::haversine_km(config.start, grid.cell(s).centroid);
    double snap_g = hexroute::haversine_km(config.goal, grid.cell(g).centroid);
    std::cout << "snap start -> cell " << s.raw() << " (" << snap_s << " km)\n";
    std::cout << "snap goal  -> cell " << g.raw() << " (" << snap_g << " km)\n";

    hexroute::CqmModel model =
        hexroute::build_model(grid, features, cal, config.weights, s, g, config.bounds);

    hexroute::SolverResult result;
    if (config.solver.name == "exhaustive") {
        result = hexroute::solve_exhaustive(model);
    } else if (config.solver.name == "linegraph") {
        result = hexroute::solve_linegraph_dijkstra(model);
    } else if (config.solver.name == "anneal") {
        result = hexroute::solve_anneal(model, config.solver.schedule);
    } else if (config.solver.name == "external") {
        result = hexroute::solve_external(model, {config.solver.adapter_command, ""});
    } else {
        throw hexroute::ValidationError("unknown solver: " + config.solver.name);
    }

    auto active = hexroute::extract_active(model, result);
    hexroute::Route route = hexroute::reconstruct(active, model, grid);
    hexroute::RouteMetrics rm = hexroute::metrics(route);

    // Reproducibility bundle.
    write_text(out_dir / "config_echo.json", config.to_json().dump(2) + "\n");
    write_text(out_dir / "calibration.txt", cal.to_text());
    {
        std::ostringstream md;
        model.dump(md);
        write_text(out_dir / "model.cqm", md.str());
    }
    {
        nlohmann::json rj;
        rj["objective"] = result.objective;
        rj["feasible"] = result.feasible;
        rj["solver_name"] = result.solver_name;
        rj["seed"] = result.seed;
        rj["wall_time_s"] = result.wall_time_s;
        rj["violations"] = nlohmann::json::array();
        for (const auto& v : result.violations) {
            rj["violations"].push_back(
                {{"constraint", v.constraint}, {"magnitude", v.magnitude}});
        }
        rj["relinked_edges"] = route.relinked_edges.size();
        rj["config"] = config.to_json();
        write_text(out_dir / "result.json", rj.dump(2) + "\n");
    }
    hexroute::export_geojson(route, rm, (out_dir / "route.geojson").string());
    write_text(out_dir / "metrics.csv",
               hexroute::metrics_csv_header() + "\n" +
                   hexroute::metrics_csv_row(result.solver_name, grid.size(),
                                             model.turn_terms().size(), result.objective, rm,
                                             result.wall_time_s) +
                   "\n");

    OptimizeArtifacts artifacts;
    artifacts.result = std::move(result);
    artifacts.route = std::move(route);
    artifacts.metrics = rm;
    artifacts.nodes = grid.size();
    artifacts.quad_terms = model.turn_terms().size();
    return artifacts;
}

int cmd_optimize(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    config.validate_for_optimize();
    OptimizeArtifacts artifacts = run_optimize(config, config.output_dir);
    std::cout << "solver " << artifacts.result.solver_name << " objective "
              << artifacts.result.objective << (artifacts.result.feasible ? "" : " (infeasible)")
              << " km " << artifacts.metrics.length_km << "\n";
    return artifacts.result.feasible ? kExitOk : kExitInfeasible;
}

int cmd_bench(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    ensure_dir(config.output_dir);
    hexroute::AnnealSchedule schedule = config.solver.schedule;
    auto report =
        hexroute::run_benchmark(config.bench.sizes, config.bench.densities,
                                config.bench.solvers, config.bench.seeds, config.bench.params,
                                schedule, config.threads);
    std::ostringstream csv;
    report.write_csv(csv);
    write_text(fs::path(config.output_dir) / "bench_report.csv", csv.str());
    write_text(fs::path(config.output_dir) / "config_echo.json",
               config.to_json().dump(2) + "\n");
    std::cout << csv.str();
    return kExitOk;
}

int cmd_budget_sweep(const CommonFlags& flags, const std::vector<double>& budgets) {
    if (budgets.empty()) {
        throw hexroute::ValidationError("budget sweep requires at least one budget");
    }
    RunConfig config = resolve_config(flags);
    config.validate_for_optimize();
    ensure_dir(config.output_dir);

    std::ostringstream csv;
    csv << "budget_s,objective,km,zigzag_pct,co2_kg\n";
    for (double budget : budgets) {
        RunConfig run = config;
        run.solver.name = "anneal";
        run.solver.schedule.time_budget_s = budget;
        char label[32];
        std::snprintf(label, sizeof(label), "budget_%gs", budget);
        OptimizeArtifacts artifacts =
            run_optimize(run, fs::path(config.output_dir) / label);
        char row[256];
        std::snprintf(row, sizeof(row), "%g,%.6f,%.4f,%.4f,%.2f\n", budget,
                      artifacts.result.objective, artifacts.metrics.length_km,
                      artifacts.metrics.zigzag_pct, artifacts.metrics.co2_kg);
        csv << row;
    }
    write_text(fs::path(config.output_dir) / "budget_sweep.csv", csv.str());
    std::cout << csv.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hexagonal-grid polar route optimization toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::vector<double> budgets;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path, "JSON config file");
        cmd->add_option("--seed", flags.seed, "override config seed");
        cmd->add_option("--solver", flags.solver, "override solver name");
        cmd->add_option("--out", flags.out, "override output directory");
        cmd->add_option("--threads", flags.threads, "internal parallelism");
    };

    CLI::App* build_grid = app.add_subcommand("build-grid", "tessellate the corridor");
    add_common(build_grid);
    CLI::App* map_features = app.add_subcommand("map-features", "aggregate samples onto cells");
    add_common(map_features);
    CLI::App* optimize = app.add_subcommand("optimize", "solve a routing instance");
    add_common(optimize);
    CLI::App* bench = app.add_subcommand("bench", "synthetic solver benchmark");
    add_common(bench);
    CLI::App* sweep = app.add_subcommand("budget-sweep", "anneal budget sensitivity");
    add_common(sweep);
    sweep->add_option("--budgets", budgets, "time budgets in seconds")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_grid->parsed()) return cmd_build_grid(flags);
        if (map_features->parsed()) return cmd_map_features(flags);
        if (optimize->parsed()) return cmd_optimize(flags);
        if (bench->parsed()) return cmd_bench(flags);
        if (sweep->parsed()) return cmd_budget_sweep(flags, budgets);
    } catch (const hexroute::InfeasibleError& ex) {
        std::cerr << "infeasible: " << ex.what() << "\n";
        return kExitInfeasible;
    } catch (const hexroute::ValidationError& ex) {
        std::cerr << "invalid input: " << ex.what() << "\n";
        return kExitValidation;
    } catch (const hexroute::AdapterError& ex) {
        std::cerr << "adapter error: " << ex.what() << "\n";
        return kExitAdapter;
    } catch (const hexroute::IoError& ex) {
        std::cerr << "io error: " << ex.what() << "\n";
        return kExitIo;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return kExitOk;
}
