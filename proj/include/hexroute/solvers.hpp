#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "hexroute/model.hpp"

namespace hexroute {

// Hard cap for the brute-force oracle.
constexpr std::size_t kExhaustiveVariableCap = 22;

struct AnnealSchedule {
    // <= 0 requests auto-calibration (~0.8 initial uphill acceptance,
    // estimated from 100 probe moves).
    double initial_temperature{0.0};
    double final_temperature{1e-3};
    int sweeps{400};
    int restarts{12};
    // <= 0 means no budget. With a budget, restarts run until the
    // deadline; the run terminates within budget + one sweep.
    double time_budget_s{0.0};
    std::uint64_t seed{1};
    int threads{1};  // restart parallelism; results independent of it

    void validate() const;
};

struct SolverResult {
    Assignment assignment;
    double objective{0.0};
    bool feasible{false};
    std::vector<Violation> violations;
    double wall_time_s{0.0};
    std::string solver_name;
    std::uint64_t seed{0};
};

// Globally optimal over all binary edge assignments; flow feasibility per
// assignment by reachability, slacks closed-form. Deterministic. Refuses
// models with more than kExhaustiveVariableCap binary variables.
SolverResult solve_exhaustive(const CqmModel& model);

// Exact over path-shaped assignments: level DP on (directed arc, edge
// count) with per-turn transition costs and the length hinge applied at
// the terminal count.
SolverResult solve_linegraph_dijkstra(const CqmModel& model);

struct AnnealTrace {
    // Best energy after each sweep of each restart, concatenated;
    // non-increasing within a restart segment.
    std::vector<double> best_energy;
    std::vector<std::size_t> restart_offsets;
};

SolverResult solve_anneal(const CqmModel& model, const AnnealSchedule& schedule,
                          AnnealTrace* trace = nullptr);

// Subprocess adapter: `command <model_file> <solution_file>`, exit code
// 0 = solved, 2 = infeasible, anything else = adapter error. The solution
// file holds `name value` lines (x_<a>_<b> variables; an optional
// `objective <v>` line is cross-checked against the evaluator).
struct AdapterConfig {
    std::string command;
    std::string workdir;  // empty -> a fresh temp directory
};

SolverResult solve_external(const CqmModel& model, const AdapterConfig& config);

// Deterministic total order used to merge equal-quality results:
// (objective, active edge count, lexicographic edge list).
bool result_orders_before(const CqmModel& model, const std::vector<std::uint8_t>& xa,
                          double obj_a, const std::vector<std::uint8_t>& xb, double obj_b);

// Serializes a result (without config echo) as indented JSON-compatible text.
std::string result_to_json(const SolverResult& result);

}  // namespace hexroute
