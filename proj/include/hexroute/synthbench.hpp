#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hexroute/solvers.hpp"

namespace hexroute {

// All distributional choices are generator parameters, echoed into every
// instance dump and report.
struct SynthParams {
    double c_min{-10.0}, c_max{10.0};
    double q_min{-5.0}, q_max{5.0};
    double w_min{0.0}, w_max{1.0};
    double slack_penalty{1.0};
    double threshold_percentile{50.0};
    int threshold_samples{1000};
    double l_fraction{0.25};  // L = ceil(n * l_fraction)
    double u_fraction{0.75};  // U = ceil(n * u_fraction)
};

struct SyntheticInstance {
    int n{0};
    double density{0.0};
    std::uint64_t seed{0};
    SynthParams params;
    std::vector<double> c;                               // length n
    std::vector<double> w;                               // length n
    std::vector<std::tuple<int, int, double>> Q;         // i<j, sorted
    std::vector<std::tuple<int, int, double>> R;         // i<j, sorted
    int L{0}, U{0};
    double T1{0.0}, T2{0.0};
    double slack_penalty{1.0};

    std::size_t quad_term_count() const { return Q.size(); }
    void dump(std::ostream& os) const;
};

// Deterministic per (n, density, seed, params).
SyntheticInstance generate(int n, double density, std::uint64_t seed,
                           const SynthParams& params = {});

struct SynthEval {
    double objective{0.0};
    double s1{0.0}, s2{0.0};  // optimal slack settings for the given x
    bool cardinality_ok{false};
};

SynthEval evaluate(const SyntheticInstance& inst, const std::vector<std::uint8_t>& x);

struct SynthResult {
    std::vector<std::uint8_t> x;
    double objective{0.0};
    bool feasible{false};  // hard cardinality constraint satisfied
    double wall_time_s{0.0};
    std::string solver_name;
    std::uint64_t seed{0};
};

// Brute force over all 2^n assignments, n <= kExhaustiveVariableCap.
SynthResult synth_exhaustive(const SyntheticInstance& inst);

// Single-bit-flip annealing with the cardinality constraint enforced as a
// hard move filter; slacks are closed-form per state.
SynthResult synth_anneal(const SyntheticInstance& inst, const AnnealSchedule& schedule);

struct BenchRow {
    int n{0};
    double density{0.0};
    std::size_t quad_terms{0};
    std::string solver;
    std::uint64_t seed{0};
    double objective{0.0};
    bool feasible{false};
    double wall_time_s{0.0};
    std::optional<double> gap;  // relative gap to the oracle optimum
    std::string error;          // per-row failure, run continues
};

struct BenchReport {
    std::vector<BenchRow> rows;
    void write_csv(std::ostream& os) const;
};

BenchReport run_benchmark(const std::vector<int>& sizes, const std::vector<double>& densities,
                          const std::vector<std::string>& solvers,
                          const std::vector<std::uint64_t>& seeds,
                          const SynthParams& params = {}, const AnnealSchedule& schedule = {},
                          int threads = 1);

// Structural linter for instance dumps: binary activations, quadratic
// couplings, slack-relaxed constraints and cardinality logic all present.
bool lint_instance_dump(const std::string& dump_text, std::string* why = nullptr);

}  // namespace hexroute
