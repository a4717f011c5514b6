#include "hexroute/synthbench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "hexroute/envdata.hpp"  // percentile
#include "hexroute/errors.hpp"
#include "hexroute/rng.hpp"

namespace hexroute {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Incremental state for evaluate-by-delta over single bit flips.
class SynthState {
public:
    explicit SynthState(const SyntheticInstance& inst) : inst_(inst) {
        q_rows_.resize(inst.n);
        r_rows_.resize(inst.n);
        for (const auto& [i, j, v] : inst.Q) {
            q_rows_[i].push_back({j, v});
            q_rows_[j].push_back({i, v});
        }
        for (const auto& [i, j, v] : inst.R) {
            r_rows_[i].push_back({j, v});
            r_rows_[j].push_back({i, v});
        }
        x_.assign(inst.n, 0);
    }

    void set_state(const std::vector<std::uint8_t>& x) {
        x_.assign(inst_.n, 0);
        linear_ = 0.0;
        quad_ = 0.0;
        wsum_ = 0.0;
        rsum_ = 0.0;
        count_ = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i]) flip(i);
        }
    }

    void flip(std::size_t i) {
        int sign = x_[i] ? -1 : 1;
        linear_ += sign * inst_.c[i];
        wsum_ += sign * inst_.w[i];
        count_ += sign;
        for (const auto& [j, v] : q_rows_[i]) {
            if (x_[j]) quad_ += sign * v;
        }
        for (const auto& [j, v] : r_rows_[i]) {
            if (x_[j]) rsum_ += sign * v;
        }
        x_[i] ^= 1;
    }

    double objective() const {
        double s1 = std::max(0.0, inst_.T1 - wsum_ * wsum_);
        double s2 = std::max(0.0, inst_.T2 - rsum_);
        return linear_ + quad_ + inst_.slack_penalty * (s1 + s2);
    }

    bool cardinality_ok() const { return count_ >= inst_.L && count_ <= inst_.U; }
    int count() const { return count_; }
    const std::vector<std::uint8_t>& x() const { return x_; }

private:
    const SyntheticInstance& inst_;
    std::vector<std::vector<std::pair<int, double>>> q_rows_, r_rows_;
    std::vector<std::uint8_t> x_;
    double linear_{0.0}, quad_{0.0}, wsum_{0.0}, rsum_{0.0};
    int count_{0};
};

bool synth_orders_before(const std::vector<std::uint8_t>& xa, double obj_a,
                         const std::vector<std::uint8_t>& xb, double obj_b) {
    if (obj_a != obj_b) return obj_a < obj_b;
    int na = 0, nb = 0;
    for (auto v : xa) na += v;
    for (auto v : xb) nb += v;
    if (na != nb) return na < nb;
    for (std::size_t i = 0; i < xa.size(); ++i) {
        if (xa[i] != xb[i]) return xa[i] > xb[i];
    }
    return false;
}

}  // namespace

SyntheticInstance generate(int n, double density, std::uint64_t seed, const SynthParams& params) {
    if (n < 2) throw ValidationError("synthetic instance requires n >= 2");
    if (!(density > 0.0) || density > 1.0) {
        throw ValidationError("density must lie in (0, 1]");
    }

    SyntheticInstance inst;
    inst.n = n;
    inst.density = density;
    inst.seed = seed;
    inst.params = params;
    inst.slack_penalty = params.slack_penalty;

    std::mt19937_64 rng(mix_seed(seed, 0x53594e54ULL));  // instance stream
    inst.c.resize(n);
    inst.w.resize(n);
    for (int i = 0; i < n; ++i) inst.c[i] = uniform_range(rng, params.c_min, params.c_max);
    for (int i = 0; i < n; ++i) inst.w[i] = uniform_range(rng, params.w_min, params.w_max);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (uniform01(rng) < density) {
                inst.Q.emplace_back(i, j, uniform_range(rng, params.q_min, params.q_max));
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (uniform01(rng) < density) {
                inst.R.emplace_back(i, j, uniform_range(rng, params.q_min, params.q_max));
            }
        }
    }

    inst.L = static_cast<int>(std::ceil(n * params.l_fraction));
    inst.U = static_cast<int>(std::ceil(n * params.u_fraction));
    inst.L = std::max(0, std::min(inst.L, n));
    inst.U = std::max(inst.L, std::min(inst.U, n));

    // Thresholds from random-assignment sampling (Bernoulli 1/2 bits).
    std::vector<double> v1, v2;
    v1.reserve(params.threshold_samples);
    v2.reserve(params.threshold_samples);
    SynthState probe(inst);
    std::vector<std::uint8_t> x(n, 0);
    for (int s = 0; s < params.threshold_samples; ++s) {
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] = (rng() >> 63) & 1;
            if (x[i]) wsum += inst.w[i];
        }
        double rsum = 0.0;
        for (const auto& [i, j, v] : inst.R) {
            if (x[i] && x[j]) rsum += v;
        }
        v1.push_back(wsum * wsum);
        v2.push_back(rsum);
    }
    inst.T1 = percentile(v1, params.threshold_percentile);
    inst.T2 = percentile(v2, params.threshold_percentile);
    return inst;
}

SynthEval evaluate(const SyntheticInstance& inst, const std::vector<std::uint8_t>& x) {
    if (static_cast<int>(x.size()) != inst.n) {
        throw ValidationError("assignment length does not match instance size");
    }
    double linear = 0.0, wsum = 0.0;
    int count = 0;
    for (int i = 0; i < inst.n; ++i) {
        if (x[i]) {
            linear += inst.c[i];
            wsum += inst.w[i];
            ++count;
        }
    }
    double quad = 0.0;
    for (const auto& [i, j, v] : inst.Q) {
        if (x[i] && x[j]) quad += v;
    }
    double rsum = 0.0;
    for (const auto& [i, j, v] : inst.R) {
        if (x[i] && x[j]) rsum += v;
    }
    SynthEval ev;
    ev.s1 = std::max(0.0, inst.T1 - wsum * wsum);
    ev.s2 = std::max(0.0, inst.T2 - rsum);
    ev.objective = linear + quad + inst.slack_penalty * (ev.s1 + ev.s2);
    ev.cardinality_ok = count >= inst.L && count <= inst.U;
    return ev;
}

SynthResult synth_exhaustive(const SyntheticInstance& inst) {
    auto t0 = Clock::now();
    if (static_cast<std::size_t>(inst.n) > kExhaustiveVariableCap) {
        throw ValidationError("exhaustive solver refuses " + std::to_string(inst.n) +
                              " binary variables (cap " +
                              std::to_string(kExhaustiveVariableCap) + ")");
    }
    SynthState state(inst);
    state.set_state(std::vector<std::uint8_t>(inst.n, 0));

    bool have_feasible = false;
    double best_feasible = 0.0;
    std::vector<std::uint8_t> best_feasible_x;
    double best_any = state.objective();
    std::vector<std::uint8_t> best_any_x = state.x();
    if (state.cardinality_ok()) {
        have_feasible = true;
        best_feasible = best_any;
        best_feasible_x = best_any_x;
    }

    std::uint64_t total = 1ULL << inst.n;
    std::uint64_t gray_prev = 0;
    for (std::uint64_t i = 1; i < total; ++i) {
        std::uint64_t gray = i ^ (i >> 1);
        std::uint64_t changed = gray ^ gray_prev;
        gray_prev = gray;
        int bit = 0;
        while (!((changed >> bit) & 1ULL)) ++bit;
        state.flip(static_cast<std::size_t>(bit));

        double obj = state.objective();
        if (obj < best_any ||
            (obj == best_any && synth_orders_before(state.x(), obj, best_any_x, best_any))) {
            best_any = obj;
            best_any_x = state.x();
        }
        if (state.cardinality_ok()) {
            if (!have_feasible || obj < best_feasible ||
                (obj == best_feasible &&
                 synth_orders_before(state.x(), obj, best_feasible_x, best_feasible))) {
                have_feasible = true;
                best_feasible = obj;
                best_feasible_x = state.x();
            }
        }
    }

    SynthResult result;
    result.x = have_feasible ? best_feasible_x : best_any_x;
    SynthEval ev = evaluate(inst, result.x);
    result.objective = ev.objective;
    result.feasible = ev.cardinality_ok;
    result.solver_name = "exhaustive";
    result.wall_time_s = seconds_since(t0);
    return result;
}

SynthResult synth_anneal(const SyntheticInstance& inst, const AnnealSchedule& schedule) {
    auto t0 = Clock::now();
    schedule.validate();

    bool has_deadline = schedule.time_budget_s > 0.0;
    Clock::time_point deadline =
        t0 + std::chrono::duration_cast<Clock::duration>(
                 std::chrono::duration<double>(has_deadline ? schedule.time_budget_s : 0.0));

    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> best_x;

    std::uint64_t restart_cap = has_deadline ? std::numeric_limits<std::uint64_t>::max()
                                             : static_cast<std::uint64_t>(schedule.restarts);
    for (std::uint64_t restart = 0; restart < restart_cap; ++restart) {
        if (has_deadline && restart > 0 && Clock::now() >= deadline) break;
        std::mt19937_64 rng(mix_seed(schedule.seed, restart));

        // Feasible start: random subset with cardinality in [L, U].
        SynthState state(inst);
        {
            std::vector<std::uint8_t> x(inst.n, 0);
            int span = inst.U - inst.L;
            int target = inst.L + (span > 0 ? static_cast<int>(uniform_index(
                                                  rng, static_cast<std::size_t>(span + 1)))
                                            : 0);
            std::vector<int> order(inst.n);
            for (int i = 0; i < inst.n; ++i) order[i] = i;
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[uniform_index(rng, i)]);
            }
            for (int k = 0; k < target; ++k) x[order[k]] = 1;
            state.set_state(x);
        }

        double t_initial = schedule.initial_temperature;
        if (t_initial <= 0.0) {
            double uphill = 0.0;
            int count = 0;
            for (int probe = 0; probe < 100; ++probe) {
                std::size_t i = uniform_index(rng, inst.n);
                double before = state.objective();
                state.flip(i);
                double delta = state.objective() - before;
                state.flip(i);
                if (delta > 0.0) {
                    uphill += delta;
                    ++count;
                }
            }
            double mean = count ? uphill / count : 1.0;
            t_initial = std::max(schedule.final_temperature, mean / 0.22314355131420976);
        }
        double t_final = std::min(schedule.final_temperature, t_initial);
        double cool = schedule.sweeps > 1
                          ? std::pow(t_final / t_initial, 1.0 / (schedule.sweeps - 1))
                          : 1.0;

        double energy = state.objective();
        if (best_x.empty() || energy < best_obj ||
            (energy == best_obj && synth_orders_before(state.x(), energy, best_x, best_obj))) {
            best_obj = energy;
            best_x = state.x();
        }

        double temperature = t_initial;
        std::size_t moves = std::max<std::size_t>(static_cast<std::size_t>(inst.n), 8);
        for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
            for (std::size_t step = 0; step < moves; ++step) {
                std::size_t i = uniform_index(rng, inst.n);
                // Hard move filter: reject flips leaving [L, U].
                int next_count = state.count() + (state.x()[i] ? -1 : 1);
                if (next_count < inst.L || next_count > inst.U) continue;
                state.flip(i);
                double new_energy = state.objective();
                double delta = new_energy - energy;
                if (delta <= 0.0 || uniform01(rng) < std::exp(-delta / temperature)) {
                    energy = new_energy;
                    if (energy < best_obj ||
                        (energy == best_obj &&
                         synth_orders_before(state.x(), energy, best_x, best_obj))) {
                        best_obj = energy;
                        best_x = state.x();
                    }
                } else {
                    state.flip(i);
                }
            }
            temperature *= cool;
            if (has_deadline && Clock::now() >= deadline) break;
        }
    }

    SynthResult result;
    result.x = best_x;
    SynthEval ev = evaluate(inst, result.x);
    result.objective = ev.objective;
    result.feasible = ev.cardinality_ok;
    result.solver_name = "anneal";
    result.seed = schedule.seed;
    result.wall_time_s = seconds_since(t0);
    return result;
}

void SyntheticInstance::dump(std::ostream& os) const {
    std::ostringstream out;
    char buf[192];
    out << "synth/1\n";
    std::snprintf(buf, sizeof(buf), "meta n %d density %.17g seed %llu\n", n, density,
                  static_cast<unsigned long long>(seed));
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "params c [%.17g, %.17g] q [%.17g, %.17g] w [%.17g, %.17g] "
                  "slack_penalty %.17g pct %.17g samples %d\n",
                  params.c_min, params.c_max, params.q_min, params.q_max, params.w_min,
                  params.w_max, params.slack_penalty, params.threshold_percentile,
                  params.threshold_samples);
    out << buf;
    std::snprintf(buf, sizeof(buf), "cardinality L %d U %d\n", L, U);
    out << buf;
    std::snprintf(buf, sizeof(buf), "thresholds T1 %.17g T2 %.17g\n", T1, T2);
    out << buf;
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "c %d %.17g\n", i, c[i]);
        out << buf;
    }
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "w %d %.17g\n", i, w[i]);
        out << buf;
    }
    for (const auto& [i, j, v] : Q) {
        std::snprintf(buf, sizeof(buf), "Q %d %d %.17g\n", i, j, v);
        out << buf;
    }
    for (const auto& [i, j, v] : R) {
        std::snprintf(buf, sizeof(buf), "R %d %d %.17g\n", i, j, v);
        out << buf;
    }
    os << out.str();
}

bool lint_instance_dump(const std::string& dump_text, std::string* why) {
    auto missing = [&](const char* what) {
        if (why) *why = std::string("missing ") + what;
        return false;
    };
    if (dump_text.rfind("synth/1", 0) != 0) return missing("header");
    if (dump_text.find("\nc ") == std::string::npos) return missing("binary activations (c rows)");
    if (dump_text.find("\nQ ") == std::string::npos) return missing("quadratic couplings (Q rows)");
    if (dump_text.find("slack_penalty") == std::string::npos) {
        return missing("soft constraints (slack_penalty)");
    }
    if (dump_text.find("cardinality L") == std::string::npos) {
        return missing("cardinality logic (L/U)");
    }
    if (dump_text.find("thresholds T1") == std::string::npos) {
        return missing("constraint thresholds");
    }
    return true;
}

void BenchReport::write_csv(std::ostream& os) const {
    os << "n,density,quad_terms,solver,seed,objective,feasible,wall_time_s,gap\n";
    char buf[64];
    for (const auto& row : rows) {
        os << row.n << ',' << row.density << ',' << row.quad_terms << ',' << row.solver << ','
           << row.seed << ',';
        if (!row.error.empty()) {
            os << "error:" << row.error << ",0,0,\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), "%.9f", row.objective);
        os << buf << ',' << (row.feasible ? 1 : 0) << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", row.wall_time_s);
        os << buf << ',';
        if (row.gap) {
            std::snprintf(buf, sizeof(buf), "%.9g", *row.gap);
            os << buf;
        }
        os << '\n';
    }
}

BenchReport run_benchmark(const std::vector<int>& sizes, const std::vector<double>& densities,
                          const std::vector<std::string>& solvers,
                          const std::vector<std::uint64_t>& seeds, const SynthParams& params,
                          const AnnealSchedule& schedule, int threads) {
    if (sizes.empty() || densities.empty() || solvers.empty() || seeds.empty()) {
        throw ValidationError("benchmark grid requires at least one size, density, solver, seed");
    }
    for (const auto& s : solvers) {
        if (s != "exhaustive" && s != "anneal") {
            throw ValidationError("unknown benchmark solver: " + s);
        }
    }

    struct Task {
        int n;
        double density;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (int n : sizes) {
        for (double d : densities) {
            for (std::uint64_t seed : seeds) tasks.push_back({n, d, seed});
        }
    }

    // One oracle value per instance, reused across solvers for the gap.
    struct InstanceRows {
        std::vector<BenchRow> rows;
    };
    std::vector<InstanceRows> per_task(tasks.size());

    auto run_task = [&](std::size_t ti) {
        const Task& task = tasks[ti];
        SyntheticInstance inst;
        try {
            inst = generate(task.n, task.density, task.seed, params);
        } catch (const std::exception& ex) {
            for (const auto& solver : solvers) {
                BenchRow row;
                row.n = task.n;
                row.density = task.density;
                row.seed = task.seed;
                row.solver = solver;
                row.error = ex.what();
                per_task[ti].rows.push_back(std::move(row));
            }
            return;
        }

        std::optional<double> oracle;
        if (static_cast<std::size_t>(task.n) <= kExhaustiveVariableCap) {
            try {
                oracle = synth_exhaustive(inst).objective;
            } catch (...) {
                oracle = std::nullopt;
            }
        }

        for (const auto& solver : solvers) {
            BenchRow row;
            row.n = task.n;
            row.density = task.density;
            row.quad_terms = inst.quad_term_count();
            row.seed = task.seed;
            row.solver = solver;
            try {
                SynthResult res;
                if (solver == "exhaustive") {
                    res = synth_exhaustive(inst);
                } else {
                    AnnealSchedule sched = schedule;
                    sched.seed = task.seed;
                    res = synth_anneal(inst, sched);
                }
                // Re-evaluate through the shared evaluator.
                SynthEval ev = evaluate(inst, res.x);
                row.objective = ev.objective;
                row.feasible = ev.cardinality_ok;
                row.wall_time_s = res.wall_time_s;
                if (oracle) {
                    double denom = std::max(1e-12, std::fabs(*oracle));
                    row.gap = (row.objective - *oracle) / denom;
                }
            } catch (const std::exception& ex) {
                row.error = ex.what();
            }
            per_task[ti].rows.push_back(std::move(row));
        }
    };

    if (threads <= 1) {
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                std::size_t ti = next.fetch_add(1);
                if (ti >= tasks.size()) return;
                run_task(ti);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BenchReport report;
    for (auto& group : per_task) {
        for (auto& row : group.rows) report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace hexroute
