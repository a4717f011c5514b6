#include "hexroute/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <sys/wait.h>
#include <unistd.h>

#include "hexroute/errors.hpp"
#include "hexroute/rng.hpp"

namespace hexroute {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SolverResult finish_result(const CqmModel& model, const std::vector<std::uint8_t>& x,
                           std::string name, std::uint64_t seed, Clock::time_point t0) {
    SolverResult result;
    result.assignment = complete_assignment(model, x);
    Evaluation ev = evaluate_assignment(model, result.assignment);
    result.objective = ev.objective;
    result.feasible = ev.feasible;
    result.violations = std::move(ev.violations);
    result.solver_name = std::move(name);
    result.seed = seed;
    result.wall_time_s = seconds_since(t0);
    return result;
}

// Incremental objective bookkeeping shared by the exhaustive solver and
// the annealer. Tracks sum of linear costs, active turn-pair costs, degree
// slack squares and the length hinge for the current selection.
class ObjectiveState {
public:
    explicit ObjectiveState(const CqmModel& model) : model_(model) {
        pair_lists_.resize(model.edge_count());
        for (const auto& t : model.turn_terms()) {
            pair_lists_[t.e1].push_back({t.e2, t.coeff});
            pair_lists_[t.e2].push_back({t.e1, t.coeff});
        }
        endpoints_.resize(model.edge_count());
        for (std::size_t e = 0; e < model.edge_count(); ++e) {
            endpoints_[e] = {model.vertex_index(model.edge(e).a),
                             model.vertex_index(model.edge(e).b)};
        }
        reset();
    }

    void reset() {
        x_.assign(model_.edge_count(), 0);
        degree_.assign(model_.vertex_count(), 0);
        active_ = 0;
        linear_sum_ = 0.0;
        turn_sum_ = 0.0;
        slack_sq_sum_ = 0.0;
    }

    void set_state(const std::vector<std::uint8_t>& x) {
        reset();
        for (std::size_t e = 0; e < x.size(); ++e) {
            if (x[e]) flip(e);
        }
    }

    // Objective delta of toggling edge e, without applying it.
    double flip_delta(std::size_t e) const {
        int sign = x_[e] ? -1 : 1;
        double delta = sign * model_.linear_cost(e);
        for (const auto& [other, coeff] : pair_lists_[e]) {
            if (x_[other]) delta += sign * coeff;
        }
        const Weights& w = model_.weights();
        auto [ai, bi] = endpoints_[e];
        delta += w.w_deg * (slack_sq(degree_[ai] + sign, model_.degree_target(ai)) -
                            slack_sq(degree_[ai], model_.degree_target(ai)));
        delta += w.w_deg * (slack_sq(degree_[bi] + sign, model_.degree_target(bi)) -
                            slack_sq(degree_[bi], model_.degree_target(bi)));
        delta += w.w_len * (hinge_sq(active_ + sign) - hinge_sq(active_));
        return delta;
    }

    void flip(std::size_t e) {
        int sign = x_[e] ? -1 : 1;
        linear_sum_ += sign * model_.linear_cost(e);
        for (const auto& [other, coeff] : pair_lists_[e]) {
            if (x_[other]) turn_sum_ += sign * coeff;
        }
        const Weights& w = model_.weights();
        auto [ai, bi] = endpoints_[e];
        slack_sq_sum_ += slack_sq(degree_[ai] + sign, model_.degree_target(ai)) -
                         slack_sq(degree_[ai], model_.degree_target(ai));
        slack_sq_sum_ += slack_sq(degree_[bi] + sign, model_.degree_target(bi)) -
                         slack_sq(degree_[bi], model_.degree_target(bi));
        (void)w;
        degree_[ai] += sign;
        degree_[bi] += sign;
        active_ += sign;
        x_[e] ^= 1;
    }

    double objective() const {
        const Weights& w = model_.weights();
        return linear_sum_ + turn_sum_ + w.w_deg * slack_sq_sum_ + w.w_len * hinge_sq(active_);
    }

    // s-g reachability over the active subgraph.
    bool feasible() const {
        std::size_t si = model_.vertex_index(model_.start());
        std::size_t gi = model_.vertex_index(model_.goal());
        std::vector<std::uint8_t> seen(model_.vertex_count(), 0);
        std::deque<std::size_t> queue{si};
        seen[si] = 1;
        while (!queue.empty()) {
            std::size_t u = queue.front();
            queue.pop_front();
            if (u == gi) return true;
            for (std::uint32_t e : model_.incident_edges(u)) {
                if (!x_[e]) continue;
                auto [ai, bi] = endpoints_[e];
                std::size_t v = (ai == u) ? bi : ai;
                if (!seen[v]) {
                    seen[v] = 1;
                    queue.push_back(v);
                }
            }
        }
        return false;
    }

    const std::vector<std::uint8_t>& x() const { return x_; }
    int active_count() const { return active_; }

private:
    static double slack_sq(int degree, int target) {
        double z = std::max(0, degree - target);
        return z * z;
    }

    double hinge_sq(int active) const {
        double sf = std::max(0, model_.bounds().l_min - active);
        double ex = std::max(0, active - model_.bounds().l_max);
        return sf * sf + ex * ex;
    }

    const CqmModel& model_;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> pair_lists_;
    std::vector<std::pair<std::size_t, std::size_t>> endpoints_;
    std::vector<std::uint8_t> x_;
    std::vector<int> degree_;
    int active_{0};
    double linear_sum_{0.0};
    double turn_sum_{0.0};
    double slack_sq_sum_{0.0};
};

// Random shortest-hop lattice path between two model vertices, neighbor
// exploration order shuffled by the caller's RNG.
std::vector<std::size_t> random_lattice_path(const CqmModel& model, std::size_t from,
                                             std::size_t to, std::mt19937_64& rng) {
    std::vector<std::int32_t> parent(model.vertex_count(), -1);
    std::vector<std::uint8_t> seen(model.vertex_count(), 0);
    std::deque<std::size_t> queue{from};
    seen[from] = 1;
    std::vector<std::size_t> around;
    while (!queue.empty()) {
        std::size_t u = queue.front();
        queue.pop_front();
        if (u == to) break;
        around.clear();
        for (std::uint32_t e : model.incident_edges(u)) {
            const EdgeKey& key = model.edge(e);
            std::size_t v =
                model.vertex_index(key.a == model.vertex(u) ? key.b : key.a);
            if (!seen[v]) around.push_back(v);
        }
        for (std::size_t i = around.size(); i > 1; --i) {
            std::swap(around[i - 1], around[uniform_index(rng, i)]);
        }
        for (std::size_t v : around) {
            seen[v] = 1;
            parent[v] = static_cast<std::int32_t>(u);
            queue.push_back(v);
        }
    }
    std::vector<std::size_t> path;
    if (!seen[to]) return path;
    for (std::int32_t v = static_cast<std::int32_t>(to); v != -1;
         v = parent[static_cast<std::size_t>(v)]) {
        path.push_back(static_cast<std::size_t>(v));
        if (static_cast<std::size_t>(v) == from) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<std::uint8_t> path_to_selection(const CqmModel& model,
                                            const std::vector<std::size_t>& path) {
    std::vector<std::uint8_t> x(model.edge_count(), 0);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        EdgeKey key = EdgeKey::make(model.vertex(path[i]), model.vertex(path[i + 1]));
        x[*model.edge_index(key)] = 1;
    }
    return x;
}

// Cells of the current active s-g path as vertex indices, if one exists.
std::vector<std::size_t> active_vertex_path(const CqmModel& model,
                                            const std::vector<std::uint8_t>& x) {
    auto cells = active_path(model, x);
    std::vector<std::size_t> out;
    if (!cells) return out;
    out.reserve(cells->size());
    for (CellId id : *cells) out.push_back(model.vertex_index(id));
    return out;
}

}  // namespace

void AnnealSchedule::validate() const {
    if (initial_temperature > 0.0 && initial_temperature < final_temperature) {
        throw ValidationError("anneal schedule requires initial >= final temperature");
    }
    if (!(final_temperature > 0.0)) {
        throw ValidationError("anneal schedule requires a positive final temperature");
    }
    if (sweeps < 1) throw ValidationError("anneal schedule requires sweeps >= 1");
    if (restarts < 1) throw ValidationError("anneal schedule requires restarts >= 1");
}

bool result_orders_before(const CqmModel& model, const std::vector<std::uint8_t>& xa,
                          double obj_a, const std::vector<std::uint8_t>& xb, double obj_b) {
    if (obj_a != obj_b) return obj_a < obj_b;
    int na = 0, nb = 0;
    for (std::uint8_t v : xa) na += v;
    for (std::uint8_t v : xb) nb += v;
    if (na != nb) return na < nb;
    // Lexicographically smallest canonical edge list: edges are stored in
    // canonical sorted order, so compare activation vectors with active
    // edges reading as "smaller".
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        if (xa[e] != xb[e]) return xa[e] > xb[e];
    }
    return false;
}

SolverResult solve_exhaustive(const CqmModel& model) {
    auto t0 = Clock::now();
    std::size_t n = model.binary_variable_count();
    if (n > kExhaustiveVariableCap) {
        throw ValidationError("exhaustive solver refuses " + std::to_string(n) +
                              " binary variables (cap " +
                              std::to_string(kExhaustiveVariableCap) + ")");
    }

    ObjectiveState state(model);
    bool have_feasible = false;
    double best_feasible_obj = 0.0;
    std::vector<std::uint8_t> best_feasible_x;
    double best_any_obj = state.objective();
    std::vector<std::uint8_t> best_any_x = state.x();

    // The all-zero assignment is never flow-feasible (net outflow at the
    // start cannot reach +1), so feasibility checks start after the first
    // flip. Gray-code order toggles exactly one edge per step.
    std::uint64_t total = 1ULL << n;
    std::uint64_t gray_prev = 0;
    for (std::uint64_t i = 1; i < total; ++i) {
        std::uint64_t gray = i ^ (i >> 1);
        std::uint64_t changed = gray ^ gray_prev;
        gray_prev = gray;
        int bit = 0;
        while (!((changed >> bit) & 1ULL)) ++bit;
        state.flip(static_cast<std::size_t>(bit));

        double obj = state.objective();
        if (obj < best_any_obj ||
            (obj == best_any_obj &&
             result_orders_before(model, state.x(), obj, best_any_x, best_any_obj))) {
            best_any_obj = obj;
            best_any_x = state.x();
        }
        bool candidate =
            !have_feasible || obj < best_feasible_obj ||
            (obj == best_feasible_obj &&
             result_orders_before(model, state.x(), obj, best_feasible_x, best_feasible_obj));
        if (candidate && state.feasible()) {
            have_feasible = true;
            best_feasible_obj = obj;
            best_feasible_x = state.x();
        }
    }

    const std::vector<std::uint8_t>& chosen = have_feasible ? best_feasible_x : best_any_x;
    SolverResult result = finish_result(model, chosen, "exhaustive", 0, t0);
    return result;
}

SolverResult solve_linegraph_dijkstra(const CqmModel& model) {
    auto t0 = Clock::now();
    std::size_t edge_count = model.edge_count();
    std::size_t arc_count = 2 * edge_count;
    std::size_t si = model.vertex_index(model.start());
    std::size_t gi = model.vertex_index(model.goal());

    // arc 2e = a->b, arc 2e+1 = b->a
    auto arc_head = [&](std::size_t arc) {
        const EdgeKey& key = model.edge(arc / 2);
        return model.vertex_index((arc % 2 == 0) ? key.b : key.a);
    };
    auto arc_tail = [&](std::size_t arc) {
        const EdgeKey& key = model.edge(arc / 2);
        return model.vertex_index((arc % 2 == 0) ? key.a : key.b);
    };

    std::map<std::pair<std::uint32_t, std::uint32_t>, double> turn_coeff;
    for (const auto& t : model.turn_terms()) turn_coeff[{t.e1, t.e2}] = t.coeff;
    auto turn_between = [&](std::uint32_t e1, std::uint32_t e2) {
        auto it = turn_coeff.find({std::min(e1, e2), std::max(e1, e2)});
        return it == turn_coeff.end() ? 0.0 : it->second;
    };

    // Count horizon: full edge budget on small models, 2*l_max otherwise.
    std::size_t horizon = edge_count <= 64
                              ? edge_count
                              : std::min(edge_count,
                                         static_cast<std::size_t>(2 * model.bounds().l_max));
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(horizon + 1, std::vector<double>(arc_count, inf));
    std::vector<std::vector<std::int32_t>> parent(horizon + 1,
                                                  std::vector<std::int32_t>(arc_count, -1));

    for (std::size_t arc = 0; arc < arc_count; ++arc) {
        if (arc_tail(arc) == si) cost[1][arc] = model.linear_cost(arc / 2);
    }
    for (std::size_t level = 1; level < horizon; ++level) {
        for (std::size_t arc = 0; arc < arc_count; ++arc) {
            double c = cost[level][arc];
            if (c == inf) continue;
            std::size_t v = arc_head(arc);
            if (v == gi) continue;  // paths stop at the goal
            std::size_t u = arc_tail(arc);
            for (std::uint32_t e : model.incident_edges(v)) {
                std::size_t fwd = 2 * e + (model.vertex_index(model.edge(e).a) == v ? 0 : 1);
                std::size_t w = arc_head(fwd);
                if (w == u) continue;  // no immediate backtracking
                double next = c + turn_between(static_cast<std::uint32_t>(arc / 2), e) +
                              model.linear_cost(e);
                if (next < cost[level + 1][fwd]) {
                    cost[level + 1][fwd] = next;
                    parent[level + 1][fwd] = static_cast<std::int32_t>(arc);
                }
            }
        }
    }

    const Weights& w = model.weights();
    auto hinge = [&](std::size_t length) {
        double sf = std::max<double>(0.0, model.bounds().l_min - static_cast<double>(length));
        double ex = std::max<double>(0.0, static_cast<double>(length) - model.bounds().l_max);
        return w.w_len * (sf * sf + ex * ex);
    };

    double best = inf;
    std::size_t best_level = 0, best_arc = 0;
    for (std::size_t level = 1; level <= horizon; ++level) {
        for (std::size_t arc = 0; arc < arc_count; ++arc) {
            if (cost[level][arc] == inf || arc_head(arc) != gi) continue;
            double total = cost[level][arc] + hinge(level);
            if (total < best) {
                best = total;
                best_level = level;
                best_arc = arc;
            }
        }
    }

    std::vector<std::uint8_t> x(edge_count, 0);
    if (best < inf) {
        std::size_t level = best_level;
        std::int32_t arc = static_cast<std::int32_t>(best_arc);
        while (arc >= 0 && level >= 1) {
            x[static_cast<std::size_t>(arc) / 2] = 1;
            arc = parent[level][static_cast<std::size_t>(arc)];
            --level;
        }
    }
    return finish_result(model, x, "linegraph_dijkstra", 0, t0);
}

namespace {

struct RestartOutcome {
    std::vector<std::uint8_t> x;
    double objective{std::numeric_limits<double>::infinity()};
    std::vector<double> best_energy_trace;
};

class AnnealContext {
public:
    AnnealContext(const CqmModel& model, const AnnealSchedule& schedule)
        : model_(model), schedule_(schedule) {
        double scale = 0.0;
        for (std::size_t e = 0; e < model.edge_count(); ++e) {
            scale += std::fabs(model.linear_cost(e));
        }
        for (const auto& t : model.turn_terms()) scale += std::fabs(t.coeff);
        double lmin = model.bounds().l_min, lmax = model.bounds().l_max;
        scale += model.weights().w_len * (lmin * lmin + lmax * lmax);
        infeasibility_penalty_ = 1000.0 + 2.0 * scale;
    }

    RestartOutcome run_restart(std::uint64_t restart_index, Clock::time_point deadline,
                               bool has_deadline) const {
        std::mt19937_64 rng(mix_seed(schedule_.seed, restart_index));
        ObjectiveState state(model_);
        std::size_t si = model_.vertex_index(model_.start());
        std::size_t gi = model_.vertex_index(model_.goal());

        auto seed_path = random_lattice_path(model_, si, gi, rng);
        state.set_state(path_to_selection(model_, seed_path));
        bool feasible = !seed_path.empty();

        auto energy_of = [&](double obj, bool feas) {
            return obj + (feas ? 0.0 : infeasibility_penalty_);
        };

        double energy = energy_of(state.objective(), feasible);
        RestartOutcome best;
        best.x = state.x();
        best.objective = energy;

        // Temperature: explicit or probe-calibrated for ~0.8 uphill
        // acceptance.
        double t_initial = schedule_.initial_temperature;
        if (t_initial <= 0.0) {
            double uphill_sum = 0.0;
            int uphill_count = 0;
            for (int probe = 0; probe < 100; ++probe) {
                std::size_t e = uniform_index(rng, model_.edge_count());
                double delta = state.flip_delta(e);
                if (delta > 0.0) {
                    uphill_sum += delta;
                    ++uphill_count;
                }
            }
            double mean = uphill_count ? uphill_sum / uphill_count : 1.0;
            t_initial = std::max(schedule_.final_temperature, mean / 0.22314355131420976);
        }
        double t_final = std::min(schedule_.final_temperature, t_initial);
        int sweeps = schedule_.sweeps;
        double cool = sweeps > 1 ? std::pow(t_final / t_initial, 1.0 / (sweeps - 1)) : 1.0;

        double temperature = t_initial;
        std::size_t moves_per_sweep = std::max<std::size_t>(model_.edge_count(), 8);
        for (int sweep = 0; sweep < sweeps; ++sweep) {
            for (std::size_t step = 0; step < moves_per_sweep; ++step) {
                bool path_move = uniform01(rng) < 0.1;
                if (path_move) {
                    propose_path_mutation(state, feasible, energy, rng, energy_of);
                } else {
                    propose_flip(state, feasible, energy, rng, temperature, energy_of);
                }
                if (energy < best.objective) {
                    best.objective = energy;
                    best.x = state.x();
                }
            }
            best.best_energy_trace.push_back(best.objective);
            temperature *= cool;
            if (has_deadline && Clock::now() >= deadline) break;
        }
        return best;
    }

    double infeasibility_penalty() const { return infeasibility_penalty_; }

private:
    template <typename EnergyFn>
    void propose_flip(ObjectiveState& state, bool& feasible, double& energy,
                      std::mt19937_64& rng, double temperature, EnergyFn energy_of) const {
        std::size_t e = uniform_index(rng, model_.edge_count());
        state.flip(e);
        bool new_feasible = state.feasible();
        double new_energy = energy_of(state.objective(), new_feasible);
        double delta = new_energy - energy;
        if (delta <= 0.0 || uniform01(rng) < std::exp(-delta / temperature)) {
            energy = new_energy;
            feasible = new_feasible;
        } else {
            state.flip(e);  // revert
        }
    }

    // Replace a random subpath of the current route with a random
    // lattice-shortest alternative; from an infeasible state, propose a
    // whole fresh path instead. Applied as in-place flips so the
    // bookkeeping stays incremental; reverted when not an improvement.
    template <typename EnergyFn>
    void propose_path_mutation(ObjectiveState& state, bool& feasible, double& energy,
                               std::mt19937_64& rng, EnergyFn energy_of) const {
        std::size_t si = model_.vertex_index(model_.start());
        std::size_t gi = model_.vertex_index(model_.goal());
        std::vector<std::uint8_t> candidate;
        if (!feasible) {
            auto path = random_lattice_path(model_, si, gi, rng);
            if (path.empty()) return;
            candidate = path_to_selection(model_, path);
        } else {
            auto path = active_vertex_path(model_, state.x());
            if (path.size() < 2) return;
            std::size_t a = uniform_index(rng, path.size());
            std::size_t b = uniform_index(rng, path.size());
            if (a == b) return;
            if (b < a) std::swap(a, b);
            auto alt = random_lattice_path(model_, path[a], path[b], rng);
            if (alt.empty()) return;
            candidate = state.x();
            for (std::size_t i = a; i + 1 <= b && i + 1 < path.size(); ++i) {
                EdgeKey key = EdgeKey::make(model_.vertex(path[i]), model_.vertex(path[i + 1]));
                candidate[*model_.edge_index(key)] = 0;
            }
            for (std::size_t i = 0; i + 1 < alt.size(); ++i) {
                EdgeKey key = EdgeKey::make(model_.vertex(alt[i]), model_.vertex(alt[i + 1]));
                candidate[*model_.edge_index(key)] = 1;
            }
        }

        std::vector<std::size_t> flipped;
        for (std::size_t e = 0; e < candidate.size(); ++e) {
            if (candidate[e] != state.x()[e]) {
                state.flip(e);
                flipped.push_back(e);
            }
        }
        if (flipped.empty()) return;
        bool new_feasible = state.feasible();
        double new_energy = energy_of(state.objective(), new_feasible);
        // Path moves are structural repairs; accept only improvements so
        // the walk through route space stays monotone under this move.
        if (new_energy <= energy) {
            energy = new_energy;
            feasible = new_feasible;
        } else {
            for (std::size_t e : flipped) state.flip(e);
        }
    }

    const CqmModel& model_;
    const AnnealSchedule& schedule_;
    double infeasibility_penalty_{0.0};
};

}  // namespace

SolverResult solve_anneal(const CqmModel& model, const AnnealSchedule& schedule,
                          AnnealTrace* trace) {
    auto t0 = Clock::now();
    schedule.validate();
    AnnealContext context(model, schedule);

    bool has_deadline = schedule.time_budget_s > 0.0;
    Clock::time_point deadline =
        t0 + std::chrono::duration_cast<Clock::duration>(
                 std::chrono::duration<double>(has_deadline ? schedule.time_budget_s : 0.0));

    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::size_t threads = schedule.threads > 0 ? static_cast<std::size_t>(schedule.threads)
                                               : static_cast<std::size_t>(hw);
    threads = std::max<std::size_t>(1, threads);

    std::vector<RestartOutcome> outcomes;
    std::mutex merge_mutex;
    std::atomic<std::uint64_t> next_restart{0};
    std::uint64_t restart_cap =
        has_deadline ? std::numeric_limits<std::uint64_t>::max()
                     : static_cast<std::uint64_t>(schedule.restarts);

    auto worker = [&]() {
        while (true) {
            std::uint64_t index = next_restart.fetch_add(1);
            if (index >= restart_cap) return;
            if (has_deadline && index > 0 && Clock::now() >= deadline) return;
            RestartOutcome outcome = context.run_restart(index, deadline, has_deadline);
            std::lock_guard<std::mutex> lock(merge_mutex);
            outcomes.push_back(std::move(outcome));
            if (has_deadline && Clock::now() >= deadline &&
                next_restart.load() < restart_cap) {
                next_restart.store(restart_cap);
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Deterministic associative merge under the result total order.
    std::size_t best_index = 0;
    for (std::size_t i = 1; i < outcomes.size(); ++i) {
        if (result_orders_before(model, outcomes[i].x, outcomes[i].objective,
                                 outcomes[best_index].x, outcomes[best_index].objective)) {
            best_index = i;
        }
    }
    if (trace) {
        trace->best_energy.clear();
        trace->restart_offsets.clear();
        for (const auto& o : outcomes) {
            trace->restart_offsets.push_back(trace->best_energy.size());
            trace->best_energy.insert(trace->best_energy.end(), o.best_energy_trace.begin(),
                                      o.best_energy_trace.end());
        }
    }

    SolverResult result =
        finish_result(model, outcomes[best_index].x, "anneal", schedule.seed, t0);
    return result;
}

SolverResult solve_external(const CqmModel& model, const AdapterConfig& config) {
    auto t0 = Clock::now();
    if (config.command.empty()) {
        throw AdapterError("no adapter command configured");
    }

    namespace fs = std::filesystem;
    fs::path workdir;
    bool cleanup = false;
    if (!config.workdir.empty()) {
        workdir = config.workdir;
        fs::create_directories(workdir);
    } else {
        workdir = fs::temp_directory_path() /
                  ("hexroute_adapter_" + std::to_string(::getpid()) + "_" +
                   std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(workdir);
        cleanup = true;
    }
    fs::path model_path = workdir / "model.cqm";
    fs::path solution_path = workdir / "solution.txt";

    {
        std::ofstream out(model_path);
        if (!out) throw IoError("cannot write adapter model file: " + model_path.string());
        model.dump(out);
    }

    std::string command =
        config.command + " '" + model_path.string() + "' '" + solution_path.string() + "'";
    int raw_status = std::system(command.c_str());
    int exit_code = -1;
    if (raw_status != -1) {
        exit_code = WIFEXITED(raw_status) ? WEXITSTATUS(raw_status) : -1;
    }

    auto cleanup_files = [&]() {
        if (cleanup) {
            std::error_code ec;
            fs::remove_all(workdir, ec);
        }
    };

    if (exit_code != 0 && exit_code != 2) {
        cleanup_files();
        throw AdapterError("adapter exited with status " + std::to_string(exit_code));
    }

    std::vector<std::uint8_t> x(model.edge_count(), 0);
    std::optional<double> reported_objective;
    if (exit_code == 0) {
        std::ifstream in(solution_path);
        if (!in) {
            cleanup_files();
            throw AdapterError("adapter produced no solution file");
        }
        std::map<std::string, std::size_t> names;
        for (std::size_t e = 0; e < model.edge_count(); ++e) names[model.variable_name(e)] = e;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string name;
            double value = 0.0;
            if (!(ss >> name >> value)) {
                cleanup_files();
                throw AdapterError("unparseable solution line " + std::to_string(lineno));
            }
            if (name == "objective") {
                reported_objective = value;
            } else if (name.rfind("x_", 0) == 0) {
                auto it = names.find(name);
                if (it == names.end()) {
                    cleanup_files();
                    throw AdapterError("unknown variable in solution: " + name);
                }
                x[it->second] = value > 0.5 ? 1 : 0;
            } else if (name.rfind("f_", 0) == 0 || name.rfind("z_", 0) == 0 ||
                       name.rfind("len_", 0) == 0) {
                // Flow and slack values are recomputed from x.
            } else {
                cleanup_files();
                throw AdapterError("unknown variable in solution: " + name);
            }
        }
    }
    cleanup_files();

    SolverResult result = finish_result(model, x, "external", 0, t0);
    if (exit_code == 2) {
        result.feasible = false;
        result.violations.push_back({"adapter_reported_infeasible", 1.0});
    }
    if (reported_objective) {
        double denom = std::max(1.0, std::fabs(result.objective));
        double mismatch = std::fabs(*reported_objective - result.objective) / denom;
        if (mismatch > 1e-6) {
            result.violations.push_back({"adapter_objective_discrepancy", mismatch});
            result.feasible = false;
        }
    }
    return result;
}

std::string result_to_json(const SolverResult& result) {
    std::ostringstream os;
    os << "{\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", result.objective);
    os << "  \"objective\": " << buf << ",\n";
    os << "  \"feasible\": " << (result.feasible ? "true" : "false") << ",\n";
    os << "  \"solver_name\": \"" << result.solver_name << "\",\n";
    os << "  \"seed\": " << result.seed << ",\n";
    std::snprintf(buf, sizeof(buf), "%.3f", result.wall_time_s);
    os << "  \"wall_time_s\": " << buf << ",\n";
    os << "  \"violations\": [";
    for (std::size_t i = 0; i < result.violations.size(); ++i) {
        if (i) os << ", ";
        std::snprintf(buf, sizeof(buf), "%.9g", result.violations[i].magnitude);
        os << "{\"constraint\": \"" << result.violations[i].constraint
           << "\", \"magnitude\": " << buf << "}";
    }
    os << "]\n}\n";
    return os.str();
}

}  // namespace hexroute
