#include "hexroute/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <deque>
#include <ostream>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Worst-case neighbor aggregate with the missing-data rule: degenerate
// calibration span -> penalty identically 0; otherwise a missing value on
// either endpoint means maximal risk (penalty 1).
double hazard_penalty(const std::optional<double>& vi, const std::optional<double>& vj,
                      double warn, double maxv, bool degenerate) {
    if (degenerate) return 0.0;
    if (!vi || !vj) return 1.0;
    double agg = std::max(*vi, *vj);
    return clamp01((agg - warn) / (maxv - warn));
}

void append(std::string& s, const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    s += buf;
}

}  // namespace

void Weights::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(k_safety) || !ok(w_thick) || !ok(w_age) || !ok(w_conc) || !ok(w_snow) || !ok(w_side) ||
        !ok(w_lat) || !ok(w_turn) || !ok(w_deg) || !ok(w_len) || !ok(w_drift)) {
        throw ValidationError("weights must be finite and nonnegative");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw ValidationError("connectivity constant h must be positive");
    }
}

EdgeKey EdgeKey::make(CellId x, CellId y) {
    if (x == y) throw ValidationError("edge endpoints must differ");
    if (y < x) std::swap(x, y);
    return EdgeKey{x, y};
}

PairPenalties pair_penalties(const CorridorGrid& grid, const EdgeKey& edge,
                             const CellFeatures* fi, const CellFeatures* fj,
                             const Calibration& cal, const GreatCircleAxis& axis,
                             const Weights& weights) {
    PairPenalties pp;

    auto field = [&](auto accessor) -> std::pair<std::optional<double>, std::optional<double>> {
        return {fi ? accessor(*fi) : std::nullopt, fj ? accessor(*fj) : std::nullopt};
    };

    {
        auto [a, b] = field([](const CellFeatures& f) { return f.thickness_m; });
        pp.thickness = hazard_penalty(a, b, cal.warn_thickness, cal.max_thickness,
                                      cal.thickness_degenerate());
    }
    {
        auto [a, b] = field([](const CellFeatures& f) { return f.age_yr; });
        pp.age = hazard_penalty(a, b, cal.warn_age, cal.max_age, cal.age_degenerate());
    }
    {
        auto [a, b] = field([](const CellFeatures& f) { return f.snow_m; });
        pp.snow = hazard_penalty(a, b, cal.warn_snow, cal.max_snow, cal.snow_degenerate());
    }
    {
        // Concentration hazard points the other way: low cover is risk.
        auto [a, b] = field([](const CellFeatures& f) { return f.concentration; });
        if (cal.concentration_degenerate()) {
            pp.concentration = 0.0;
        } else if (!a || !b) {
            pp.concentration = 1.0;
        } else {
            double agg = std::min(*a, *b);
            pp.concentration = clamp01((cal.warn_concentration - agg) /
                                       (cal.warn_concentration - cal.min_concentration));
        }
    }

    if (weights.drift_enabled) {
        auto speed = [](const CellFeatures* f) -> std::optional<double> {
            if (!f || !f->drift_u || !f->drift_v) return std::nullopt;
            return std::hypot(*f->drift_u, *f->drift_v);
        };
        auto a = speed(fi), b = speed(fj);
        if (cal.max_drift_speed <= 0.0) {
            pp.drift = 0.0;
        } else if (!a || !b) {
            pp.drift = 1.0;
        } else {
            pp.drift = clamp01(std::max(*a, *b) / cal.max_drift_speed);
        }
    }

    if (weights.alignment == AlignmentStrategy::BearingCrosstrack && axis.length_km() > 1e-9) {
        GeoPoint ci = grid.cell(edge.a).centroid;
        GeoPoint cj = grid.cell(edge.b).centroid;
        GeoPoint mid = great_circle_point(ci, cj, 0.5);
        pp.lambda = axis.cross_track_km(mid) / axis.length_km();
        double edge_bearing = initial_bearing_deg(ci, cj);
        double track_bearing = axis.track_bearing_at_nearest_deg(mid);
        double delta = (edge_bearing - track_bearing) * kPi / 180.0;
        pp.sigma = 0.5 * (1.0 - std::cos(delta));
    }

    return pp;
}

double edge_cost(const PairPenalties& pp, const Weights& w) {
    double environmental = w.w_thick * pp.thickness + w.w_age * pp.age +
                           w.w_conc * pp.concentration + w.w_snow * pp.snow;
    if (w.drift_enabled) environmental += w.w_drift * pp.drift;
    return w.k_safety * environmental + w.w_side * pp.sigma + w.w_lat * pp.lambda + w.h;
}

double turn_penalty(const EdgeKey& e1, const EdgeKey& e2, const CorridorGrid& grid,
                    const Weights& w) {
    CellId shared;
    int shared_count = 0;
    for (CellId u : {e1.a, e1.b}) {
        if (u == e2.a || u == e2.b) {
            shared = u;
            ++shared_count;
        }
    }
    if (shared_count != 1) {
        throw ValidationError("turn penalty requires edges sharing exactly one vertex");
    }
    CellId i = (e1.a == shared) ? e1.b : e1.a;
    CellId k = (e2.a == shared) ? e2.b : e2.a;
    double theta = turn_angle_deg(grid.cell(i).centroid, grid.cell(shared).centroid,
                                  grid.cell(k).centroid);
    return w.w_turn * (1.0 - std::cos(theta * kPi / 180.0));
}

PathBounds PathBounds::defaults(const CorridorGrid& grid, CellId s, CellId g) {
    (void)grid;
    int lmin = std::max(1, hex_distance(s, g));
    return PathBounds{lmin, 3 * lmin};
}

std::optional<std::size_t> CqmModel::edge_index(const EdgeKey& key) const {
    auto it = edge_lookup_.find(key);
    if (it == edge_lookup_.end()) return std::nullopt;
    return it->second;
}

std::size_t CqmModel::vertex_index(CellId id) const {
    auto it = vertex_lookup_.find(id);
    if (it == vertex_lookup_.end()) throw ValidationError("vertex not in model");
    return it->second;
}

std::string CqmModel::variable_name(std::size_t e) const {
    return "x_" + std::to_string(edges_[e].a.raw()) + "_" + std::to_string(edges_[e].b.raw());
}

CqmModel build_model(const CorridorGrid& grid, const std::vector<CellFeatures>& features,
                     const Calibration& cal, const Weights& weights, CellId s, CellId g,
                     const PathBounds& bounds) {
    weights.validate();
    if (s == g) throw ValidationError("start and goal must differ");
    if (!grid.contains(s) || !grid.cell(s).is_ocean) {
        throw ValidationError("start cell is not an ocean cell of the grid");
    }
    if (!grid.contains(g) || !grid.cell(g).is_ocean) {
        throw ValidationError("goal cell is not an ocean cell of the grid");
    }

    CqmModel model;
    model.start_ = s;
    model.goal_ = g;
    model.weights_ = weights;
    model.calibration_hash_ = cal.hash();

    // Vertices in sorted id order; edges in sorted canonical order.
    for (const auto& [id, cell] : grid.cells()) {
        model.vertex_lookup_.emplace(id, static_cast<std::uint32_t>(model.vertices_.size()));
        model.vertices_.push_back(id);
        model.degree_target_.push_back((id == s || id == g) ? 1 : 2);
    }
    for (const auto& [id, cell] : grid.cells()) {
        for (CellId nb : cell.neighbors) {
            if (id < nb) {
                EdgeKey key = EdgeKey::make(id, nb);
                model.edge_lookup_.emplace(key, static_cast<std::uint32_t>(model.edges_.size()));
                model.edges_.push_back(key);
            }
        }
    }

    // Reachability gate before any solver sees the model.
    {
        std::vector<std::uint8_t> seen(model.vertices_.size(), 0);
        std::deque<CellId> queue{s};
        seen[model.vertex_index(s)] = 1;
        bool reached = false;
        while (!queue.empty() && !reached) {
            CellId u = queue.front();
            queue.pop_front();
            for (CellId nb : grid.cell(u).neighbors) {
                std::size_t vi = model.vertex_index(nb);
                if (!seen[vi]) {
                    seen[vi] = 1;
                    if (nb == g) reached = true;
                    queue.push_back(nb);
                }
            }
        }
        if (!reached) {
            throw InfeasibleError("start and goal are disconnected in the corridor graph");
        }
    }

    std::map<CellId, const CellFeatures*> by_cell;
    for (const auto& f : features) by_cell[f.cell] = &f;

    GreatCircleAxis axis(grid.cell(s).centroid, grid.cell(g).centroid);
    model.linear_.reserve(model.edges_.size());
    for (const auto& key : model.edges_) {
        auto fi = by_cell.find(key.a);
        auto fj = by_cell.find(key.b);
        PairPenalties pp =
            pair_penalties(grid, key, fi == by_cell.end() ? nullptr : fi->second,
                           fj == by_cell.end() ? nullptr : fj->second, cal, axis, weights);
        model.linear_.push_back(edge_cost(pp, weights));
    }

    model.incident_.resize(model.vertices_.size());
    for (std::size_t e = 0; e < model.edges_.size(); ++e) {
        model.incident_[model.vertex_index(model.edges_[e].a)].push_back(
            static_cast<std::uint32_t>(e));
        model.incident_[model.vertex_index(model.edges_[e].b)].push_back(
            static_cast<std::uint32_t>(e));
    }

    // One quadratic term per incident edge pair; the coefficient is the
    // curvature penalty at the shared vertex (zero when collinear).
    for (std::size_t vi = 0; vi < model.vertices_.size(); ++vi) {
        const auto& inc = model.incident_[vi];
        for (std::size_t i = 0; i < inc.size(); ++i) {
            for (std::size_t j = i + 1; j < inc.size(); ++j) {
                std::uint32_t e1 = std::min(inc[i], inc[j]);
                std::uint32_t e2 = std::max(inc[i], inc[j]);
                double coeff =
                    turn_penalty(model.edges_[e1], model.edges_[e2], grid, weights);
                model.turn_terms_.push_back({e1, e2, model.vertices_[vi], coeff});
            }
        }
    }
    std::sort(model.turn_terms_.begin(), model.turn_terms_.end(),
              [](const TurnTerm& a, const TurnTerm& b) {
                  return std::tie(a.e1, a.e2) < std::tie(b.e1, b.e2);
              });

    model.bounds_ = bounds;
    if (model.bounds_.l_min <= 0 || model.bounds_.l_max <= 0) {
        model.bounds_ = PathBounds::defaults(grid, s, g);
    }
    if (model.bounds_.l_min > model.bounds_.l_max) {
        throw ValidationError("path bounds require l_min <= l_max");
    }
    return model;
}

void CqmModel::dump(std::ostream& os) const {
    std::string out;
    out.reserve(1024 + edges_.size() * 64 + turn_terms_.size() * 48);
    append(out, "cqm/1\n");
    append(out, "meta s %llu g %llu lmin %d lmax %d calhash %016llx\n",
           static_cast<unsigned long long>(start_.raw()),
           static_cast<unsigned long long>(goal_.raw()), bounds_.l_min, bounds_.l_max,
           static_cast<unsigned long long>(calibration_hash_));
    append(out,
           "weights k_safety %.17g w_thick %.17g w_age %.17g w_conc %.17g w_snow %.17g "
           "w_side %.17g w_lat %.17g h %.17g w_turn %.17g w_deg %.17g w_len %.17g "
           "drift %d w_drift %.17g alignment %s\n",
           weights_.k_safety, weights_.w_thick, weights_.w_age, weights_.w_conc, weights_.w_snow,
           weights_.w_side, weights_.w_lat, weights_.h, weights_.w_turn, weights_.w_deg,
           weights_.w_len, weights_.drift_enabled ? 1 : 0, weights_.w_drift,
           weights_.alignment == AlignmentStrategy::BearingCrosstrack ? "bearing-crosstrack"
                                                                      : "off");
    append(out, "vertices %zu\n", vertices_.size());
    for (std::size_t vi = 0; vi < vertices_.size(); ++vi) {
        append(out, "vertex %llu %d\n", static_cast<unsigned long long>(vertices_[vi].raw()),
               degree_target_[vi]);
    }
    append(out, "edges %zu\n", edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        append(out, "edge %zu %llu %llu %.17g\n", e,
               static_cast<unsigned long long>(edges_[e].a.raw()),
               static_cast<unsigned long long>(edges_[e].b.raw()), linear_[e]);
    }
    append(out, "quadratic %zu\n", turn_terms_.size());
    for (const auto& t : turn_terms_) {
        append(out, "pair %u %u %llu %.17g\n", t.e1, t.e2,
               static_cast<unsigned long long>(t.pivot.raw()), t.coeff);
    }
    // Constraint sections in normal form; every right-hand side is 1, -1
    // or 0 (constants folded into the expression).
    append(out, "constraints flow %zu\n", vertices_.size());
    for (std::size_t vi = 0; vi < vertices_.size(); ++vi) {
        int rhs = vertices_[vi] == start_ ? 1 : (vertices_[vi] == goal_ ? -1 : 0);
        append(out, "flow %llu %d\n", static_cast<unsigned long long>(vertices_[vi].raw()), rhs);
    }
    append(out, "constraints coupling %zu\n", edges_.size() * 2);
    append(out, "constraints degree_hinge %zu w_deg %.17g\n", vertices_.size(), weights_.w_deg);
    append(out, "constraints length_hinge 2 w_len %.17g\n", weights_.w_len);
    os << out;
}

std::optional<std::vector<CellId>> active_path(const CqmModel& model,
                                               const std::vector<std::uint8_t>& x) {
    std::size_t n = model.vertex_count();
    std::vector<std::int32_t> parent(n, -1);
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t si = model.vertex_index(model.start());
    std::size_t gi = model.vertex_index(model.goal());
    std::deque<std::size_t> queue{si};
    seen[si] = 1;
    while (!queue.empty()) {
        std::size_t u = queue.front();
        queue.pop_front();
        if (u == gi) break;
        for (std::uint32_t e : model.incident_edges(u)) {
            if (!x[e]) continue;
            const EdgeKey& key = model.edge(e);
            std::size_t v = model.vertex_index(key.a == model.vertex(u) ? key.b : key.a);
            if (!seen[v]) {
                seen[v] = 1;
                parent[v] = static_cast<std::int32_t>(u);
                queue.push_back(v);
            }
        }
    }
    if (!seen[gi]) return std::nullopt;
    std::vector<CellId> path;
    for (std::int32_t v = static_cast<std::int32_t>(gi); v != -1; v = parent[v]) {
        path.push_back(model.vertex(static_cast<std::size_t>(v)));
        if (static_cast<std::size_t>(v) == si) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

Assignment complete_assignment(const CqmModel& model, const std::vector<std::uint8_t>& x) {
    if (x.size() != model.edge_count()) {
        throw ValidationError("assignment length does not match model edge count");
    }
    Assignment a;
    a.x = x;
    a.flow.assign(model.edge_count() * 2, 0.0);
    a.degree_slack.assign(model.vertex_count(), 0.0);

    if (auto path = active_path(model, x)) {
        for (std::size_t i = 0; i + 1 < path->size(); ++i) {
            EdgeKey key = EdgeKey::make((*path)[i], (*path)[i + 1]);
            std::size_t e = *model.edge_index(key);
            bool forward = (*path)[i] == key.a;
            a.flow[2 * e + (forward ? 0 : 1)] = 1.0;
        }
    }

    std::vector<int> degree(model.vertex_count(), 0);
    int active = 0;
    for (std::size_t e = 0; e < x.size(); ++e) {
        if (!x[e]) continue;
        ++active;
        ++degree[model.vertex_index(model.edge(e).a)];
        ++degree[model.vertex_index(model.edge(e).b)];
    }
    for (std::size_t vi = 0; vi < model.vertex_count(); ++vi) {
        a.degree_slack[vi] = std::max(0, degree[vi] - model.degree_target(vi));
    }
    a.len_shortfall = std::max(0, model.bounds().l_min - active);
    a.len_excess = std::max(0, active - model.bounds().l_max);
    return a;
}

Evaluation evaluate_assignment(const CqmModel& model, const Assignment& assignment,
                               double tolerance) {
    if (assignment.x.size() != model.edge_count() ||
        assignment.flow.size() != model.edge_count() * 2 ||
        assignment.degree_slack.size() != model.vertex_count()) {
        throw ValidationError("assignment shape does not match model");
    }

    Evaluation ev;
    const Weights& w = model.weights();

    double obj = 0.0;
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        if (assignment.x[e]) obj += model.linear_cost(e);
    }
    for (const auto& t : model.turn_terms()) {
        if (assignment.x[t.e1] && assignment.x[t.e2]) obj += t.coeff;
    }
    for (double z : assignment.degree_slack) obj += w.w_deg * z * z;
    obj += w.w_len * (assignment.len_shortfall * assignment.len_shortfall +
                      assignment.len_excess * assignment.len_excess);
    ev.objective = obj;

    auto violate = [&](const std::string& name, double magnitude) {
        if (magnitude > tolerance) ev.violations.push_back({name, magnitude});
    };

    // Flow conservation: net outflow +1 at s, -1 at g, 0 elsewhere.
    std::vector<double> net(model.vertex_count(), 0.0);
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        double fwd = assignment.flow[2 * e];
        double bwd = assignment.flow[2 * e + 1];
        std::size_t ai = model.vertex_index(model.edge(e).a);
        std::size_t bi = model.vertex_index(model.edge(e).b);
        net[ai] += fwd - bwd;
        net[bi] += bwd - fwd;
        double x = assignment.x[e] ? 1.0 : 0.0;
        violate("cap " + model.variable_name(e) + " fwd", std::max(fwd - x, -fwd));
        violate("cap " + model.variable_name(e) + " bwd", std::max(bwd - x, -bwd));
    }
    for (std::size_t vi = 0; vi < model.vertex_count(); ++vi) {
        double target = model.vertex(vi) == model.start()  ? 1.0
                        : model.vertex(vi) == model.goal() ? -1.0
                                                           : 0.0;
        violate("flow " + std::to_string(model.vertex(vi).raw()),
                std::fabs(net[vi] - target));
    }

    std::vector<int> degree(model.vertex_count(), 0);
    int active = 0;
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        if (!assignment.x[e]) continue;
        ++active;
        ++degree[model.vertex_index(model.edge(e).a)];
        ++degree[model.vertex_index(model.edge(e).b)];
    }
    for (std::size_t vi = 0; vi < model.vertex_count(); ++vi) {
        double z = assignment.degree_slack[vi];
        violate("degree_slack_nonneg " + std::to_string(model.vertex(vi).raw()), -z);
        violate("degree_hinge " + std::to_string(model.vertex(vi).raw()),
                (degree[vi] - model.degree_target(vi)) - z);
    }
    violate("len_shortfall_nonneg", -assignment.len_shortfall);
    violate("len_excess_nonneg", -assignment.len_excess);
    violate("len_shortfall_hinge",
            (model.bounds().l_min - active) - assignment.len_shortfall);
    violate("len_excess_hinge", (active - model.bounds().l_max) - assignment.len_excess);

    ev.feasible = ev.violations.empty();
    return ev;
}

}  // namespace hexroute
