#include "hexroute/recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

constexpr double kPolylineStepKm = 25.0;
constexpr double kCo2PerKm = 500.0;  // 50,000 t * 10 gCO2/t-km / 1000

// Lexicographic (relink cost, hop count) shortest path over the grid,
// with active edges free. Returns the vertex sequence or empty.
std::vector<CellId> relink_path(const CqmModel& model, const CorridorGrid& grid,
                                const std::set<std::uint32_t>& active, bool active_only) {
    struct Label {
        double cost;
        int hops;
        CellId cell;
        bool operator>(const Label& other) const {
            if (cost != other.cost) return cost > other.cost;
            if (hops != other.hops) return hops > other.hops;
            return other.cell < cell;
        }
    };

    std::map<CellId, std::pair<double, int>> best;
    std::map<CellId, CellId> parent;
    std::priority_queue<Label, std::vector<Label>, std::greater<Label>> frontier;
    frontier.push({0.0, 0, model.start()});
    best[model.start()] = {0.0, 0};

    while (!frontier.empty()) {
        Label top = frontier.top();
        frontier.pop();
        auto it = best.find(top.cell);
        if (it != best.end() &&
            (top.cost > it->second.first ||
             (top.cost == it->second.first && top.hops > it->second.second))) {
            continue;
        }
        if (top.cell == model.goal()) break;
        for (CellId nb : grid.cell(top.cell).neighbors) {
            EdgeKey key = EdgeKey::make(top.cell, nb);
            auto idx = model.edge_index(key);
            if (!idx) continue;
            bool is_active = active.count(static_cast<std::uint32_t>(*idx)) != 0;
            if (active_only && !is_active) continue;
            double step = is_active ? 0.0 : model.linear_cost(*idx);
            if (active_only) step = model.linear_cost(*idx);
            Label next{top.cost + step, top.hops + 1, nb};
            auto bi = best.find(nb);
            if (bi == best.end() || next.cost < bi->second.first ||
                (next.cost == bi->second.first && next.hops < bi->second.second)) {
                best[nb] = {next.cost, next.hops};
                parent[nb] = top.cell;
                frontier.push(next);
            }
        }
    }

    std::vector<CellId> path;
    if (!best.count(model.goal())) return path;
    CellId cur = model.goal();
    path.push_back(cur);
    while (cur != model.start()) {
        cur = parent.at(cur);
        path.push_back(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

// Follow positive-flow hints from the start; empty when the hints do not
// describe one clean simple walk to the goal.
std::vector<CellId> follow_flow(const CqmModel& model, const ActiveSubgraph& active) {
    std::map<CellId, std::vector<CellId>> out;
    for (const auto& [from, to] : active.flow_hints) out[from].push_back(to);
    std::vector<CellId> path{model.start()};
    std::set<CellId> seen{model.start()};
    CellId cur = model.start();
    for (std::size_t guard = 0; guard <= active.flow_hints.size(); ++guard) {
        if (cur == model.goal()) return path;
        auto it = out.find(cur);
        if (it == out.end() || it->second.size() != 1) return {};
        CellId next = it->second.front();
        if (seen.count(next)) return {};
        seen.insert(next);
        path.push_back(next);
        cur = next;
    }
    return {};
}

void append_segment_points(std::vector<GeoPoint>& polyline, const GeoPoint& from,
                           const GeoPoint& to) {
    double dist = haversine_km(from, to);
    int steps = std::max(1, static_cast<int>(std::ceil(dist / kPolylineStepKm)));
    for (int k = 1; k <= steps; ++k) {
        polyline.push_back(great_circle_point(from, to, static_cast<double>(k) / steps));
    }
}

bool crosses_antimeridian(const GeoPoint& a, const GeoPoint& b) {
    return std::fabs(b.lon - a.lon) > 180.0;
}

// Latitude where the great circle a->b meets the +/-180 meridian,
// resolved by bisection on the slerp parameter (segments are short).
double crossing_latitude(const GeoPoint& a, const GeoPoint& b) {
    double lo = 0.0, hi = 1.0;
    for (int iter = 0; iter < 60; ++iter) {
        double mid = 0.5 * (lo + hi);
        GeoPoint p = great_circle_point(a, b, mid);
        if (crosses_antimeridian(a, p)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return great_circle_point(a, b, lo).lat;
}

}  // namespace

ActiveSubgraph extract_active(const CqmModel& model, const SolverResult& result,
                              double threshold) {
    ActiveSubgraph out;
    const Assignment& a = result.assignment;
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        if (static_cast<double>(a.x[e]) > threshold) {
            out.edges.push_back(static_cast<std::uint32_t>(e));
        }
    }
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        const EdgeKey& key = model.edge(e);
        if (a.flow[2 * e] > 0.0) out.flow_hints.push_back({key.a, key.b});
        if (a.flow[2 * e + 1] > 0.0) out.flow_hints.push_back({key.b, key.a});
    }
    return out;
}

Route reconstruct(const ActiveSubgraph& active, const CqmModel& model,
                  const CorridorGrid& grid) {
    std::set<std::uint32_t> active_set(active.edges.begin(), active.edges.end());

    // Is the goal reachable inside the activated subgraph?
    std::vector<std::uint8_t> x(model.edge_count(), 0);
    for (std::uint32_t e : active.edges) x[e] = 1;
    bool connected = active_path(model, x).has_value();

    std::vector<CellId> cells;
    if (connected) {
        cells = follow_flow(model, active);
        if (cells.empty()) {
            cells = relink_path(model, grid, active_set, /*active_only=*/true);
        }
    }
    if (cells.empty()) {
        cells = relink_path(model, grid, active_set, /*active_only=*/false);
    }
    if (cells.empty()) {
        throw InfeasibleError("no start-goal route exists even in the full corridor graph");
    }

    Route route;
    route.cells = cells;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        EdgeKey key = EdgeKey::make(cells[i], cells[i + 1]);
        auto idx = model.edge_index(key);
        if (idx && !active_set.count(static_cast<std::uint32_t>(*idx))) {
            route.relinked_edges.push_back(key);
        }
    }

    route.polyline.push_back(grid.cell(cells.front()).centroid);
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        append_segment_points(route.polyline, grid.cell(cells[i]).centroid,
                              grid.cell(cells[i + 1]).centroid);
    }
    return route;
}

RouteMetrics metrics(const Route& route) {
    if (route.cells.size() < 2) {
        throw ValidationError("route metrics require at least 2 cells");
    }
    RouteMetrics rm;
    // Exact endpoint haversine between consecutive cells; the sampled
    // polyline lies on the same geodesics, so its sum telescopes to the
    // same value.
    for (std::size_t i = 0; i + 1 < route.cells.size(); ++i) {
        rm.length_km += haversine_km(cell_centroid(route.cells[i]),
                                     cell_centroid(route.cells[i + 1]));
    }
    constexpr double kDegToRad = 3.141592653589793238462643383279502884 / 180.0;
    std::size_t interior = route.cells.size() - 2;
    for (std::size_t i = 1; i + 1 < route.cells.size(); ++i) {
        double theta = turn_angle_deg(cell_centroid(route.cells[i - 1]),
                                      cell_centroid(route.cells[i]),
                                      cell_centroid(route.cells[i + 1]));
        rm.zigzag_raw += 1.0 - std::cos(theta * kDegToRad);
    }
    rm.zigzag_pct = interior > 0 ? 100.0 * rm.zigzag_raw / (2.0 * static_cast<double>(interior))
                                 : 0.0;
    rm.co2_kg = co2_proxy_kg(rm.length_km);
    rm.selected_nodes = static_cast<int>(route.cells.size());
    return rm;
}

double co2_proxy_kg(double length_km) { return length_km * kCo2PerKm; }

std::string metrics_csv_header() {
    return "solver,nodes,quad_terms,objective,selected_nodes,km,zigzag_pct,co2_kg,time_s";
}

std::string metrics_csv_row(const std::string& solver, std::size_t nodes, std::size_t quad_terms,
                            double objective, const RouteMetrics& rm, double time_s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%.6f,%d,%.4f,%.4f,%.2f,%.3f", solver.c_str(),
                  nodes, quad_terms, objective, rm.selected_nodes, rm.length_km, rm.zigzag_pct,
                  rm.co2_kg, time_s);
    return buf;
}

nlohmann::json route_geojson(const Route& route, const RouteMetrics& rm) {
    using nlohmann::json;

    // Split the polyline into antimeridian-safe segments.
    std::vector<std::vector<std::array<double, 2>>> segments;
    std::vector<std::array<double, 2>> current;
    auto push = [&](double lon, double lat) { current.push_back({lon, lat}); };
    const auto& pl = route.polyline;
    if (!pl.empty()) push(pl[0].lon, pl[0].lat);
    for (std::size_t i = 0; i + 1 < pl.size(); ++i) {
        const GeoPoint& a = pl[i];
        const GeoPoint& b = pl[i + 1];
        if (crosses_antimeridian(a, b)) {
            double lat = crossing_latitude(a, b);
            double east = a.lon > 0 ? 180.0 : -180.0;
            push(east, lat);
            segments.push_back(std::move(current));
            current.clear();
            push(-east, lat);
        }
        push(b.lon, b.lat);
    }
    if (!current.empty()) segments.push_back(std::move(current));

    json line;
    if (segments.size() == 1) {
        line = {{"type", "LineString"}, {"coordinates", segments[0]}};
    } else {
        line = {{"type", "MultiLineString"}, {"coordinates", segments}};
    }

    json relinked = json::array();
    for (const auto& e : route.relinked_edges) {
        relinked.push_back({e.a.raw(), e.b.raw()});
    }
    json properties = {{"length_km", rm.length_km},
                       {"zigzag_raw", rm.zigzag_raw},
                       {"zigzag_pct", rm.zigzag_pct},
                       {"co2_kg", rm.co2_kg},
                       {"selected_nodes", rm.selected_nodes},
                       {"relinked_edges", relinked}};

    json features = json::array();
    features.push_back({{"type", "Feature"}, {"geometry", line}, {"properties", properties}});
    for (CellId id : route.cells) {
        GeoPoint c = cell_centroid(id);
        features.push_back(
            {{"type", "Feature"},
             {"geometry", {{"type", "Point"}, {"coordinates", {c.lon, c.lat}}}},
             {"properties", {{"cell_id", id.raw()}}}});
    }
    return {{"type", "FeatureCollection"}, {"features", features}};
}

void export_geojson(const Route& route, const RouteMetrics& rm, const std::string& path) {
    nlohmann::json doc = route_geojson(route, rm);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write GeoJSON: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing GeoJSON: " + path);
}

RouteCheck validate_route(const Route& route, const CqmModel& model, const CorridorGrid& grid) {
    RouteCheck check;
    const auto& cells = route.cells;
    if (cells.size() < 2) return check;

    std::set<CellId> unique(cells.begin(), cells.end());
    check.simple = unique.size() == cells.size();

    check.consecutive_neighbors = true;
    check.antimeridian_ok = true;
    double pitch = cell_pitch_km(grid.resolution());
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        const auto& nbs = grid.cell(cells[i]).neighbors;
        if (std::find(nbs.begin(), nbs.end(), cells[i + 1]) == nbs.end()) {
            check.consecutive_neighbors = false;
        }
        if (haversine_km(grid.cell(cells[i]).centroid, grid.cell(cells[i + 1]).centroid) >
            2.0 * pitch) {
            check.antimeridian_ok = false;
        }
    }

    check.endpoints_ok = cells.front() == model.start() && cells.back() == model.goal();

    // A simple in-bounds path keeps both soft penalties at zero.
    std::vector<std::uint8_t> x(model.edge_count(), 0);
    bool edges_known = true;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        auto idx = model.edge_index(EdgeKey::make(cells[i], cells[i + 1]));
        if (!idx) {
            edges_known = false;
            break;
        }
        x[*idx] = 1;
    }
    if (edges_known) {
        Assignment a = complete_assignment(model, x);
        int active = static_cast<int>(cells.size()) - 1;
        bool in_bounds = active >= model.bounds().l_min && active <= model.bounds().l_max;
        double phi = 0.0;
        for (double z : a.degree_slack) phi += z * z;
        phi += a.len_shortfall * a.len_shortfall + a.len_excess * a.len_excess;
        check.phi_zero = !in_bounds || phi == 0.0;
    }
    return check;
}

}  // namespace hexroute
