#pragma once
// Shared fixture builders for the test and acceptance suites.
#include <algorithm>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "hexroute/envdata.hpp"
#include "hexroute/hexgrid.hpp"
#include "hexroute/model.hpp"
#include "hexroute/rng.hpp"

namespace fixtures {

using namespace hexroute;

// Densified geographic box polygon (closed ring, CCW-ish).
inline Polygon box_polygon(double lat0, double lat1, double lon0, double lon1,
                           double step_deg = 1.0) {
    std::vector<GeoPoint> ring;
    auto walk_lon = [&](double lat, double from, double to) {
        double span = to - from;
        int steps = std::max(1, static_cast<int>(std::ceil(std::fabs(span) / step_deg)));
        for (int i = 0; i < steps; ++i) {
            ring.push_back(canonical({lat, from + span * i / steps}));
        }
    };
    auto walk_lat = [&](double lon, double from, double to) {
        double span = to - from;
        int steps = std::max(1, static_cast<int>(std::ceil(std::fabs(span) / step_deg)));
        for (int i = 0; i < steps; ++i) {
            ring.push_back(canonical({from + span * i / steps, lon}));
        }
    };
    walk_lon(lat0, lon0, lon1);
    walk_lat(lon1, lat0, lat1);
    walk_lon(lat1, lon1, lon0);
    walk_lat(lon0, lat1, lat0);
    ring.push_back(ring.front());
    Polygon poly;
    poly.rings.push_back(std::move(ring));
    return poly;
}

// Random connected lattice patch near the pole, capped by edge count so
// the exhaustive oracle stays applicable. Grown by seeded BFS with random
// frontier picks.
inline CorridorGrid random_patch(std::uint64_t seed, int target_cells, int resolution = 5,
                                 int max_edges = 20) {
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        std::mt19937_64 rng(mix_seed(seed, 0xF1C0 + attempt));
        int q0 = static_cast<int>(uniform_index(rng, 41)) - 20;
        int r0 = static_cast<int>(uniform_index(rng, 41)) - 20;
        std::set<CellId> cells{CellId::from_axial(resolution, q0, r0)};
        std::vector<CellId> frontier{*cells.begin()};
        while (static_cast<int>(cells.size()) < target_cells && !frontier.empty()) {
            std::size_t pick = uniform_index(rng, frontier.size());
            CellId base = frontier[pick];
            auto nbs = lattice_neighbors(base);
            std::vector<CellId> candidates;
            for (CellId nb : nbs) {
                if (!cells.count(nb)) candidates.push_back(nb);
            }
            if (candidates.empty()) {
                frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
                continue;
            }
            CellId chosen = candidates[uniform_index(rng, candidates.size())];
            cells.insert(chosen);
            frontier.push_back(chosen);
        }
        // Count induced edges; retry with a new stream when too dense.
        int edges = 0;
        for (CellId id : cells) {
            for (CellId nb : lattice_neighbors(id)) {
                if (id < nb && cells.count(nb)) ++edges;
            }
        }
        if (edges <= max_edges && static_cast<int>(cells.size()) == target_cells) {
            return CorridorGrid::from_cells(resolution, cells);
        }
    }
    // Fall back to a simple line, always within any edge cap.
    std::set<CellId> line;
    for (int i = 0; i < target_cells; ++i) line.insert(CellId::from_axial(resolution, i, 0));
    return CorridorGrid::from_cells(resolution, line);
}

// Random per-cell features; a slice of cells is left without data to
// exercise the maximal-risk rule.
inline std::vector<CellFeatures> random_features(const CorridorGrid& grid, std::uint64_t seed,
                                                 double missing_prob = 0.1,
                                                 const std::string& date = "2024-03-15") {
    std::mt19937_64 rng(mix_seed(seed, 0xFEA7));
    std::vector<CellFeatures> out;
    for (const auto& [id, cell] : grid.cells()) {
        if (uniform01(rng) < missing_prob) continue;
        CellFeatures f;
        f.cell = id;
        f.date = date;
        f.thickness_m = uniform_range(rng, 0.0, 1.2);
        f.age_yr = uniform_range(rng, 0.0, 3.0);
        f.concentration = uniform_range(rng, 0.3, 1.0);
        f.snow_m = uniform_range(rng, 0.0, 0.4);
        f.drift_u = uniform_range(rng, -0.3, 0.3);
        f.drift_v = uniform_range(rng, -0.3, 0.3);
        f.sample_count = 1;
        out.push_back(std::move(f));
    }
    return out;
}

// Farthest cell pair by lattice distance (deterministic tie-break by id).
inline std::pair<CellId, CellId> far_pair(const CorridorGrid& grid) {
    CellId best_a, best_b;
    int best = -1;
    for (const auto& [a, ca] : grid.cells()) {
        for (const auto& [b, cb] : grid.cells()) {
            if (!(a < b)) continue;
            int d = hex_distance(a, b);
            if (d > best) {
                best = d;
                best_a = a;
                best_b = b;
            }
        }
    }
    return {best_a, best_b};
}

struct FixtureInstance {
    CorridorGrid grid;
    std::vector<CellFeatures> features;
    Calibration calibration;
    Weights weights;
    CellId start, goal;
};

// Complete routing fixture: patch grid, random ice field, calibrated
// thresholds, default weights, farthest endpoints.
inline FixtureInstance routing_fixture(std::uint64_t seed, int cells = 10, int max_edges = 18) {
    FixtureInstance fx{random_patch(seed, cells, 5, max_edges), {}, {}, {}, {}, {}};
    fx.features = random_features(fx.grid, seed);
    if (fx.features.empty()) {
        fx.features = random_features(fx.grid, seed, 0.0);
    }
    fx.calibration = calibrate(fx.features);
    auto [s, g] = far_pair(fx.grid);
    fx.start = s;
    fx.goal = g;
    return fx;
}

inline CqmModel fixture_model(const FixtureInstance& fx, PathBounds bounds = {0, 0}) {
    return build_model(fx.grid, fx.features, fx.calibration, fx.weights, fx.start, fx.goal,
                       bounds);
}

}  // namespace fixtures
