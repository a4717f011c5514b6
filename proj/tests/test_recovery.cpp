#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hexroute/errors.hpp"
#include "hexroute/recovery.hpp"
#include "hexroute/solvers.hpp"

using namespace hexroute;

namespace {

Calibration flat_calibration() {
    Calibration cal;
    return cal;  // all-zero spans: every penalty degenerates to 0
}

Weights bare_weights() {
    Weights w;
    w.k_safety = 0.0;
    w.w_side = 0.0;
    w.w_lat = 0.0;
    w.alignment = AlignmentStrategy::Off;
    return w;
}

CorridorGrid line_grid(int n) {
    std::set<CellId> cells;
    for (int i = 0; i < n; ++i) cells.insert(CellId::from_axial(5, i, 0));
    return CorridorGrid::from_cells(5, cells);
}

SolverResult result_from_x(const CqmModel& model, std::vector<std::uint8_t> x) {
    SolverResult r;
    r.assignment = complete_assignment(model, x);
    Evaluation ev = evaluate_assignment(model, r.assignment);
    r.objective = ev.objective;
    r.feasible = ev.feasible;
    r.violations = ev.violations;
    r.solver_name = "manual";
    return r;
}

}  // namespace

TEST_CASE("extract_active") {
    CorridorGrid grid = line_grid(4);
    CqmModel model = build_model(grid, {}, flat_calibration(), bare_weights(),
                                 CellId::from_axial(5, 0, 0), CellId::from_axial(5, 3, 0), {});

    SUBCASE("all zero gives an empty subgraph") {
        SolverResult r = result_from_x(model, {0, 0, 0});
        ActiveSubgraph sub = extract_active(model, r);
        CHECK(sub.edges.empty());
        CHECK(sub.flow_hints.empty());
    }

    SUBCASE("binary output extracts exactly the set edges") {
        SolverResult r = result_from_x(model, {1, 0, 1});
        ActiveSubgraph sub = extract_active(model, r);
        CHECK(sub.edges == std::vector<std::uint32_t>{0, 2});
    }

    SUBCASE("threshold is strict") {
        SolverResult r = result_from_x(model, {1, 1, 1});
        ActiveSubgraph sub = extract_active(model, r, 1.0);  // 1.0 > 1.0 is false
        CHECK(sub.edges.empty());
    }
}

TEST_CASE("reconstruct") {
    CorridorGrid grid = line_grid(5);
    CellId s = CellId::from_axial(5, 0, 0), g = CellId::from_axial(5, 4, 0);
    CqmModel model = build_model(grid, {}, flat_calibration(), bare_weights(), s, g, {});
    REQUIRE(model.edge_count() == 4);

    SUBCASE("an existing path is returned unchanged") {
        SolverResult r = result_from_x(model, {1, 1, 1, 1});
        Route route = reconstruct(extract_active(model, r), model, grid);
        CHECK(route.cells.size() == 5);
        CHECK(route.cells.front() == s);
        CHECK(route.cells.back() == g);
        CHECK(route.relinked_edges.empty());
    }

    SUBCASE("one missing edge is bridged by exactly that edge") {
        SolverResult r = result_from_x(model, {1, 0, 1, 1});  // a-b missing
        Route route = reconstruct(extract_active(model, r), model, grid);
        CHECK(route.cells.size() == 5);
        REQUIRE(route.relinked_edges.size() == 1);
        CHECK(route.relinked_edges[0] ==
              EdgeKey::make(CellId::from_axial(5, 1, 0), CellId::from_axial(5, 2, 0)));
    }

    SUBCASE("detached pendant edges are ignored") {
        // star fixture: path plus a pendant edge off the path
        std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                               CellId::from_axial(5, 2, 0), CellId::from_axial(5, 1, 1)};
        CorridorGrid star = CorridorGrid::from_cells(5, cells);
        CqmModel m2 = build_model(star, {}, flat_calibration(), bare_weights(),
                                  CellId::from_axial(5, 0, 0), CellId::from_axial(5, 2, 0), {});
        // activate the straight path plus the pendant (2,0)-(1,1)
        std::vector<std::uint8_t> x(m2.edge_count(), 0);
        x[*m2.edge_index(EdgeKey::make(CellId::from_axial(5, 0, 0),
                                       CellId::from_axial(5, 1, 0)))] = 1;
        x[*m2.edge_index(EdgeKey::make(CellId::from_axial(5, 1, 0),
                                       CellId::from_axial(5, 2, 0)))] = 1;
        x[*m2.edge_index(EdgeKey::make(CellId::from_axial(5, 2, 0),
                                       CellId::from_axial(5, 1, 1)))] = 1;
        SolverResult r = result_from_x(m2, x);
        Route route = reconstruct(extract_active(m2, r), m2, star);
        CHECK(route.cells.size() == 3);
        CHECK(route.relinked_edges.empty());
        CHECK(std::find(route.cells.begin(), route.cells.end(),
                        CellId::from_axial(5, 1, 1)) == route.cells.end());
    }

    SUBCASE("flow direction takes precedence") {
        SolverResult r = result_from_x(model, {1, 1, 1, 1});
        ActiveSubgraph sub = extract_active(model, r);
        CHECK(!sub.flow_hints.empty());
        Route route = reconstruct(sub, model, grid);
        CHECK(route.cells.front() == s);
        CHECK(route.cells.back() == g);
    }

    SUBCASE("positive flow wins over the cheaper traversal") {
        // two parallel 2-edge routes; flow planted along the costlier one
        std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                               CellId::from_axial(5, 0, 1), CellId::from_axial(5, 1, 1)};
        CorridorGrid diamond = CorridorGrid::from_cells(5, cells);
        CellId s2 = CellId::from_axial(5, 0, 0), g2 = CellId::from_axial(5, 1, 1);
        CellId cheap_mid = CellId::from_axial(5, 1, 0);
        CellId costly_mid = CellId::from_axial(5, 0, 1);

        std::vector<CellFeatures> features;
        for (CellId id : cells) {
            CellFeatures f;
            f.cell = id;
            f.thickness_m = (id == costly_mid) ? 1.0 : 0.0;
            f.sample_count = 1;
            features.push_back(f);
        }
        Calibration cal;
        cal.warn_thickness = 0.2;
        cal.max_thickness = 1.0;
        Weights w = bare_weights();
        w.k_safety = 1.0;
        CqmModel m2 = build_model(diamond, features, cal, w, s2, g2, {});

        // activate both branches, route the unit flow through costly_mid
        std::vector<std::uint8_t> x(m2.edge_count(), 0);
        for (CellId mid : {cheap_mid, costly_mid}) {
            x[*m2.edge_index(EdgeKey::make(s2, mid))] = 1;
            x[*m2.edge_index(EdgeKey::make(mid, g2))] = 1;
        }
        SolverResult r = result_from_x(m2, x);
        std::fill(r.assignment.flow.begin(), r.assignment.flow.end(), 0.0);
        for (auto [from, to] : {std::pair{s2, costly_mid}, std::pair{costly_mid, g2}}) {
            EdgeKey key = EdgeKey::make(from, to);
            std::size_t e = *m2.edge_index(key);
            r.assignment.flow[2 * e + (from == key.a ? 0 : 1)] = 1.0;
        }
        Route route = reconstruct(extract_active(m2, r), m2, diamond);
        REQUIRE(route.cells.size() == 3);
        CHECK(route.cells[1] == costly_mid);
    }

    SUBCASE("polyline is sampled at 25 km or finer") {
        SolverResult r = result_from_x(model, {1, 1, 1, 1});
        Route route = reconstruct(extract_active(model, r), model, grid);
        REQUIRE(route.polyline.size() >= route.cells.size());
        for (std::size_t i = 0; i + 1 < route.polyline.size(); ++i) {
            CHECK(haversine_km(route.polyline[i], route.polyline[i + 1]) <= 25.0 + 1e-9);
        }
    }
}

TEST_CASE("metrics") {
    SUBCASE("straight three-cell route has zero zigzag") {
        Route route;
        route.cells = {CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                       CellId::from_axial(5, 2, 0)};
        RouteMetrics rm = metrics(route);
        CHECK(rm.zigzag_raw == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(rm.zigzag_pct == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(rm.selected_nodes == 3);
        double expected = haversine_km(cell_centroid(route.cells[0]),
                                       cell_centroid(route.cells[1])) +
                          haversine_km(cell_centroid(route.cells[1]),
                                       cell_centroid(route.cells[2]));
        CHECK(rm.length_km == doctest::Approx(expected));
        CHECK(rm.co2_kg == doctest::Approx(rm.length_km * 500.0));
    }

    SUBCASE("single 60-degree turn gives half a unit of zigzag, 25 percent") {
        Route route;
        route.cells = {CellId::from_axial(5, -1, 0), CellId::from_axial(5, 0, 0),
                       CellId::from_axial(5, 0, 1)};
        RouteMetrics rm = metrics(route);
        CHECK(rm.zigzag_raw == doctest::Approx(0.5).epsilon(1e-5));
        CHECK(rm.zigzag_pct == doctest::Approx(25.0).epsilon(1e-5));
    }

    SUBCASE("co2 proxy matches the fixed factor exactly") {
        CHECK(co2_proxy_kg(1448.62) == doctest::Approx(724310.0).epsilon(1e-12));
        CHECK(co2_proxy_kg(4043.2914) == doctest::Approx(2021645.7).epsilon(1e-12));
        // ratio is exactly 500 on any cell sequence
        Route route;
        route.cells = {CellId::from_axial(5, 0, 0), CellId::from_axial(5, 3, 0)};
        RouteMetrics rm = metrics(route);
        CHECK(rm.co2_kg / rm.length_km == doctest::Approx(500.0).epsilon(1e-12));
    }

    SUBCASE("short routes are rejected") {
        Route route;
        route.cells = {CellId::from_axial(5, 0, 0)};
        CHECK_THROWS_AS(metrics(route), ValidationError);
    }

    SUBCASE("zigzag bounds on random fixture routes") {
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            auto fx = fixtures::routing_fixture(300 + seed, 10, 18);
            CqmModel model = fixtures::fixture_model(fx);
            SolverResult r = solve_exhaustive(model);
            Route route = reconstruct(extract_active(model, r), model, fx.grid);
            RouteMetrics rm = metrics(route);
            CHECK(rm.zigzag_pct >= 0.0);
            CHECK(rm.zigzag_pct <= 100.0);
            if (rm.zigzag_raw < 1e-9) CHECK(rm.zigzag_pct < 1e-7);
        }
    }
}

TEST_CASE("geojson export") {
    SUBCASE("two-point route is a LineString with two coordinates") {
        CorridorGrid grid = line_grid(2);
        CqmModel model =
            build_model(grid, {}, flat_calibration(), bare_weights(),
                        CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0), {});
        SolverResult r = result_from_x(model, {1});
        Route route = reconstruct(extract_active(model, r), model, grid);
        // adjacent centroids are ~17 km apart: single segment at 25 km sampling
        RouteMetrics rm = metrics(route);
        nlohmann::json doc = route_geojson(route, rm);
        CHECK(doc["type"] == "FeatureCollection");
        const auto& line = doc["features"][0]["geometry"];
        CHECK(line["type"] == "LineString");
        CHECK(line["coordinates"].size() == 2);
        CHECK(doc["features"].size() == 1 + route.cells.size());
    }

    SUBCASE("meridian-crossing route splits per RFC 7946") {
        // corridor straddling the antimeridian
        Polygon box = fixtures::box_polygon(70.5, 72.0, 178, 183);
        CorridorGrid grid = CorridorGrid::build(box, {}, 5);
        REQUIRE(grid.size() > 20);
        CellId s, g;
        double west = 1e9, east = -1e9;
        for (const auto& [id, cell] : grid.cells()) {
            double lon = cell.centroid.lon;
            double shifted = lon < 0 ? lon + 360.0 : lon;
            if (shifted < west) {
                west = shifted;
                s = id;
            }
            if (shifted > east) {
                east = shifted;
                g = id;
            }
        }
        CqmModel model = build_model(grid, {}, flat_calibration(), bare_weights(), s, g, {});
        SolverResult r = solve_linegraph_dijkstra(model);
        REQUIRE(r.feasible);
        Route route = reconstruct(extract_active(model, r), model, grid);
        RouteMetrics rm = metrics(route);
        nlohmann::json doc = route_geojson(route, rm);
        const auto& line = doc["features"][0]["geometry"];
        REQUIRE(line["type"] == "MultiLineString");
        CHECK(line["coordinates"].size() >= 2);
        for (const auto& segment : line["coordinates"]) {
            double lo = 360, hi = -360;
            for (const auto& pos : segment) {
                double lon = pos[0].get<double>();
                lo = std::min(lo, lon);
                hi = std::max(hi, lon);
            }
            CHECK(hi - lo <= 180.0);
        }
        // split points sit exactly on the meridian
        bool found_180 = false;
        for (const auto& segment : line["coordinates"]) {
            for (const auto& pos : segment) {
                if (std::fabs(std::fabs(pos[0].get<double>()) - 180.0) < 1e-9) {
                    found_180 = true;
                }
            }
        }
        CHECK(found_180);
    }

    SUBCASE("file round trip preserves coordinates") {
        CorridorGrid grid = line_grid(3);
        CqmModel model =
            build_model(grid, {}, flat_calibration(), bare_weights(),
                        CellId::from_axial(5, 0, 0), CellId::from_axial(5, 2, 0), {});
        SolverResult r = result_from_x(model, {1, 1});
        Route route = reconstruct(extract_active(model, r), model, grid);
        RouteMetrics rm = metrics(route);
        auto path = std::filesystem::temp_directory_path() / "hexroute_route.geojson";
        export_geojson(route, rm, path.string());
        std::ifstream in(path);
        nlohmann::json parsed;
        in >> parsed;
        nlohmann::json original = route_geojson(route, rm);
        const auto& a = parsed["features"][0]["geometry"]["coordinates"];
        const auto& b = original["features"][0]["geometry"]["coordinates"];
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i][0].get<double>() == doctest::Approx(b[i][0].get<double>()).epsilon(1e-9));
            CHECK(a[i][1].get<double>() == doctest::Approx(b[i][1].get<double>()).epsilon(1e-9));
        }
        CHECK_THROWS_AS(export_geojson(route, rm, "/nonexistent_dir/route.geojson"), IoError);
    }
}

TEST_CASE("reconstruction conservatism and objective consistency") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto fx = fixtures::routing_fixture(400 + seed, 9, 16);
        CqmModel model = fixtures::fixture_model(fx);
        SolverResult r = solve_exhaustive(model);
        REQUIRE(r.feasible);
        Route route = reconstruct(extract_active(model, r), model, fx.grid);

        // relinking never fires when the active set already reaches the goal
        CHECK(route.relinked_edges.empty());

        // objective of the reconstructed edge set never exceeds the raw
        // assignment value plus the cost of relinked edges
        std::vector<std::uint8_t> x(model.edge_count(), 0);
        for (std::size_t i = 0; i + 1 < route.cells.size(); ++i) {
            x[*model.edge_index(EdgeKey::make(route.cells[i], route.cells[i + 1]))] = 1;
        }
        double route_obj = evaluate_assignment(model, complete_assignment(model, x)).objective;
        double relink_cost = 0.0;
        for (const auto& e : route.relinked_edges) {
            relink_cost += model.linear_cost(*model.edge_index(e));
        }
        CHECK(route_obj <= r.objective + relink_cost + 1e-9);

        RouteCheck check = validate_route(route, model, fx.grid);
        CHECK(check.all());
    }
}

TEST_CASE("validate_route flags broken routes") {
    CorridorGrid grid = line_grid(4);
    CqmModel model = build_model(grid, {}, flat_calibration(), bare_weights(),
                                 CellId::from_axial(5, 0, 0), CellId::from_axial(5, 3, 0), {});
    Route bad;
    bad.cells = {CellId::from_axial(5, 0, 0), CellId::from_axial(5, 2, 0),
                 CellId::from_axial(5, 3, 0)};  // skips a cell
    RouteCheck check = validate_route(bad, model, grid);
    CHECK(!check.consecutive_neighbors);
    CHECK(!check.all());

    Route repeated;
    repeated.cells = {CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                      CellId::from_axial(5, 0, 0)};
    CHECK(!validate_route(repeated, model, grid).simple);
}
