#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hexroute/errors.hpp"
#include "hexroute/model.hpp"
#include "hexroute/solvers.hpp"

using namespace hexroute;

namespace {

CellFeatures make_features(CellId id, double thick, double age, double conc, double snow) {
    CellFeatures f;
    f.cell = id;
    f.date = "2024-03-15";
    f.thickness_m = thick;
    f.age_yr = age;
    f.concentration = conc;
    f.snow_m = snow;
    f.sample_count = 1;
    return f;
}

Calibration simple_calibration() {
    Calibration cal;
    cal.warn_thickness = 0.5;
    cal.max_thickness = 1.0;
    cal.warn_age = 1.0;
    cal.max_age = 3.0;
    cal.warn_concentration = 0.8;
    cal.min_concentration = 0.5;
    cal.warn_snow = 0.1;
    cal.max_snow = 0.3;
    return cal;
}

// All simple s-g paths by depth-first enumeration.
void enumerate_paths(const CorridorGrid& grid, CellId current, CellId goal,
                     std::vector<CellId>& stack, std::set<CellId>& used,
                     std::vector<std::vector<CellId>>& out) {
    if (current == goal) {
        out.push_back(stack);
        return;
    }
    for (CellId nb : grid.cell(current).neighbors) {
        if (used.count(nb)) continue;
        used.insert(nb);
        stack.push_back(nb);
        enumerate_paths(grid, nb, goal, stack, used, out);
        stack.pop_back();
        used.erase(nb);
    }
}

// 60-degree axial rotation, with features and endpoints carried along.
CellId rotate_cell(CellId id) {
    return CellId::from_axial(id.resolution(), id.q() + id.r(), -id.q());
}

}  // namespace

TEST_CASE("pair penalties follow the worst-case formulas") {
    CorridorGrid grid = fixtures::random_patch(3, 4, 5, 8);
    auto it = grid.cells().begin();
    CellId a = it->first;
    CellId b = grid.cell(a).neighbors.front();
    EdgeKey edge = EdgeKey::make(a, b);
    Calibration cal = simple_calibration();
    Weights w;
    GreatCircleAxis axis(grid.cell(a).centroid, grid.cell(b).centroid);

    SUBCASE("at the warning threshold the penalty vanishes") {
        auto fi = make_features(a, 0.5, 1.0, 0.9, 0.1);
        auto fj = make_features(b, 0.5, 1.0, 0.9, 0.1);
        auto pp = pair_penalties(grid, edge, &fi, &fj, cal, axis, w);
        CHECK(pp.thickness == doctest::Approx(0.0));
        CHECK(pp.age == doctest::Approx(0.0));
        CHECK(pp.snow == doctest::Approx(0.0));
    }

    SUBCASE("at the observed bound the penalty saturates") {
        auto fi = make_features(a, 1.0, 3.0, 0.5, 0.3);
        auto fj = make_features(b, 0.2, 0.5, 0.9, 0.0);
        auto pp = pair_penalties(grid, edge, &fi, &fj, cal, axis, w);
        CHECK(pp.thickness == doctest::Approx(1.0));
        CHECK(pp.age == doctest::Approx(1.0));
        CHECK(pp.concentration == doctest::Approx(1.0));
        CHECK(pp.snow == doctest::Approx(1.0));
    }

    SUBCASE("concentration hand example") {
        auto fi = make_features(a, 0.0, 0.0, 0.9, 0.0);
        auto fj = make_features(b, 0.0, 0.0, 0.7, 0.0);
        auto pp = pair_penalties(grid, edge, &fi, &fj, cal, axis, w);
        // c_ij = min = 0.7, (0.8 - 0.7) / (0.8 - 0.5) = 1/3
        CHECK(pp.concentration == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    SUBCASE("missing features mean maximal risk") {
        auto fi = make_features(a, 0.0, 0.0, 1.0, 0.0);
        auto pp = pair_penalties(grid, edge, &fi, nullptr, cal, axis, w);
        CHECK(pp.thickness == doctest::Approx(1.0));
        CHECK(pp.age == doctest::Approx(1.0));
        CHECK(pp.concentration == doctest::Approx(1.0));
        CHECK(pp.snow == doctest::Approx(1.0));
    }

    SUBCASE("degenerate spans force the penalty to zero, even without data") {
        Calibration degen = cal;
        degen.warn_thickness = degen.max_thickness = 0.7;
        auto pp = pair_penalties(grid, edge, nullptr, nullptr, degen, axis, w);
        CHECK(pp.thickness == doctest::Approx(0.0));
        CHECK(pp.age == doctest::Approx(1.0));
    }

    SUBCASE("clipping holds under random calibrations") {
        std::mt19937_64 rng(99);
        for (int i = 0; i < 10000; ++i) {
            Calibration rc;
            rc.warn_thickness = uniform_range(rng, 0.0, 2.0);
            rc.max_thickness = uniform_range(rng, 0.0, 2.5);
            rc.warn_age = uniform_range(rng, 0.0, 4.0);
            rc.max_age = uniform_range(rng, 0.0, 5.0);
            rc.warn_concentration = uniform_range(rng, 0.0, 1.0);
            rc.min_concentration = uniform_range(rng, 0.0, 1.0);
            rc.warn_snow = uniform_range(rng, 0.0, 0.5);
            rc.max_snow = uniform_range(rng, 0.0, 0.6);
            auto fi = make_features(a, uniform_range(rng, 0.0, 3.0), uniform_range(rng, 0.0, 6.0),
                                    uniform_range(rng, 0.0, 1.0), uniform_range(rng, 0.0, 0.7));
            auto fj = make_features(b, uniform_range(rng, 0.0, 3.0), uniform_range(rng, 0.0, 6.0),
                                    uniform_range(rng, 0.0, 1.0), uniform_range(rng, 0.0, 0.7));
            auto pp = pair_penalties(grid, edge, &fi, &fj, rc, axis, w);
            for (double p : {pp.thickness, pp.age, pp.concentration, pp.snow}) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
            }
        }
    }
}

TEST_CASE("edge cost composition") {
    Weights w;
    PairPenalties pp;

    SUBCASE("connectivity floor") {
        CHECK(edge_cost(pp, w) == doctest::Approx(w.h));
    }

    SUBCASE("hand substitution") {
        Weights w2;
        w2.k_safety = 2.0;
        w2.w_thick = 1.0;
        w2.w_age = w2.w_conc = w2.w_snow = 0.0;
        w2.w_side = w2.w_lat = 0.0;
        w2.h = 0.1;
        PairPenalties p2;
        p2.thickness = 0.5;
        CHECK(edge_cost(p2, w2) == doctest::Approx(1.1));
    }

    SUBCASE("k_safety scales only the environmental summand") {
        PairPenalties p3;
        p3.thickness = 0.3;
        p3.age = 0.2;
        p3.sigma = 0.4;
        p3.lambda = 0.1;
        Weights w1;
        Weights w2x = w1;
        w2x.k_safety = 2.0;
        double env = w1.w_thick * 0.3 + w1.w_age * 0.2;
        double fixed = w1.w_side * 0.4 + w1.w_lat * 0.1 + w1.h;
        CHECK(edge_cost(p3, w1) == doctest::Approx(env + fixed));
        CHECK(edge_cost(p3, w2x) == doctest::Approx(2.0 * env + fixed));
    }

    SUBCASE("weights validate") {
        Weights bad;
        bad.h = 0.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        Weights neg;
        neg.w_turn = -1.0;
        CHECK_THROWS_AS(neg.validate(), ValidationError);
    }
}

TEST_CASE("turn penalty on near-pole lattice edges") {
    // cells a few pitches from the pole: spherical bearings differ from
    // planar lattice angles by well under 1e-5 there
    std::set<CellId> cells;
    for (int q = -2; q <= 2; ++q) {
        for (int r = -2; r <= 2; ++r) {
            if (std::abs(q + r) <= 2) cells.insert(CellId::from_axial(5, q, r));
        }
    }
    CorridorGrid grid = CorridorGrid::from_cells(5, cells);
    Weights w;
    w.w_turn = 1.0;

    CellId west = CellId::from_axial(5, -1, 0);
    CellId center = CellId::from_axial(5, 0, 0);
    CellId east = CellId::from_axial(5, 1, 0);
    CellId northeast = CellId::from_axial(5, 0, 1);

    SUBCASE("collinear continuation is free") {
        double omega = turn_penalty(EdgeKey::make(west, center), EdgeKey::make(center, east),
                                    grid, w);
        CHECK(omega == doctest::Approx(0.0).epsilon(1e-5));
    }

    SUBCASE("60-degree lattice turn costs half the weight") {
        double omega = turn_penalty(EdgeKey::make(west, center),
                                    EdgeKey::make(center, northeast), grid, w);
        CHECK(omega == doctest::Approx(0.5).epsilon(1e-5));
    }

    SUBCASE("120-degree lattice turn") {
        CellId northwest = CellId::from_axial(5, -1, 1);
        double omega = turn_penalty(EdgeKey::make(west, center),
                                    EdgeKey::make(center, northwest), grid, w);
        CHECK(omega == doctest::Approx(1.5).epsilon(1e-5));
    }

    SUBCASE("edges must share exactly one vertex") {
        CHECK_THROWS_AS(turn_penalty(EdgeKey::make(west, center), EdgeKey::make(west, center),
                                     grid, w),
                        ValidationError);
        CellId far1 = CellId::from_axial(5, 2, 0);
        CHECK_THROWS_AS(turn_penalty(EdgeKey::make(west, center),
                                     EdgeKey::make(far1, CellId::from_axial(5, 2, -1)), grid, w),
                        ValidationError);
    }

    SUBCASE("scaling in w_turn") {
        Weights w5;
        w5.w_turn = 5.0;
        double base = turn_penalty(EdgeKey::make(west, center),
                                   EdgeKey::make(center, northeast), grid, w);
        double scaled = turn_penalty(EdgeKey::make(west, center),
                                     EdgeKey::make(center, northeast), grid, w5);
        CHECK(scaled == doctest::Approx(5.0 * base));
    }
}

TEST_CASE("build_model structure") {
    SUBCASE("two-cell model") {
        std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0)};
        CorridorGrid grid = CorridorGrid::from_cells(5, cells);
        auto [s, g] = fixtures::far_pair(grid);
        CqmModel model = build_model(grid, {}, simple_calibration(), Weights{}, s, g, {});
        CHECK(model.edge_count() == 1);
        CHECK(model.bounds().l_min == 1);
        CHECK(model.bounds().l_max == 3);
        CHECK(model.turn_terms().empty());

        Assignment a = complete_assignment(model, {1});
        CHECK(a.flow[0] + a.flow[1] == doctest::Approx(1.0));  // unit flow one way
        Evaluation ev = evaluate_assignment(model, a);
        CHECK(ev.feasible);

        Assignment zero = complete_assignment(model, {0});
        Evaluation ev0 = evaluate_assignment(model, zero);
        CHECK(!ev0.feasible);
        CHECK(!ev0.violations.empty());
    }

    SUBCASE("three-cell path has zero soft penalties at the path assignment") {
        std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                               CellId::from_axial(5, 2, 0)};
        CorridorGrid grid = CorridorGrid::from_cells(5, cells);
        CellId s = CellId::from_axial(5, 0, 0), g = CellId::from_axial(5, 2, 0);
        CqmModel model = build_model(grid, {}, simple_calibration(), Weights{}, s, g, {});
        CHECK(model.edge_count() == 2);
        std::vector<std::uint8_t> x{1, 1};
        Assignment a = complete_assignment(model, x);
        for (double z : a.degree_slack) CHECK(z == 0.0);
        CHECK(a.len_shortfall == 0.0);
        CHECK(a.len_excess == 0.0);
        CHECK(evaluate_assignment(model, a).feasible);
    }

    SUBCASE("seven-cell flower quadratic term count equals incident pair count") {
        std::set<CellId> cells{CellId::from_axial(5, 0, 0)};
        for (CellId nb : lattice_neighbors(CellId::from_axial(5, 0, 0))) cells.insert(nb);
        CorridorGrid grid = CorridorGrid::from_cells(5, cells);
        CellId s = CellId::from_axial(5, 1, 0), g = CellId::from_axial(5, -1, 0);
        CqmModel model = build_model(grid, {}, simple_calibration(), Weights{}, s, g, {});
        CHECK(model.edge_count() == 12);  // 6 spokes + 6 ring edges

        // combinatorial oracle: sum over vertices of C(deg, 2)
        std::size_t expected_pairs = 0;
        for (const auto& [id, cell] : grid.cells()) {
            std::size_t d = cell.neighbors.size();
            expected_pairs += d * (d - 1) / 2;
        }
        CHECK(expected_pairs == 33);
        CHECK(model.turn_terms().size() == expected_pairs);

        // every quadratic term couples two edges sharing exactly one vertex
        for (const auto& t : model.turn_terms()) {
            const EdgeKey& e1 = model.edge(t.e1);
            const EdgeKey& e2 = model.edge(t.e2);
            int shared = 0;
            for (CellId u : {e1.a, e1.b}) {
                if (u == e2.a || u == e2.b) ++shared;
            }
            CHECK(shared == 1);
        }
    }

    SUBCASE("errors") {
        std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0)};
        CorridorGrid grid = CorridorGrid::from_cells(5, cells);
        CellId s = CellId::from_axial(5, 0, 0);
        CHECK_THROWS_AS(
            build_model(grid, {}, simple_calibration(), Weights{}, s, s, {}),
            ValidationError);
        CHECK_THROWS_AS(build_model(grid, {}, simple_calibration(), Weights{}, s,
                                    CellId::from_axial(5, 5, 5), {}),
                        ValidationError);

        // disconnected components: error before any solver runs
        std::set<CellId> split{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                               CellId::from_axial(5, 8, 0), CellId::from_axial(5, 9, 0)};
        CorridorGrid split_grid = CorridorGrid::from_cells(5, split);
        CHECK_THROWS_AS(build_model(split_grid, {}, simple_calibration(), Weights{},
                                    CellId::from_axial(5, 0, 0), CellId::from_axial(5, 9, 0),
                                    {}),
                        InfeasibleError);
    }
}

TEST_CASE("objective evaluation equivalence (independent semantic route)") {
    auto fx = fixtures::routing_fixture(11, 10, 18);
    CqmModel model = fixtures::fixture_model(fx);
    GreatCircleAxis axis(fx.grid.cell(fx.start).centroid, fx.grid.cell(fx.goal).centroid);

    std::map<CellId, const CellFeatures*> by_cell;
    for (const auto& f : fx.features) by_cell[f.cell] = &f;

    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::uint8_t> x(model.edge_count());
        for (auto& b : x) b = (rng() >> 60) & 1;
        Assignment a = complete_assignment(model, x);
        double reported = evaluate_assignment(model, a).objective;

        // term-by-term recomputation through the public per-edge API
        double semantic = 0.0;
        for (std::size_t e = 0; e < model.edge_count(); ++e) {
            if (!x[e]) continue;
            const EdgeKey& key = model.edge(e);
            auto fi = by_cell.count(key.a) ? by_cell[key.a] : nullptr;
            auto fj = by_cell.count(key.b) ? by_cell[key.b] : nullptr;
            semantic += edge_cost(
                pair_penalties(fx.grid, key, fi, fj, fx.calibration, axis, fx.weights),
                fx.weights);
        }
        for (std::size_t e1 = 0; e1 < model.edge_count(); ++e1) {
            for (std::size_t e2 = e1 + 1; e2 < model.edge_count(); ++e2) {
                if (!x[e1] || !x[e2]) continue;
                const EdgeKey& k1 = model.edge(e1);
                const EdgeKey& k2 = model.edge(e2);
                int shared = 0;
                for (CellId u : {k1.a, k1.b}) {
                    if (u == k2.a || u == k2.b) ++shared;
                }
                if (shared != 1) continue;
                semantic += turn_penalty(k1, k2, fx.grid, fx.weights);
            }
        }
        std::map<CellId, int> degree;
        int active = 0;
        for (std::size_t e = 0; e < model.edge_count(); ++e) {
            if (!x[e]) continue;
            ++active;
            ++degree[model.edge(e).a];
            ++degree[model.edge(e).b];
        }
        for (std::size_t vi = 0; vi < model.vertex_count(); ++vi) {
            CellId v = model.vertex(vi);
            double z = std::max(0, degree[v] - model.degree_target(vi));
            semantic += fx.weights.w_deg * z * z;
        }
        double sf = std::max(0, model.bounds().l_min - active);
        double ex = std::max(0, active - model.bounds().l_max);
        semantic += fx.weights.w_len * (sf * sf + ex * ex);

        CHECK(reported == doctest::Approx(semantic).epsilon(1e-9));
    }
}

TEST_CASE("feasibility characterization over all simple paths") {
    auto fx = fixtures::routing_fixture(21, 9, 16);
    CqmModel model = fixtures::fixture_model(fx);

    std::vector<std::vector<CellId>> paths;
    std::vector<CellId> stack{fx.start};
    std::set<CellId> used{fx.start};
    enumerate_paths(fx.grid, fx.start, fx.goal, stack, used, paths);
    REQUIRE(!paths.empty());

    int in_bounds = 0;
    for (const auto& path : paths) {
        int length = static_cast<int>(path.size()) - 1;
        if (length < model.bounds().l_min || length > model.bounds().l_max) continue;
        ++in_bounds;
        std::vector<std::uint8_t> x(model.edge_count(), 0);
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            x[*model.edge_index(EdgeKey::make(path[i], path[i + 1]))] = 1;
        }
        Assignment a = complete_assignment(model, x);
        double phi = 0.0;
        for (double z : a.degree_slack) phi += z * z;
        phi += a.len_shortfall * a.len_shortfall + a.len_excess * a.len_excess;
        CHECK(phi == 0.0);
        CHECK(evaluate_assignment(model, a).feasible);
    }
    CHECK(in_bounds > 0);
}

TEST_CASE("degree hinge anchor cases") {
    // star around an interior vertex: target 2 for interior vertices
    auto fx = fixtures::routing_fixture(31, 10, 18);
    CqmModel model = fixtures::fixture_model(fx);

    std::size_t pivot_vi = model.vertex_count();
    for (std::size_t vi = 0; vi < model.vertex_count(); ++vi) {
        if (model.degree_target(vi) == 2 && model.incident_edges(vi).size() >= 3) {
            pivot_vi = vi;
            break;
        }
    }
    REQUIRE(pivot_vi < model.vertex_count());
    const auto& incident = model.incident_edges(pivot_vi);

    auto hinge_contribution = [&](int k) {
        std::vector<std::uint8_t> x(model.edge_count(), 0);
        for (int i = 0; i < k; ++i) x[incident[i]] = 1;
        Assignment a = complete_assignment(model, x);
        return model.weights().w_deg * a.degree_slack[pivot_vi] * a.degree_slack[pivot_vi];
    };

    CHECK(hinge_contribution(0) == doctest::Approx(0.0));  // untouched vertex
    CHECK(hinge_contribution(1) == doctest::Approx(0.0));  // below target stays free
    CHECK(hinge_contribution(2) == doctest::Approx(0.0));  // exactly on target
    CHECK(hinge_contribution(3) == doctest::Approx(model.weights().w_deg));  // one in excess
}

TEST_CASE("model is invariant under a 60-degree lattice rotation") {
    auto fx = fixtures::routing_fixture(41, 8, 14);
    CqmModel model = fixtures::fixture_model(fx);
    SolverResult base = solve_exhaustive(model);

    std::set<CellId> rotated_cells;
    for (const auto& [id, cell] : fx.grid.cells()) rotated_cells.insert(rotate_cell(id));
    CorridorGrid rotated = CorridorGrid::from_cells(5, rotated_cells);
    std::vector<CellFeatures> rotated_features;
    for (auto f : fx.features) {
        f.cell = rotate_cell(f.cell);
        rotated_features.push_back(f);
    }
    CqmModel rotated_model =
        build_model(rotated, rotated_features, fx.calibration, fx.weights,
                    rotate_cell(fx.start), rotate_cell(fx.goal), {});
    SolverResult rotated_result = solve_exhaustive(rotated_model);

    CHECK(rotated_result.objective == doctest::Approx(base.objective).epsilon(1e-9));
}

TEST_CASE("raising k_safety never lowers the optimum") {
    auto fx = fixtures::routing_fixture(51, 8, 14);
    CqmModel base_model = fixtures::fixture_model(fx);
    double base = solve_exhaustive(base_model).objective;

    Weights heavier = fx.weights;
    heavier.k_safety = 2.5;
    CqmModel heavy_model = build_model(fx.grid, fx.features, fx.calibration, heavier, fx.start,
                                       fx.goal, {});
    double heavy = solve_exhaustive(heavy_model).objective;
    CHECK(heavy >= base - 1e-12);
}

TEST_CASE("missing features saturate edge costs") {
    std::set<CellId> cells{CellId::from_axial(5, 0, 0), CellId::from_axial(5, 1, 0),
                           CellId::from_axial(5, 2, 0)};
    CorridorGrid grid = CorridorGrid::from_cells(5, cells);
    CellId s = CellId::from_axial(5, 0, 0), g = CellId::from_axial(5, 2, 0);
    Weights w;
    w.alignment = AlignmentStrategy::Off;
    // features only for the middle cell
    std::vector<CellFeatures> features{
        make_features(CellId::from_axial(5, 1, 0), 0.2, 0.5, 0.9, 0.05)};
    CqmModel model = build_model(grid, features, simple_calibration(), w, s, g, {});
    for (std::size_t e = 0; e < model.edge_count(); ++e) {
        double env_saturated =
            w.k_safety * (w.w_thick + w.w_age + w.w_conc + w.w_snow) + w.h;
        CHECK(model.linear_cost(e) == doctest::Approx(env_saturated));
    }
}

TEST_CASE("model dump is canonical and complete") {
    auto fx = fixtures::routing_fixture(61, 6, 10);
    CqmModel model = fixtures::fixture_model(fx);

    std::ostringstream d1, d2;
    model.dump(d1);
    fixtures::fixture_model(fx).dump(d2);
    CHECK(d1.str() == d2.str());
    CHECK(d1.str().rfind("cqm/1", 0) == 0);
    for (const char* section : {"meta ", "weights ", "vertices ", "edges ", "quadratic ",
                                "constraints flow", "constraints coupling",
                                "constraints degree_hinge", "constraints length_hinge"}) {
        CHECK(d1.str().find(section) != std::string::npos);
    }
}

TEST_CASE("path bounds defaults") {
    auto fx = fixtures::routing_fixture(71, 9, 16);
    CqmModel model = fixtures::fixture_model(fx);
    CHECK(model.bounds().l_min == hex_distance(fx.start, fx.goal));
    CHECK(model.bounds().l_max == 3 * model.bounds().l_min);

    CHECK_THROWS_AS(fixtures::fixture_model(fx, PathBounds{5, 4}), ValidationError);
}
