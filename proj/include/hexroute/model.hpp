#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hexroute/envdata.hpp"
#include "hexroute/geo.hpp"
#include "hexroute/hexgrid.hpp"

namespace hexroute {

enum class AlignmentStrategy {
    BearingCrosstrack,  // sigma from course misalignment, lambda from cross-track
    Off,                // both identically zero
};

struct Weights {
    double k_safety{1.0};
    double w_thick{1.0};
    double w_age{1.0};
    double w_conc{1.0};
    double w_snow{1.0};
    double w_side{1.0};
    double w_lat{1.0};
    double h{0.01};  // connectivity floor, > 0
    double w_turn{1.0};
    double w_deg{1.0};
    double w_len{1.0};
    // Experimental drift term, off by default: the source fields expose
    // usi/vsi but the edge cost does not consume them unless enabled.
    bool drift_enabled{false};
    double w_drift{0.0};
    AlignmentStrategy alignment{AlignmentStrategy::BearingCrosstrack};

    void validate() const;  // finite, nonnegative, h > 0
};

// Undirected edge between adjacent cells, canonical order a < b.
struct EdgeKey {
    CellId a, b;
    static EdgeKey make(CellId x, CellId y);
    auto operator<=>(const EdgeKey&) const = default;
};

// Dimensionless per-edge penalties from worst-case neighbor aggregation.
struct PairPenalties {
    double thickness{0.0};      // in [0,1]
    double age{0.0};            // in [0,1]
    double concentration{0.0};  // in [0,1]
    double snow{0.0};           // in [0,1]
    double sigma{0.0};          // side deviation, [0,1]
    double lambda{0.0};         // lateral deviation, >= 0
    double drift{0.0};          // in [0,1], used only when drift_enabled
};

PairPenalties pair_penalties(const CorridorGrid& grid, const EdgeKey& edge,
                             const CellFeatures* fi, const CellFeatures* fj,
                             const Calibration& cal, const GreatCircleAxis& axis,
                             const Weights& weights);

double edge_cost(const PairPenalties& pp, const Weights& w);

// Curvature penalty w_turn*(1 - cos(theta)) for two edges sharing exactly
// one vertex; throws ValidationError otherwise.
double turn_penalty(const EdgeKey& e1, const EdgeKey& e2, const CorridorGrid& grid,
                    const Weights& w);

struct PathBounds {
    int l_min{0};
    int l_max{0};
    // l_min = lattice hop distance s..g, l_max = 3*l_min.
    static PathBounds defaults(const CorridorGrid& grid, CellId s, CellId g);
};

// One quadratic objective term per incident edge pair (the turning set).
// Collinear continuations keep an explicit zero coefficient so the
// structural term count equals the number of incident pairs.
struct TurnTerm {
    std::uint32_t e1, e2;  // edge indices, e1 < e2
    CellId pivot;
    double coeff;
};

// Constrained quadratic routing model. Binary x_e per edge, continuous
// flow f per directed arc (arc 2e = a->b, arc 2e+1 = b->a), one
// excess-degree slack per vertex, and the two path-length slacks.
// Constraints are stored in a normal form with constants folded into the
// expression so every right-hand side is 1, -1 or 0. Immutable once built.
class CqmModel {
public:
    std::size_t edge_count() const { return edges_.size(); }
    const EdgeKey& edge(std::size_t e) const { return edges_[e]; }
    std::optional<std::size_t> edge_index(const EdgeKey& key) const;
    double linear_cost(std::size_t e) const { return linear_[e]; }
    const std::vector<TurnTerm>& turn_terms() const { return turn_terms_; }

    std::size_t vertex_count() const { return vertices_.size(); }
    CellId vertex(std::size_t vi) const { return vertices_[vi]; }
    std::size_t vertex_index(CellId id) const;
    int degree_target(std::size_t vi) const { return degree_target_[vi]; }
    const std::vector<std::uint32_t>& incident_edges(std::size_t vi) const {
        return incident_[vi];
    }

    CellId start() const { return start_; }
    CellId goal() const { return goal_; }
    const PathBounds& bounds() const { return bounds_; }
    const Weights& weights() const { return weights_; }
    std::uint64_t calibration_hash() const { return calibration_hash_; }

    std::size_t binary_variable_count() const { return edges_.size(); }

    // Canonical text serialization, stable across platforms.
    void dump(std::ostream& os) const;
    std::string variable_name(std::size_t e) const;

private:
    friend CqmModel build_model(const CorridorGrid&, const std::vector<CellFeatures>&,
                                const Calibration&, const Weights&, CellId, CellId,
                                const PathBounds&);
    std::vector<EdgeKey> edges_;
    std::vector<double> linear_;
    std::vector<TurnTerm> turn_terms_;
    std::vector<CellId> vertices_;
    std::vector<int> degree_target_;
    std::vector<std::vector<std::uint32_t>> incident_;
    std::map<EdgeKey, std::uint32_t> edge_lookup_;
    std::map<CellId, std::uint32_t> vertex_lookup_;
    CellId start_, goal_;
    PathBounds bounds_;
    Weights weights_;
    std::uint64_t calibration_hash_{0};
};

CqmModel build_model(const CorridorGrid& grid, const std::vector<CellFeatures>& features,
                     const Calibration& cal, const Weights& weights, CellId s, CellId g,
                     const PathBounds& bounds = {});

struct Assignment {
    std::vector<std::uint8_t> x;       // per edge
    std::vector<double> flow;          // per arc, 2*edge_count
    std::vector<double> degree_slack;  // per vertex
    double len_shortfall{0.0};
    double len_excess{0.0};
};

struct Violation {
    std::string constraint;
    double magnitude;
};

struct Evaluation {
    double objective{0.0};
    bool feasible{false};
    std::vector<Violation> violations;
};

// Shared independent evaluator: computes the objective term-by-term from
// the model and checks every hard constraint at the given tolerance.
Evaluation evaluate_assignment(const CqmModel& model, const Assignment& assignment,
                               double tolerance = 1e-6);

// Optimal completion of a binary edge selection: unit flow along one
// active s-g path when one exists (BFS, deterministic), slacks at their
// closed-form minima.
Assignment complete_assignment(const CqmModel& model, const std::vector<std::uint8_t>& x);

// Cell sequence of one s-g path inside the active subgraph, when reachable.
std::optional<std::vector<CellId>> active_path(const CqmModel& model,
                                               const std::vector<std::uint8_t>& x);

}  // namespace hexroute
