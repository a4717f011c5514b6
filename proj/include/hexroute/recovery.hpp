#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hexroute/model.hpp"
#include "hexroute/solvers.hpp"

namespace hexroute {

// Activated subgraph of a solver result: edges with x strictly above the
// threshold, plus directed traversal hints from positive flow values.
struct ActiveSubgraph {
    std::vector<std::uint32_t> edges;                    // model edge indices
    std::vector<std::pair<CellId, CellId>> flow_hints;   // from -> to where f > 0
};

ActiveSubgraph extract_active(const CqmModel& model, const SolverResult& result,
                              double threshold = 0.5);

struct Route {
    std::vector<CellId> cells;        // ordered s..g, simple
    std::vector<GeoPoint> polyline;   // great-circle sampled, <= 25 km spacing
    std::vector<EdgeKey> relinked_edges;
};

// Orders the activated edges into one continuous s-g route. Positive-flow
// direction takes precedence; otherwise the cheapest traversal within the
// active subgraph. Fragmented subgraphs are repaired by minimal-cost
// relinking over the full graph without dropping solver-activated edges
// from the candidate set. Throws InfeasibleError when no route exists
// even in the full graph.
Route reconstruct(const ActiveSubgraph& active, const CqmModel& model, const CorridorGrid& grid);

struct RouteMetrics {
    double length_km{0.0};
    double zigzag_raw{0.0};   // sum of (1 - cos(theta)) over interior turns
    double zigzag_pct{0.0};   // 100 * zigzag_raw / (2 * interior_count)
    double co2_kg{0.0};       // length_km * 500 exactly
    int selected_nodes{0};
};

// Throws ValidationError for routes with fewer than 2 cells.
RouteMetrics metrics(const Route& route);

// Fixed-factor emission proxy: 50,000 t cargo at 10 gCO2 per tonne-km.
double co2_proxy_kg(double length_km);

// metric CSV row: solver,nodes,quad_terms,objective,selected_nodes,km,zigzag_pct,co2_kg,time_s
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& solver, std::size_t nodes,
                            std::size_t quad_terms, double objective,
                            const RouteMetrics& rm, double time_s);

// RFC 7946 FeatureCollection: route line (split at the antimeridian into a
// MultiLineString when crossed), one Point feature per route cell, metrics
// embedded as properties.
nlohmann::json route_geojson(const Route& route, const RouteMetrics& rm);
void export_geojson(const Route& route, const RouteMetrics& rm, const std::string& path);

// Validity bundle used by tests and the acceptance suite.
struct RouteCheck {
    bool simple{false};
    bool consecutive_neighbors{false};
    bool endpoints_ok{false};
    bool phi_zero{false};  // degree and length penalties vanish in bounds
    bool antimeridian_ok{false};
    bool all() const {
        return simple && consecutive_neighbors && endpoints_ok && phi_zero && antimeridian_ok;
    }
};

RouteCheck validate_route(const Route& route, const CqmModel& model, const CorridorGrid& grid);

}  // namespace hexroute
