#pragma once
#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "hexroute/geo.hpp"

namespace hexroute {

// Supported tessellation levels. Mean cell area follows an aperture-7
// hierarchy anchored at ~252.9 km^2 for resolution 5; because the lattice
// lives in an equal-area projection, every cell at a given resolution has
// exactly this spherical area (max/min ratio = 1).
constexpr int kMinResolution = 3;
constexpr int kMaxResolution = 8;

double mean_cell_area_km2(int resolution);
double hex_circumradius_km(int resolution);
// Centroid-to-centroid spacing of adjacent cells.
double cell_pitch_km(int resolution);

// Opaque 64-bit cell index: 4 bits resolution, 28+28 bits biased axial
// coordinates on the polar lattice. Stable across runs and platforms.
class CellId {
public:
    CellId() = default;

    static CellId from_axial(int resolution, int q, int r);
    static CellId from_raw(std::uint64_t raw);

    std::uint64_t raw() const { return raw_; }
    int resolution() const;
    int q() const;
    int r() const;
    bool valid() const;

    auto operator<=>(const CellId&) const = default;

private:
    explicit CellId(std::uint64_t raw) : raw_(raw) {}
    std::uint64_t raw_{0};
};

GeoPoint cell_centroid(CellId id);
std::array<GeoPoint, 6> cell_boundary(CellId id);
PlanePoint cell_center_plane(CellId id);
std::array<PlanePoint, 6> cell_boundary_plane(CellId id);

// Lattice neighbors independent of any corridor membership: 6 for every
// cell away from the supported-domain edge.
std::vector<CellId> lattice_neighbors(CellId id);
bool cells_adjacent(CellId a, CellId b);

CellId cell_containing(const GeoPoint& p, int resolution);

// Minimum number of lattice steps between two cells of equal resolution.
int hex_distance(CellId a, CellId b);

// Longitude-shift sandwich for antimeridian-safe polygon handling.
// normalize maps vertex longitudes into [0, 360); denormalize restores
// the canonical [-180, 180) range. Throws ValidationError on rings with
// fewer than 3 distinct vertices. Outer rings are re-wound CCW and holes
// CW as part of normalization.
Polygon normalize_longitudes(const Polygon& poly);
Polygon denormalize_longitudes(const Polygon& poly);

// Cells whose hexagon intersects the polygon (boundary or interior).
// The polygon must already be normalized. Deterministic for fixed input.
std::set<CellId> polygon_to_cells(const Polygon& poly, int resolution);

// Removes every cell whose hexagon intersects any land polygon.
std::set<CellId> filter_land(const std::set<CellId>& cells, const std::vector<Polygon>& land);

struct HexCell {
    CellId id;
    GeoPoint centroid;
    std::vector<CellId> neighbors;  // routable neighbors present in the grid
    bool is_ocean{true};
};

// Immutable after construction; safe to share across threads.
class CorridorGrid {
public:
    static CorridorGrid build(const Polygon& corridor, const std::vector<Polygon>& land,
                              int resolution);
    // Assembles a grid directly from a cell set (fixtures, tests, tools).
    static CorridorGrid from_cells(int resolution, const std::set<CellId>& cells);

    bool contains(CellId id) const;
    const HexCell& cell(CellId id) const;
    // Routable neighbors of a grid cell; ValidationError for unknown ids.
    const std::vector<CellId>& neighbors(CellId id) const;

    std::size_t size() const { return cells_.size(); }
    int resolution() const { return resolution_; }
    const std::map<CellId, HexCell>& cells() const { return cells_; }
    const Polygon& boundary() const { return boundary_; }

    // Nearest cell centroid by great-circle distance (start/goal snapping).
    CellId nearest_cell(const GeoPoint& p) const;

    // Record per line: cell_id,lat,lon,is_ocean,neighbor;neighbor;...
    void dump(std::ostream& os) const;

private:
    int resolution_{kMinResolution};
    std::map<CellId, HexCell> cells_;
    Polygon boundary_;
};

}  // namespace hexroute
