#include "hexroute/hexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <cstdio>
#include <cstdlib>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

constexpr double kRes5AreaKm2 = 252.9;
constexpr std::uint64_t kAxialBias = 1ULL << 27;
constexpr int kAxialBits = 28;
constexpr std::int64_t kAxialMax = (1LL << 27) - 1;

constexpr double kSqrt3 = 1.7320508075688772935;

// The polar equal-area plane degenerates at the antipodal rim (radius
// 2R). Cells are valid while their center stays within colatitude 150
// degrees (latitude >= -60), which leaves a wide margin to the rim for
// every supported resolution.
constexpr double kMaxCenterRadiusKm = 12308.5;  // 2 * 6371 * sin(75 deg), rounded down

bool center_in_domain(int q, int r, double a) {
    double x = kSqrt3 * a * (q + r / 2.0);
    double y = 1.5 * a * r;
    return x * x + y * y <= kMaxCenterRadiusKm * kMaxCenterRadiusKm;
}

void check_resolution(int resolution) {
    if (resolution < kMinResolution || resolution > kMaxResolution) {
        throw ValidationError("resolution " + std::to_string(resolution) +
                              " outside supported range [" + std::to_string(kMinResolution) +
                              ", " + std::to_string(kMaxResolution) + "]");
    }
}

// Pointy-top axial layout in the LAEA plane.
PlanePoint axial_center(int q, int r, double a) {
    return {kSqrt3 * a * (q + r / 2.0), 1.5 * a * r};
}

// Fractional axial coordinates of a plane point, then cube rounding.
std::pair<int, int> axial_round(double x, double y, double a) {
    double qf = (kSqrt3 / 3.0 * x - 1.0 / 3.0 * y) / a;
    double rf = (2.0 / 3.0 * y) / a;
    double sf = -qf - rf;
    double q = std::round(qf), r = std::round(rf), s = std::round(sf);
    double dq = std::fabs(q - qf), dr = std::fabs(r - rf), ds = std::fabs(s - sf);
    if (dq > dr && dq > ds) {
        q = -r - s;
    } else if (dr > ds) {
        r = -q - s;
    }
    return {static_cast<int>(q), static_cast<int>(r)};
}

struct PlaneRing {
    std::vector<PlanePoint> pts;  // closed: first == last
};

struct PlanePolygon {
    std::vector<PlaneRing> rings;
};

double ring_signed_area(const std::vector<PlanePoint>& pts) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        s += pts[i].x * pts[i + 1].y - pts[i + 1].x * pts[i].y;
    }
    return 0.5 * s;
}

PlanePolygon project_polygon(const Polygon& poly) {
    PlanePolygon out;
    for (const auto& ring : poly.rings) {
        PlaneRing pr;
        pr.pts.reserve(ring.size());
        for (const auto& v : ring) pr.pts.push_back(laea_project(v));
        if (pr.pts.empty()) continue;
        if (pr.pts.front().x != pr.pts.back().x || pr.pts.front().y != pr.pts.back().y) {
            pr.pts.push_back(pr.pts.front());
        }
        out.rings.push_back(std::move(pr));
    }
    return out;
}

bool point_in_ring(const PlanePoint& p, const std::vector<PlanePoint>& ring) {
    bool inside = false;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[i + 1];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

bool point_in_polygon(const PlanePoint& p, const PlanePolygon& poly) {
    if (poly.rings.empty()) return false;
    if (!point_in_ring(p, poly.rings[0].pts)) return false;
    for (std::size_t h = 1; h < poly.rings.size(); ++h) {
        if (point_in_ring(p, poly.rings[h].pts)) return false;
    }
    return true;
}

double orient(const PlanePoint& a, const PlanePoint& b, const PlanePoint& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool on_segment(const PlanePoint& a, const PlanePoint& b, const PlanePoint& p) {
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_intersect(const PlanePoint& p1, const PlanePoint& p2, const PlanePoint& q1,
                        const PlanePoint& q2) {
    double d1 = orient(q1, q2, p1);
    double d2 = orient(q1, q2, p2);
    double d3 = orient(p1, p2, q1);
    double d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

// Region intersection between a hexagon and a (possibly holed) polygon:
// any boundary crossing, either containment direction, or centroid
// membership counts as an intersection.
bool hex_intersects_polygon(const std::array<PlanePoint, 6>& hex, const PlanePoint& center,
                            const PlanePolygon& poly) {
    if (poly.rings.empty() || poly.rings[0].pts.size() < 4) return false;
    if (point_in_polygon(center, poly)) return true;
    for (const auto& v : hex) {
        if (point_in_polygon(v, poly)) return true;
    }
    for (const auto& ring : poly.rings) {
        for (std::size_t i = 0; i + 1 < ring.pts.size(); ++i) {
            for (int k = 0; k < 6; ++k) {
                const auto& h1 = hex[k];
                const auto& h2 = hex[(k + 1) % 6];
                if (segments_intersect(h1, h2, ring.pts[i], ring.pts[i + 1])) return true;
            }
        }
    }
    // Polygon entirely inside the hexagon: test one polygon vertex against
    // the convex hex.
    const PlanePoint& v0 = poly.rings[0].pts[0];
    for (int k = 0; k < 6; ++k) {
        if (orient(hex[k], hex[(k + 1) % 6], v0) < 0) return false;
    }
    return true;
}

std::array<PlanePoint, 6> hex_corners(const PlanePoint& c, double a) {
    // Pointy-top: first corner at 30 degrees, CCW.
    std::array<PlanePoint, 6> out{};
    for (int k = 0; k < 6; ++k) {
        double ang = (60.0 * k + 30.0) * 3.141592653589793238462643383279502884 / 180.0;
        out[k] = {c.x + a * std::cos(ang), c.y + a * std::sin(ang)};
    }
    return out;
}

void check_ring_size(const std::vector<GeoPoint>& ring) {
    // A closed ring repeats its first vertex; require 3 distinct ones.
    std::size_t n = ring.size();
    if (n >= 2 && ring.front().lat == ring.back().lat && ring.front().lon == ring.back().lon) {
        --n;
    }
    if (n < 3) throw ValidationError("polygon ring has fewer than 3 vertices");
}

}  // namespace

double mean_cell_area_km2(int resolution) {
    check_resolution(resolution);
    return kRes5AreaKm2 * std::pow(7.0, 5 - resolution);
}

double hex_circumradius_km(int resolution) {
    return std::sqrt(2.0 * mean_cell_area_km2(resolution) / (3.0 * kSqrt3));
}

double cell_pitch_km(int resolution) { return kSqrt3 * hex_circumradius_km(resolution); }

CellId CellId::from_axial(int resolution, int q, int r) {
    check_resolution(resolution);
    if (q < -kAxialMax || q > kAxialMax || r < -kAxialMax || r > kAxialMax) {
        throw ValidationError("axial coordinate out of encodable range");
    }
    if (!center_in_domain(q, r, hex_circumradius_km(resolution))) {
        throw ValidationError("cell outside the supported polar domain (latitude >= -60)");
    }
    std::uint64_t raw = (static_cast<std::uint64_t>(resolution) << 56) |
                        ((static_cast<std::uint64_t>(q) + kAxialBias) << kAxialBits) |
                        (static_cast<std::uint64_t>(r) + kAxialBias);
    return CellId(raw);
}

CellId CellId::from_raw(std::uint64_t raw) {
    CellId id(raw);
    if (!id.valid()) throw ValidationError("invalid cell id " + std::to_string(raw));
    return id;
}

int CellId::resolution() const { return static_cast<int>(raw_ >> 56); }

int CellId::q() const {
    return static_cast<int>(static_cast<std::int64_t>((raw_ >> kAxialBits) & ((1ULL << kAxialBits) - 1)) -
                            static_cast<std::int64_t>(kAxialBias));
}

int CellId::r() const {
    return static_cast<int>(static_cast<std::int64_t>(raw_ & ((1ULL << kAxialBits) - 1)) -
                            static_cast<std::int64_t>(kAxialBias));
}

bool CellId::valid() const {
    if (raw_ == 0) return false;
    int res = resolution();
    if (res < kMinResolution || res > kMaxResolution) return false;
    if ((raw_ >> 60) != 0) return false;
    return center_in_domain(q(), r(), hex_circumradius_km(res));
}

PlanePoint cell_center_plane(CellId id) {
    return axial_center(id.q(), id.r(), hex_circumradius_km(id.resolution()));
}

GeoPoint cell_centroid(CellId id) { return laea_unproject(cell_center_plane(id)); }

std::array<PlanePoint, 6> cell_boundary_plane(CellId id) {
    return hex_corners(cell_center_plane(id), hex_circumradius_km(id.resolution()));
}

std::array<GeoPoint, 6> cell_boundary(CellId id) {
    auto plane = cell_boundary_plane(id);
    std::array<GeoPoint, 6> out{};
    for (int k = 0; k < 6; ++k) out[k] = laea_unproject(plane[k]);
    return out;
}

std::vector<CellId> lattice_neighbors(CellId id) {
    if (!id.valid()) throw ValidationError("invalid cell id");
    static constexpr int dq[6] = {1, 1, 0, -1, -1, 0};
    static constexpr int dr[6] = {0, -1, -1, 0, 1, 1};
    std::vector<CellId> out;
    out.reserve(6);
    double a = hex_circumradius_km(id.resolution());
    for (int k = 0; k < 6; ++k) {
        int q = id.q() + dq[k], r = id.r() + dr[k];
        if (!center_in_domain(q, r, a)) continue;
        out.push_back(CellId::from_axial(id.resolution(), q, r));
    }
    return out;
}

bool cells_adjacent(CellId a, CellId b) {
    if (a.resolution() != b.resolution()) return false;
    int dq = a.q() - b.q(), dr = a.r() - b.r();
    int ds = -dq - dr;
    return (std::abs(dq) + std::abs(dr) + std::abs(ds)) == 2;
}

CellId cell_containing(const GeoPoint& p, int resolution) {
    check_resolution(resolution);
    PlanePoint pp = laea_project(p);
    auto [q, r] = axial_round(pp.x, pp.y, hex_circumradius_km(resolution));
    return CellId::from_axial(resolution, q, r);
}

int hex_distance(CellId a, CellId b) {
    if (a.resolution() != b.resolution()) {
        throw ValidationError("hex_distance requires equal resolutions");
    }
    int dq = a.q() - b.q(), dr = a.r() - b.r();
    int ds = -dq - dr;
    return (std::abs(dq) + std::abs(dr) + std::abs(ds)) / 2;
}

Polygon normalize_longitudes(const Polygon& poly) {
    Polygon out;
    out.rings.reserve(poly.rings.size());
    bool outer = true;
    for (const auto& ring : poly.rings) {
        check_ring_size(ring);
        std::vector<GeoPoint> shifted;
        shifted.reserve(ring.size());
        for (const auto& v : ring) {
            GeoPoint c = canonical(v);
            if (c.lon < 0.0) c.lon += 360.0;
            shifted.push_back(c);
        }
        if (shifted.front().lat != shifted.back().lat ||
            shifted.front().lon != shifted.back().lon) {
            shifted.push_back(shifted.front());
        }
        // GeoJSON winding: outer CCW, holes CW (in projected space).
        std::vector<PlanePoint> plane;
        plane.reserve(shifted.size());
        for (const auto& v : shifted) plane.push_back(laea_project(v));
        double area = ring_signed_area(plane);
        bool want_ccw = outer;
        if ((area < 0.0) == want_ccw) {
            std::reverse(shifted.begin(), shifted.end());
        }
        out.rings.push_back(std::move(shifted));
        outer = false;
    }
    return out;
}

Polygon denormalize_longitudes(const Polygon& poly) {
    Polygon out;
    out.rings.reserve(poly.rings.size());
    for (const auto& ring : poly.rings) {
        std::vector<GeoPoint> back;
        back.reserve(ring.size());
        for (const auto& v : ring) back.push_back(canonical(v));
        out.rings.push_back(std::move(back));
    }
    return out;
}

std::set<CellId> polygon_to_cells(const Polygon& poly, int resolution) {
    check_resolution(resolution);
    for (const auto& ring : poly.rings) check_ring_size(ring);
    PlanePolygon plane = project_polygon(poly);
    if (plane.rings.empty()) return {};

    double a = hex_circumradius_km(resolution);
    double minx = std::numeric_limits<double>::infinity(), maxx = -minx;
    double miny = minx, maxy = -minx;
    for (const auto& p : plane.rings[0].pts) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }

    std::set<CellId> out;
    int rlo = static_cast<int>(std::floor((miny - 2.0 * a) / (1.5 * a)));
    int rhi = static_cast<int>(std::ceil((maxy + 2.0 * a) / (1.5 * a)));
    for (int r = rlo; r <= rhi; ++r) {
        int qlo = static_cast<int>(std::floor((minx - 2.0 * a) / (kSqrt3 * a) - r / 2.0));
        int qhi = static_cast<int>(std::ceil((maxx + 2.0 * a) / (kSqrt3 * a) - r / 2.0));
        for (int q = qlo; q <= qhi; ++q) {
            if (!center_in_domain(q, r, a)) continue;
            PlanePoint c = axial_center(q, r, a);
            auto hex = hex_corners(c, a);
            if (hex_intersects_polygon(hex, c, plane)) {
                out.insert(CellId::from_axial(resolution, q, r));
            }
        }
    }
    return out;
}

std::set<CellId> filter_land(const std::set<CellId>& cells, const std::vector<Polygon>& land) {
    if (land.empty()) return cells;
    std::vector<PlanePolygon> plane;
    plane.reserve(land.size());
    for (const auto& poly : land) plane.push_back(project_polygon(poly));

    std::set<CellId> out;
    for (CellId id : cells) {
        PlanePoint c = cell_center_plane(id);
        auto hex = cell_boundary_plane(id);
        bool touches_land = false;
        for (const auto& lp : plane) {
            if (hex_intersects_polygon(hex, c, lp)) {
                touches_land = true;
                break;
            }
        }
        if (!touches_land) out.insert(id);
    }
    return out;
}

CorridorGrid CorridorGrid::build(const Polygon& corridor, const std::vector<Polygon>& land,
                                 int resolution) {
    Polygon normalized = normalize_longitudes(corridor);
    std::vector<Polygon> land_normalized;
    land_normalized.reserve(land.size());
    for (const auto& lp : land) land_normalized.push_back(normalize_longitudes(lp));

    std::set<CellId> cells = polygon_to_cells(normalized, resolution);
    cells = filter_land(cells, land_normalized);

    CorridorGrid grid = from_cells(resolution, cells);
    grid.boundary_ = denormalize_longitudes(normalized);
    return grid;
}

CorridorGrid CorridorGrid::from_cells(int resolution, const std::set<CellId>& cells) {
    check_resolution(resolution);
    CorridorGrid grid;
    grid.resolution_ = resolution;
    for (CellId id : cells) {
        if (id.resolution() != resolution) {
            throw ValidationError("cell resolution mismatch in grid construction");
        }
        HexCell cell;
        cell.id = id;
        cell.centroid = cell_centroid(id);
        cell.is_ocean = true;
        for (CellId nb : lattice_neighbors(id)) {
            if (cells.count(nb)) cell.neighbors.push_back(nb);
        }
        std::sort(cell.neighbors.begin(), cell.neighbors.end());
        grid.cells_.emplace(id, std::move(cell));
    }
    return grid;
}

bool CorridorGrid::contains(CellId id) const { return cells_.count(id) != 0; }

const HexCell& CorridorGrid::cell(CellId id) const {
    auto it = cells_.find(id);
    if (it == cells_.end()) {
        throw ValidationError("cell " + std::to_string(id.raw()) + " not in grid");
    }
    return it->second;
}

const std::vector<CellId>& CorridorGrid::neighbors(CellId id) const { return cell(id).neighbors; }

CellId CorridorGrid::nearest_cell(const GeoPoint& p) const {
    if (cells_.empty()) throw ValidationError("grid is empty");
    Vec3 v = to_unit_vector(p);
    CellId best;
    double best_dot = -2.0;
    for (const auto& [id, cell] : cells_) {
        Vec3 u = to_unit_vector(cell.centroid);
        double d = u.x * v.x + u.y * v.y + u.z * v.z;
        if (d > best_dot) {
            best_dot = d;
            best = id;
        }
    }
    return best;
}

void CorridorGrid::dump(std::ostream& os) const {
    for (const auto& [id, cell] : cells_) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9f,%.9f", cell.centroid.lat, cell.centroid.lon);
        os << id.raw() << ',' << buf << ',' << (cell.is_ocean ? 1 : 0) << ',';
        for (std::size_t i = 0; i < cell.neighbors.size(); ++i) {
            if (i) os << ';';
            os << cell.neighbors[i].raw();
        }
        os << '\n';
    }
}

}  // namespace hexroute
