#pragma once
#include <vector>

namespace hexroute {

// Mean Earth radius used for every spherical computation in the toolkit.
constexpr double kEarthRadiusKm = 6371.0;

// Position in degrees. Canonical longitude range is [-180, 180); shifted
// [0, 360) forms exist only inside the normalize/denormalize sandwich used
// for antimeridian-safe polygon processing.
struct GeoPoint {
    double lat{0.0};
    double lon{0.0};
};

GeoPoint canonical(GeoPoint p);
bool is_canonical(const GeoPoint& p);

// First ring outer, remaining rings holes. Rings are closed
// (first vertex == last vertex).
struct Polygon {
    std::vector<std::vector<GeoPoint>> rings;
};

struct Vec3 {
    double x{0.0}, y{0.0}, z{0.0};
};

Vec3 to_unit_vector(const GeoPoint& p);
GeoPoint from_unit_vector(const Vec3& v);

// Great-circle distance via the haversine relation, R = 6371 km.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

// Compass bearings in degrees [0, 360).
double initial_bearing_deg(const GeoPoint& from, const GeoPoint& to);
double final_bearing_deg(const GeoPoint& from, const GeoPoint& to);

// Turning angle at pivot b for the leg a->b->c, in [0, 180].
// 0 = straight continuation, 180 = full reversal.
double turn_angle_deg(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c);

// Point at parameter t in [0,1] along the great circle a->b (slerp).
GeoPoint great_circle_point(const GeoPoint& a, const GeoPoint& b, double t);

// Spherical direct problem: destination after dist_km along bearing_deg.
GeoPoint destination_point(const GeoPoint& from, double bearing_deg, double dist_km);

// Reference geodesic through the start and goal cells; supplies the
// cross-track and local-course quantities the alignment penalties use.
class GreatCircleAxis {
public:
    GreatCircleAxis(const GeoPoint& start, const GeoPoint& goal);

    // Unsigned cross-track distance of p from the axis great circle.
    double cross_track_km(const GeoPoint& p) const;
    // Course of the axis at the track point nearest to p, degrees [0, 360).
    double track_bearing_at_nearest_deg(const GeoPoint& p) const;

    double length_km() const { return length_km_; }
    const GeoPoint& start() const { return start_; }
    const GeoPoint& goal() const { return goal_; }

private:
    GeoPoint start_, goal_;
    Vec3 a_, b_, normal_;
    double length_km_;
    bool degenerate_;  // start == goal or antipodal
};

// North-polar Lambert azimuthal equal-area projection, km units.
// Area-exact, so hexagons laid out in this plane have identical spherical
// area regardless of position.
struct PlanePoint {
    double x{0.0}, y{0.0};
};

PlanePoint laea_project(const GeoPoint& p);
GeoPoint laea_unproject(const PlanePoint& p);

}  // namespace hexroute
