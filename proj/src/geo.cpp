#include "hexroute/geo.hpp"

#include <algorithm>
#include <cmath>

namespace hexroute {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

double wrap360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    return w;
}

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
    double n = norm(a);
    if (n == 0.0) return {0.0, 0.0, 1.0};
    return {a.x / n, a.y / n, a.z / n};
}

// Bearing of tangent direction t at surface point r (both unit-ish vectors).
double tangent_bearing_deg(const Vec3& r, const Vec3& t) {
    const Vec3 up{0.0, 0.0, 1.0};
    Vec3 east = normalized(cross(up, r));
    Vec3 north = normalized(cross(r, east));
    return wrap360(rad2deg(std::atan2(dot(t, east), dot(t, north))));
}

}  // namespace

GeoPoint canonical(GeoPoint p) {
    double lon = std::fmod(p.lon + 180.0, 360.0);
    if (lon < 0.0) lon += 360.0;
    p.lon = lon - 180.0;
    return p;
}

bool is_canonical(const GeoPoint& p) {
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon < 180.0;
}

Vec3 to_unit_vector(const GeoPoint& p) {
    double lat = deg2rad(p.lat), lon = deg2rad(p.lon);
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

GeoPoint from_unit_vector(const Vec3& v) {
    Vec3 u = normalized(v);
    return {rad2deg(std::asin(std::clamp(u.z, -1.0, 1.0))), rad2deg(std::atan2(u.y, u.x))};
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
    double dphi = p2 - p1;
    double dlmb = deg2rad(b.lon - a.lon);
    double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlmb / 2.0);
    double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double initial_bearing_deg(const GeoPoint& from, const GeoPoint& to) {
    double p1 = deg2rad(from.lat), p2 = deg2rad(to.lat);
    double dlmb = deg2rad(to.lon - from.lon);
    double y = std::sin(dlmb) * std::cos(p2);
    double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dlmb);
    return wrap360(rad2deg(std::atan2(y, x)));
}

double final_bearing_deg(const GeoPoint& from, const GeoPoint& to) {
    return wrap360(initial_bearing_deg(to, from) + 180.0);
}

double turn_angle_deg(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
    double inbound = final_bearing_deg(a, b);
    double outbound = initial_bearing_deg(b, c);
    // wrap the signed change of course into (-180, 180], then fold
    return std::fabs(std::fmod(outbound - inbound + 540.0, 360.0) - 180.0);
}

GeoPoint great_circle_point(const GeoPoint& a, const GeoPoint& b, double t) {
    Vec3 va = to_unit_vector(a), vb = to_unit_vector(b);
    double omega = std::acos(std::clamp(dot(va, vb), -1.0, 1.0));
    if (omega < 1e-12) return a;
    double s = std::sin(omega);
    double wa = std::sin((1.0 - t) * omega) / s;
    double wb = std::sin(t * omega) / s;
    return from_unit_vector({wa * va.x + wb * vb.x, wa * va.y + wb * vb.y, wa * va.z + wb * vb.z});
}

GeoPoint destination_point(const GeoPoint& from, double bearing_deg, double dist_km) {
    double p1 = deg2rad(from.lat), l1 = deg2rad(from.lon);
    double brng = deg2rad(bearing_deg);
    double delta = dist_km / kEarthRadiusKm;
    double p2 = std::asin(std::clamp(
        std::sin(p1) * std::cos(delta) + std::cos(p1) * std::sin(delta) * std::cos(brng), -1.0, 1.0));
    double l2 = l1 + std::atan2(std::sin(brng) * std::sin(delta) * std::cos(p1),
                                std::cos(delta) - std::sin(p1) * std::sin(p2));
    return canonical({rad2deg(p2), rad2deg(l2)});
}

GreatCircleAxis::GreatCircleAxis(const GeoPoint& start, const GeoPoint& goal)
    : start_(start), goal_(goal) {
    a_ = to_unit_vector(start);
    b_ = to_unit_vector(goal);
    length_km_ = haversine_km(start, goal);
    Vec3 n = cross(a_, b_);
    degenerate_ = norm(n) < 1e-12;
    normal_ = degenerate_ ? Vec3{0.0, 0.0, 1.0} : normalized(n);
}

double GreatCircleAxis::cross_track_km(const GeoPoint& p) const {
    if (degenerate_) return 0.0;
    Vec3 v = to_unit_vector(p);
    double s = std::clamp(dot(v, normal_), -1.0, 1.0);
    return std::fabs(std::asin(s)) * kEarthRadiusKm;
}

double GreatCircleAxis::track_bearing_at_nearest_deg(const GeoPoint& p) const {
    if (degenerate_) return 0.0;
    Vec3 v = to_unit_vector(p);
    double off = dot(v, normal_);
    Vec3 proj{v.x - off * normal_.x, v.y - off * normal_.y, v.z - off * normal_.z};
    if (norm(proj) < 1e-12) {
        // p sits at the pole of the axis circle; every track point is
        // equally near. Use the course at the start as a stable fallback.
        return tangent_bearing_deg(a_, cross(normal_, a_));
    }
    Vec3 nearest = normalized(proj);
    Vec3 tangent = normalized(cross(normal_, nearest));
    return tangent_bearing_deg(nearest, tangent);
}

PlanePoint laea_project(const GeoPoint& p) {
    double colat = deg2rad(90.0 - p.lat);
    double r = 2.0 * kEarthRadiusKm * std::sin(colat / 2.0);
    double lm = deg2rad(p.lon);
    return {r * std::sin(lm), -r * std::cos(lm)};
}

GeoPoint laea_unproject(const PlanePoint& p) {
    double r = std::hypot(p.x, p.y);
    double colat = 2.0 * std::asin(std::clamp(r / (2.0 * kEarthRadiusKm), 0.0, 1.0));
    double lat = 90.0 - rad2deg(colat);
    double lon = (r == 0.0) ? 0.0 : rad2deg(std::atan2(p.x, -p.y));
    return canonical({lat, lon});
}

}  // namespace hexroute
