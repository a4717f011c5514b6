#include "hexroute/geojson.hpp"

#include <fstream>

#include "hexroute/errors.hpp"

namespace hexroute {

namespace {

Polygon polygon_from_coords(const nlohmann::json& coords) {
    Polygon poly;
    for (const auto& ring : coords) {
        std::vector<GeoPoint> points;
        points.reserve(ring.size());
        for (const auto& pos : ring) {
            if (!pos.is_array() || pos.size() < 2) {
                throw ValidationError("GeoJSON position must be [lon, lat]");
            }
            points.push_back(canonical({pos[1].get<double>(), pos[0].get<double>()}));
        }
        poly.rings.push_back(std::move(points));
    }
    return poly;
}

void collect(const nlohmann::json& node, std::vector<Polygon>& out) {
    if (!node.is_object()) return;
    std::string type = node.value("type", "");
    if (type == "FeatureCollection") {
        for (const auto& f : node.value("features", nlohmann::json::array())) collect(f, out);
    } else if (type == "Feature") {
        if (node.contains("geometry")) collect(node["geometry"], out);
    } else if (type == "Polygon") {
        out.push_back(polygon_from_coords(node.at("coordinates")));
    } else if (type == "MultiPolygon") {
        for (const auto& coords : node.at("coordinates")) {
            out.push_back(polygon_from_coords(coords));
        }
    } else if (type == "GeometryCollection") {
        for (const auto& g : node.value("geometries", nlohmann::json::array())) collect(g, out);
    }
}

}  // namespace

std::vector<Polygon> polygons_from_geojson(const nlohmann::json& doc) {
    std::vector<Polygon> out;
    collect(doc, out);
    return out;
}

std::vector<Polygon> read_polygons(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open GeoJSON file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& ex) {
        throw ValidationError("invalid GeoJSON in " + path + ": " + ex.what());
    }
    auto polys = polygons_from_geojson(doc);
    if (polys.empty()) {
        throw ValidationError("no Polygon/MultiPolygon geometry found in " + path);
    }
    return polys;
}

nlohmann::json polygon_to_geojson(const Polygon& poly) {
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& ring : poly.rings) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& p : ring) jr.push_back({p.lon, p.lat});
        coords.push_back(jr);
    }
    return {{"type", "Polygon"}, {"coordinates", coords}};
}

}  // namespace hexroute
