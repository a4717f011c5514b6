#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "hexroute/geo.hpp"

namespace hexroute {

// Extracts every polygon from a GeoJSON document: Polygon, MultiPolygon,
// Feature and FeatureCollection geometries (WGS84, lon-lat order).
std::vector<Polygon> polygons_from_geojson(const nlohmann::json& doc);
std::vector<Polygon> read_polygons(const std::string& path);

nlohmann::json polygon_to_geojson(const Polygon& poly);

}  // namespace hexroute
