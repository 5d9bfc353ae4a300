#pragma once

// GeoJSON FeatureCollection reader for Polygon / MultiPolygon features and
// the matching writer used by the synthetic generator.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "floodmob/error.hpp"
#include "floodmob/format.hpp"
#include "floodmob/geo.hpp"

namespace floodmob::geojson {

using json = nlohmann::json;

struct PolygonFeature {
  std::size_t index = 0;  // position in the "features" array
  json properties;
  std::vector<geo::PolygonGeom> parts;
  std::string error;  // non-empty when the geometry failed validation

  bool valid() const { return error.empty(); }

  std::optional<std::string> string_property(const std::string& key) const {
    if (!properties.is_object()) return std::nullopt;
    auto it = properties.find(key);
    if (it == properties.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return it->dump();
  }
};

namespace detail {

inline geo::Ring parse_ring(const json& coords) {
  if (!coords.is_array()) throw GeometryError("ring is not an array");
  geo::Ring ring;
  ring.reserve(coords.size());
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      throw GeometryError("position is not [lon, lat]");
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  return ring;
}

inline geo::PolygonGeom parse_polygon(const json& rings) {
  if (!rings.is_array() || rings.empty()) throw GeometryError("polygon has no rings");
  std::vector<geo::Ring> holes;
  for (std::size_t i = 1; i < rings.size(); ++i) holes.push_back(parse_ring(rings[i]));
  return geo::PolygonGeom::make(parse_ring(rings[0]), std::move(holes));
}

}  // namespace detail

/// Reads every feature. Structural problems (not JSON, not a FeatureCollection,
/// unsupported geometry type) are fatal and name the feature; ring validation
/// failures are reported per feature through PolygonFeature::error.
inline std::vector<PolygonFeature> read_polygon_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(path.string() + ": cannot open file");

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IngestError(path.string() + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array())
    throw IngestError(path.string() + ": expected a GeoJSON FeatureCollection");

  std::vector<PolygonFeature> out;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string where = path.string() + ": feature " + std::to_string(i);
    if (!f.is_object() || !f.contains("geometry") || !f["geometry"].is_object())
      throw IngestError(where + ": missing geometry");
    const auto& g = f["geometry"];
    const std::string type = g.value("type", "");
    if (!g.contains("coordinates")) throw IngestError(where + ": geometry has no coordinates");

    PolygonFeature pf;
    pf.index = i;
    pf.properties = f.value("properties", json::object());
    try {
      if (type == "Polygon") {
        pf.parts.push_back(detail::parse_polygon(g["coordinates"]));
      } else if (type == "MultiPolygon") {
        if (!g["coordinates"].is_array()) throw GeometryError("MultiPolygon coordinates are not an array");
        for (const auto& poly : g["coordinates"]) pf.parts.push_back(detail::parse_polygon(poly));
        if (pf.parts.empty()) throw GeometryError("MultiPolygon has no parts");
      } else {
        throw IngestError(where + ": unsupported geometry type '" + type + "'");
      }
    } catch (const GeometryError& e) {
      pf.parts.clear();
      pf.error = where + ": " + e.what();
    }
    out.push_back(std::move(pf));
  }
  return out;
}

/// Serializes one feature on a single line. Coordinates use the shortest
/// round-trip decimal form, so reading the file back yields identical doubles.
inline std::string feature_line(const std::vector<geo::PolygonGeom>& parts, const std::string& properties_json) {
  auto ring_text = [](const geo::Ring& r) {
    std::string s = "[";
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) s += ",";
      s += "[" + format_shortest(r[i].lon) + "," + format_shortest(r[i].lat) + "]";
    }
    return s + "]";
  };
  auto poly_text = [&](const geo::PolygonGeom& g) {
    std::string s = "[" + ring_text(g.exterior());
    for (const auto& h : g.holes()) s += "," + ring_text(h);
    return s + "]";
  };
  std::string geom;
  if (parts.size() == 1) {
    geom = R"({"type":"Polygon","coordinates":)" + poly_text(parts.front()) + "}";
  } else {
    geom = R"({"type":"MultiPolygon","coordinates":[)";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) geom += ",";
      geom += poly_text(parts[i]);
    }
    geom += "]}";
  }
  return R"({"type":"Feature","properties":)" + properties_json + R"(,"geometry":)" + geom + "}";
}

inline void write_feature_collection(const std::filesystem::path& path, const std::vector<std::string>& feature_lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError(path.string() + ": cannot write file");
  out << "{\"type\":\"FeatureCollection\",\"features\":[\n";
  for (std::size_t i = 0; i < feature_lines.size(); ++i) {
    out << feature_lines[i] << (i + 1 < feature_lines.size() ? ",\n" : "\n");
  }
  out << "]}\n";
}

}  // namespace floodmob::geojson
