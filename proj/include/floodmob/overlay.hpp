#pragma once

// Floodplain layer, CBG lookup and the polygon overlay that tags flood-prone CBGs.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodmob/geo.hpp"
#include "floodmob/parallel.hpp"
#include "floodmob/records.hpp"
#include "floodmob/spatial_index.hpp"

namespace floodmob::geo {

/// 100-year floodplain polygons with an index over their boxes. Immutable.
class FloodplainMap {
 public:
  FloodplainMap() = default;

  explicit FloodplainMap(std::vector<PolygonGeom> polygons,
                         std::size_t leaf_capacity = SpatialIndex::kDefaultLeafCapacity)
      : polygons_(std::move(polygons)) {
    std::vector<BBox> boxes;
    boxes.reserve(polygons_.size());
    for (const auto& g : polygons_) boxes.push_back(g.bbox());
    index_ = SpatialIndex(boxes, leaf_capacity);
  }

  const std::vector<PolygonGeom>& polygons() const { return polygons_; }
  const SpatialIndex& index() const { return index_; }
  std::size_t size() const { return polygons_.size(); }

  bool contains(GeoPoint p) const {
    bool hit = false;
    index_.visit(p, [&](std::size_t id) {
      hit = point_in_polygon(p, polygons_[id]);
      return !hit;
    });
    return hit;
  }

 private:
  std::vector<PolygonGeom> polygons_;
  SpatialIndex index_;
};

inline bool classify_point(GeoPoint p, const FloodplainMap& map) { return map.contains(p); }

/// Verdict per input position (1 = inside some floodplain polygon).
inline std::vector<std::uint8_t> classify_points(std::span<const GeoPoint> points,
                                                 const FloodplainMap& map, unsigned workers = 1) {
  std::vector<std::uint8_t> out(points.size(), 0);
  parallel_chunks(points.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = map.contains(points[i]) ? 1 : 0;
  });
  return out;
}

/// Shares any point with some floodplain polygon (containment either way included).
inline bool cbg_is_flood_prone(const CbgRecord& cbg, const FloodplainMap& map) {
  for (const auto& part : cbg.geometry) {
    bool hit = false;
    map.index().visit(part.bbox(), [&](std::size_t id) {
      hit = polygons_intersect(part, map.polygons()[id]);
      return !hit;
    });
    if (hit) return true;
  }
  return false;
}

inline void tag_flood_prone(std::vector<CbgRecord>& cbgs, const FloodplainMap& map, unsigned workers = 1) {
  parallel_chunks(cbgs.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) cbgs[i].flood_prone = cbg_is_flood_prone(cbgs[i], map);
  });
}

/// Point -> CBG lookup over a CBG list. Holds a view of the list, which must
/// outlive the index and stay unmodified.
class CbgIndex {
 public:
  CbgIndex() = default;

  explicit CbgIndex(std::span<const CbgRecord> cbgs) : cbgs_(cbgs) {
    std::vector<BBox> boxes;
    for (std::size_t i = 0; i < cbgs.size(); ++i) {
      by_id_.emplace(cbgs[i].cbg_id, i);
      for (const auto& part : cbgs[i].geometry) {
        boxes.push_back(part.bbox());
        part_owner_.push_back(i);
        part_geom_.push_back(&part);
      }
    }
    index_ = SpatialIndex(boxes);
  }

  std::span<const CbgRecord> records() const { return cbgs_; }

  const CbgRecord* find(std::string_view cbg_id) const {
    auto it = by_id_.find(cbg_id);
    return it == by_id_.end() ? nullptr : &cbgs_[it->second];
  }

  /// Position of the containing CBG; on shared boundaries the smallest cbg_id wins.
  std::optional<std::size_t> locate(GeoPoint p) const {
    std::optional<std::size_t> best;
    index_.visit(p, [&](std::size_t part) {
      const std::size_t owner = part_owner_[part];
      if (best && cbgs_[owner].cbg_id >= cbgs_[*best].cbg_id) return;
      if (point_in_polygon(p, *part_geom_[part])) best = owner;
    });
    return best;
  }

  const CbgRecord* locate_record(GeoPoint p) const {
    auto i = locate(p);
    return i ? &cbgs_[*i] : nullptr;
  }

 private:
  std::span<const CbgRecord> cbgs_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::vector<std::size_t> part_owner_;
  std::vector<const PolygonGeom*> part_geom_;
  SpatialIndex index_;
};

inline std::optional<std::string> locate_cbg(GeoPoint p, const CbgIndex& index) {
  if (const auto* r = index.locate_record(p)) return r->cbg_id;
  return std::nullopt;
}

}  // namespace floodmob::geo
