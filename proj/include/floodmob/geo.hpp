#pragma once

// Planar geometry on WGS84 lon/lat coordinates: points, boxes, validated
// polygons with holes, inclusive point-in-polygon and polygon intersection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "floodmob/error.hpp"

namespace floodmob::geo {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool is_valid_coordinate(GeoPoint p) {
  return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
         p.lat >= -90.0 && p.lat <= 90.0;
}

struct BBox {
  double min_lon = std::numeric_limits<double>::infinity();
  double min_lat = std::numeric_limits<double>::infinity();
  double max_lon = -std::numeric_limits<double>::infinity();
  double max_lat = -std::numeric_limits<double>::infinity();

  static BBox of_point(GeoPoint p) { return {p.lon, p.lat, p.lon, p.lat}; }

  bool empty() const { return min_lon > max_lon || min_lat > max_lat; }

  void expand(GeoPoint p) {
    min_lon = std::min(min_lon, p.lon);
    min_lat = std::min(min_lat, p.lat);
    max_lon = std::max(max_lon, p.lon);
    max_lat = std::max(max_lat, p.lat);
  }

  void expand(const BBox& o) {
    min_lon = std::min(min_lon, o.min_lon);
    min_lat = std::min(min_lat, o.min_lat);
    max_lon = std::max(max_lon, o.max_lon);
    max_lat = std::max(max_lat, o.max_lat);
  }

  // Closed-interval tests: touching boxes intersect.
  bool intersects(const BBox& o) const {
    return min_lon <= o.max_lon && o.min_lon <= max_lon && min_lat <= o.max_lat &&
           o.min_lat <= max_lat;
  }

  bool contains(GeoPoint p) const {
    return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
  }

  double center_lon() const { return 0.5 * (min_lon + max_lon); }
  double center_lat() const { return 0.5 * (min_lat + max_lat); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Closed ring: front() == back().
using Ring = std::vector<GeoPoint>;

/// Appends the first vertex if the ring is open. Used by generators and tests;
/// ingest does not normalize (an open GeoJSON ring is a rejected feature).
inline Ring close_ring(Ring ring) {
  if (!ring.empty() && ring.front() != ring.back()) ring.push_back(ring.front());
  return ring;
}

inline Ring rectangle_ring(double min_lon, double min_lat, double max_lon, double max_lat) {
  return {{min_lon, min_lat}, {max_lon, min_lat}, {max_lon, max_lat}, {min_lon, max_lat},
          {min_lon, min_lat}};
}

inline void validate_ring(const Ring& ring, const char* what) {
  if (ring.size() < 4)
    throw GeometryError(std::string(what) + ": ring needs at least 4 positions (3 vertices + closing)");
  if (ring.front() != ring.back()) throw GeometryError(std::string(what) + ": ring is not closed");
  for (const auto& p : ring)
    if (!is_valid_coordinate(p)) throw GeometryError(std::string(what) + ": coordinate out of range");
  std::vector<GeoPoint> distinct(ring.begin(), ring.end() - 1);
  std::sort(distinct.begin(), distinct.end(), [](GeoPoint a, GeoPoint b) {
    return a.lon < b.lon || (a.lon == b.lon && a.lat < b.lat);
  });
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw GeometryError(std::string(what) + ": ring has fewer than 3 distinct vertices");
}

/// A validated simple polygon with optional holes. Construction goes through
/// make(), which throws GeometryError for malformed rings.
class PolygonGeom {
 public:
  static PolygonGeom make(Ring exterior, std::vector<Ring> holes = {}) {
    validate_ring(exterior, "exterior");
    for (const auto& h : holes) validate_ring(h, "hole");
    PolygonGeom g;
    g.exterior_ = std::move(exterior);
    g.holes_ = std::move(holes);
    for (const auto& p : g.exterior_) g.bbox_.expand(p);
    return g;
  }

  static PolygonGeom rectangle(double min_lon, double min_lat, double max_lon, double max_lat) {
    return make(rectangle_ring(min_lon, min_lat, max_lon, max_lat));
  }

  const Ring& exterior() const { return exterior_; }
  const std::vector<Ring>& holes() const { return holes_; }
  const BBox& bbox() const { return bbox_; }

  template <class Fn>
  void for_each_ring(Fn&& fn) const {
    fn(exterior_);
    for (const auto& h : holes_) fn(h);
  }

  PolygonGeom translated(double dlon, double dlat) const {
    auto shift = [&](Ring r) {
      for (auto& p : r) {
        p.lon += dlon;
        p.lat += dlat;
      }
      return r;
    };
    std::vector<Ring> holes;
    for (const auto& h : holes_) holes.push_back(shift(h));
    return make(shift(exterior_), std::move(holes));
  }

  friend bool operator==(const PolygonGeom& a, const PolygonGeom& b) {
    return a.exterior_ == b.exterior_ && a.holes_ == b.holes_;
  }

 private:
  PolygonGeom() = default;

  Ring exterior_;
  std::vector<Ring> holes_;
  BBox bbox_;
};

namespace detail {

inline double cross(GeoPoint o, GeoPoint a, GeoPoint b) {
  return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

inline int orientation(GeoPoint o, GeoPoint a, GeoPoint b) {
  const double c = cross(o, a, b);
  return (c > 0.0) - (c < 0.0);
}

inline bool within_segment_box(GeoPoint p, GeoPoint a, GeoPoint b) {
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

}  // namespace detail

inline bool on_segment(GeoPoint p, GeoPoint a, GeoPoint b) {
  return detail::within_segment_box(p, a, b) && detail::cross(a, b, p) == 0.0;
}

/// Closed segments [a,b] and [c,d] share at least one point (collinear overlap included).
inline bool segments_intersect(GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d) {
  using detail::orientation;
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && detail::within_segment_box(c, a, b)) return true;
  if (o2 == 0 && detail::within_segment_box(d, a, b)) return true;
  if (o3 == 0 && detail::within_segment_box(a, c, d)) return true;
  if (o4 == 0 && detail::within_segment_box(b, c, d)) return true;
  return false;
}

enum class RingSide { Outside, Boundary, Inside };

/// Crossing-number test against one closed ring with an explicit boundary check.
inline RingSide locate_in_ring(GeoPoint p, std::span<const GeoPoint> ring) {
  bool inside = false;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const GeoPoint a = ring[i];
    const GeoPoint b = ring[i + 1];
    if (on_segment(p, a, b)) return RingSide::Boundary;
    if ((a.lat > p.lat) != (b.lat > p.lat)) {
      const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

/// Inside the exterior ring and not strictly inside any hole. Boundary points
/// (exterior or hole edges) count as inside.
inline bool point_in_polygon(GeoPoint p, const PolygonGeom& g) {
  if (!g.bbox().contains(p)) return false;
  if (locate_in_ring(p, g.exterior()) == RingSide::Outside) return false;
  for (const auto& h : g.holes())
    if (locate_in_ring(p, h) == RingSide::Inside) return false;
  return true;
}

inline bool point_in_any(GeoPoint p, std::span<const PolygonGeom> parts) {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const PolygonGeom& g) { return point_in_polygon(p, g); });
}

/// Bbox prefilter, then vertex containment in either direction, then an
/// all-pairs edge crossing test. Exact for simple polygons; polygons that only
/// touch along a boundary are reported as intersecting.
inline bool polygons_intersect(const PolygonGeom& a, const PolygonGeom& b) {
  if (!a.bbox().intersects(b.bbox())) return false;

  bool hit = false;
  a.for_each_ring([&](const Ring& r) {
    if (!hit) hit = std::any_of(r.begin(), r.end(), [&](GeoPoint p) { return point_in_polygon(p, b); });
  });
  if (hit) return true;
  b.for_each_ring([&](const Ring& r) {
    if (!hit) hit = std::any_of(r.begin(), r.end(), [&](GeoPoint p) { return point_in_polygon(p, a); });
  });
  if (hit) return true;

  a.for_each_ring([&](const Ring& ra) {
    b.for_each_ring([&](const Ring& rb) {
      for (std::size_t i = 0; !hit && i + 1 < ra.size(); ++i) {
        for (std::size_t j = 0; j + 1 < rb.size(); ++j) {
          if (segments_intersect(ra[i], ra[i + 1], rb[j], rb[j + 1])) {
            hit = true;
            break;
          }
        }
      }
    });
  });
  return hit;
}

}  // namespace floodmob::geo
