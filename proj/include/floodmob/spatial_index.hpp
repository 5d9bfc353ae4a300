#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "floodmob/geo.hpp"

namespace floodmob::geo {

/// Read-only rectangle tree packed with sort-tile-recursive (STR) bulk loading.
///
/// Ids are positions in the box span given to the constructor. Queries use
/// closed-box intersection, so every id whose box touches the window is
/// reported. Nodes of one level are contiguous in `nodes_`; the root is last.
class SpatialIndex {
 public:
  static constexpr std::size_t kDefaultLeafCapacity = 16;

  SpatialIndex() = default;

  explicit SpatialIndex(std::span<const BBox> boxes, std::size_t leaf_capacity = kDefaultLeafCapacity)
      : capacity_(std::max<std::size_t>(leaf_capacity, 2)), size_(boxes.size()) {
    if (boxes.empty()) return;

    std::vector<std::uint32_t> order(boxes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    str_sort(order, [&](std::uint32_t i) -> const BBox& { return boxes[i]; });

    entries_.reserve(order.size());
    for (auto i : order) entries_.push_back({boxes[i], i});

    // Leaf level: consecutive runs of `capacity_` entries.
    std::vector<Node> level;
    for (std::size_t first = 0; first < entries_.size(); first += capacity_) {
      Node n;
      n.first = static_cast<std::uint32_t>(first);
      n.count = static_cast<std::uint32_t>(std::min(capacity_, entries_.size() - first));
      n.leaf = true;
      for (std::uint32_t k = 0; k < n.count; ++k) n.box.expand(entries_[first + k].box);
      level.push_back(n);
    }

    while (level.size() > 1) {
      std::vector<std::uint32_t> idx(level.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
      str_sort(idx, [&](std::uint32_t i) -> const BBox& { return level[i].box; });

      const auto base = static_cast<std::uint32_t>(nodes_.size());
      for (auto i : idx) nodes_.push_back(level[i]);

      std::vector<Node> parents;
      for (std::size_t first = 0; first < idx.size(); first += capacity_) {
        Node p;
        p.first = base + static_cast<std::uint32_t>(first);
        p.count = static_cast<std::uint32_t>(std::min(capacity_, idx.size() - first));
        p.leaf = false;
        for (std::uint32_t k = 0; k < p.count; ++k) p.box.expand(nodes_[p.first + k].box);
        parents.push_back(p);
      }
      level = std::move(parents);
    }
    nodes_.push_back(level.front());
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t leaf_capacity() const { return capacity_; }

  /// Box covering every indexed rectangle; empty box for an empty index.
  BBox bounds() const { return nodes_.empty() ? BBox{} : nodes_.back().box; }

  std::size_t height() const {
    if (nodes_.empty()) return 0;
    std::size_t h = 1;
    for (const Node* n = &nodes_.back(); !n->leaf; n = &nodes_[n->first]) ++h;
    return h;
  }

  /// Calls fn(id) for every entry whose box intersects `window`. If fn returns
  /// bool, returning false stops the traversal.
  template <class Fn>
  void visit(const BBox& window, Fn&& fn) const {
    if (nodes_.empty() || !nodes_.back().box.intersects(window)) return;
    std::vector<std::uint32_t> stack;
    stack.reserve(64);
    stack.push_back(static_cast<std::uint32_t>(nodes_.size() - 1));
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (n.leaf) {
        for (std::uint32_t k = 0; k < n.count; ++k) {
          const Entry& e = entries_[n.first + k];
          if (!e.box.intersects(window)) continue;
          if constexpr (std::is_same_v<std::invoke_result_t<Fn&, std::size_t>, bool>) {
            if (!fn(static_cast<std::size_t>(e.id))) return;
          } else {
            fn(static_cast<std::size_t>(e.id));
          }
        }
      } else {
        for (std::uint32_t k = n.count; k-- > 0;) {
          if (nodes_[n.first + k].box.intersects(window)) stack.push_back(n.first + k);
        }
      }
    }
  }

  template <class Fn>
  void visit(GeoPoint p, Fn&& fn) const {
    visit(BBox::of_point(p), std::forward<Fn>(fn));
  }

  /// Candidate ids in ascending order.
  std::vector<std::size_t> query(const BBox& window) const {
    std::vector<std::size_t> out;
    visit(window, [&](std::size_t id) { out.push_back(id); });
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Entry {
    BBox box;
    std::uint32_t id = 0;
  };

  struct Node {
    BBox box;
    std::uint32_t first = 0;
    std::uint32_t count = 0;
    bool leaf = false;
  };

  // Sort by center lon, cut into ceil(sqrt(P)) vertical slices, sort each slice
  // by center lat. Ties break on index so the packing is deterministic.
  template <class BoxOf>
  void str_sort(std::vector<std::uint32_t>& items, BoxOf box_of) const {
    const std::size_t n = items.size();
    const std::size_t pages = (n + capacity_ - 1) / capacity_;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pages))));
    const std::size_t slice_len = slices * capacity_;

    std::sort(items.begin(), items.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double ca = box_of(a).center_lon(), cb = box_of(b).center_lon();
      return ca < cb || (ca == cb && a < b);
    });
    for (std::size_t first = 0; first < n; first += slice_len) {
      auto begin = items.begin() + static_cast<std::ptrdiff_t>(first);
      auto end = items.begin() + static_cast<std::ptrdiff_t>(std::min(n, first + slice_len));
      std::sort(begin, end, [&](std::uint32_t a, std::uint32_t b) {
        const double ca = box_of(a).center_lat(), cb = box_of(b).center_lat();
        return ca < cb || (ca == cb && a < b);
      });
    }
  }

  std::size_t capacity_ = kDefaultLeafCapacity;
  std::size_t size_ = 0;
  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
};

}  // namespace floodmob::geo
