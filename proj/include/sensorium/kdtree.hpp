#pragma once

// Small static 3-d tree over points added up front.  Build once, then run
// nearest / radius queries; used for model-point lookup and Chamfer sums.
// Median-split on the widest axis, leaves hold a handful of points.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sensorium {

class KdTree {
 public:
  struct Hit {
    std::size_t index = SIZE_MAX;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  void add(double x, double y, double z) {
    if (built_) throw std::logic_error("KdTree: add after build");
    pts_.push_back({x, y, z});
  }

  std::size_t size() const { return pts_.size(); }

  void build() {
    order_.resize(pts_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.clear();
    if (!pts_.empty()) {
      nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
      build_node(0, pts_.size());
    }
    built_ = true;
  }

  // Single nearest point; tree must be non-empty.
  Hit nearest(double x, double y, double z) const {
    if (!built_ || pts_.empty()) {
      throw std::logic_error("KdTree: nearest on empty/unbuilt tree");
    }
    Hit best;
    const double q[3] = {x, y, z};
    search(0, q, best);
    return best;
  }

  // Indices of all points with distance < radius (strict), unsorted.
  std::vector<std::size_t> radius(double x, double y, double z,
                                  double r) const {
    std::vector<std::size_t> out;
    if (!built_ || pts_.empty()) return out;
    const double q[3] = {x, y, z};
    collect(0, q, r * r, out);
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct P {
    double v[3];
  };
  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build_node(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    double lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::numeric_limits<double>::infinity();
      hi[a] = -lo[a];
    }
    for (std::size_t i = begin; i < end; ++i) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], pts_[order_[i]].v[a]);
        hi[a] = std::max(hi[a], pts_[order_[i]].v[a]);
      }
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
    }
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](std::size_t l, std::size_t r) {
                       return pts_[l].v[axis] < pts_[r].v[axis];
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = pts_[order_[mid]].v[axis];
    const std::size_t left = build_node(begin, mid);
    const std::size_t right = build_node(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static double dist2(const P& p, const double q[3]) {
    const double dx = p.v[0] - q[0];
    const double dy = p.v[1] - q[1];
    const double dz = p.v[2] - q[2];
    return dx * dx + dy * dy + dz * dz;
  }

  void search(std::size_t id, const double q[3], Hit& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d2 = dist2(pts_[order_[i]], q);
        if (d2 < best.dist2 ||
            (d2 == best.dist2 && order_[i] < best.index)) {
          best = {order_[i], d2};
        }
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::size_t near = delta < 0.0 ? n.left : n.right;
    const std::size_t far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta <= best.dist2) search(far, q, best);
  }

  void collect(std::size_t id, const double q[3], double r2,
               std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        if (dist2(pts_[order_[i]], q) < r2) out.push_back(order_[i]);
      }
      return;
    }
    const double delta = q[n.axis] - n.split;
    const std::size_t near = delta < 0.0 ? n.left : n.right;
    const std::size_t far = delta < 0.0 ? n.right : n.left;
    collect(near, q, r2, out);
    if (delta * delta < r2) collect(far, q, r2, out);
  }

  std::vector<P> pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  bool built_ = false;
};

}  // namespace sensorium
