#pragma once

#include "rglr/core.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace rglr {

/// Static 3-d kd-tree over a point set, used for k-NN graph construction,
/// nearest-neighbor metrics, and window queries in mean shift. Ties on
/// distance are broken by point index so queries are fully deterministic.
class KdTree3 {
 public:
  struct Hit {
    double d2;
    int index;
    bool operator<(const Hit& o) const {
      return d2 != o.d2 ? d2 < o.d2 : index < o.index;
    }
  };

  KdTree3() = default;

  explicit KdTree3(std::vector<Vec3> pts) : pts_(std::move(pts)) {
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(pts_.size() / kLeafSize * 2 + 2);
    if (!pts_.empty()) root_ = build(0, static_cast<int>(pts_.size()));
  }

  std::size_t size() const { return pts_.size(); }
  const std::vector<Vec3>& points() const { return pts_; }

  /// k nearest neighbors of q, excluding the point with index `exclude`
  /// (pass -1 to keep all). Sorted by (distance, index).
  std::vector<Hit> knn(const Vec3& q, int k, int exclude = -1) const {
    std::vector<Hit> heap;  // max-heap on (d2, index)
    heap.reserve(k + 1);
    knn_rec(root_, q, k, exclude, heap);
    std::sort_heap(heap.begin(), heap.end());
    return heap;
  }

  /// All points within radius r of q (squared distance <= r^2), unsorted.
  void radius(const Vec3& q, double r, std::vector<int>& out) const {
    out.clear();
    radius_rec(root_, q, r * r, out);
  }

  /// Index of the nearest neighbor (excluding `exclude`), -1 if empty.
  int nearest(const Vec3& q, int exclude = -1) const {
    auto hits = knn(q, 1, exclude);
    return hits.empty() ? -1 : hits[0].index;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (int i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_[order_[i]]);
      hi = hi.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       const double va = pts_[a][axis], vb = pts_[b][axis];
                       return va != vb ? va < vb : a < b;
                     });
    node.axis = axis;
    node.split = pts_[order_[mid]][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void knn_rec(int ni, const Vec3& q, int k, int exclude, std::vector<Hit>& heap) const {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        if (idx == exclude) continue;
        Hit h{(pts_[idx] - q).squaredNorm(), idx};
        if (static_cast<int>(heap.size()) < k) {
          heap.push_back(h);
          std::push_heap(heap.begin(), heap.end());
        } else if (h < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = h;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta <= 0.0 ? node.left : node.right;
    const int far = delta <= 0.0 ? node.right : node.left;
    knn_rec(near, q, k, exclude, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().d2)
      knn_rec(far, q, k, exclude, heap);
  }

  void radius_rec(int ni, const Vec3& q, double r2, std::vector<int>& out) const {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta <= 0.0 ? node.left : node.right;
    const int far = delta <= 0.0 ? node.right : node.left;
    radius_rec(near, q, r2, out);
    if (delta * delta <= r2) radius_rec(far, q, r2, out);
  }

  std::vector<Vec3> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace rglr
