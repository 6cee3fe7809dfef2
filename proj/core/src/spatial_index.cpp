#include "attnorm/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace attnorm {
namespace {

constexpr std::uint32_t kLeafSize = 16;

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.sq_distance != b.sq_distance) return a.sq_distance < b.sq_distance;
  return a.index < b.index;
}

// Bounded max-heap on (distance, index); the worst candidate sits at front().
class KBest {
public:
  explicit KBest(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const { return heap_.size() == k_; }
  double worst() const {
    return full() ? heap_.front().sq_distance : std::numeric_limits<double>::infinity();
  }

  void offer(const Neighbor& n) {
    if (!full()) {
      heap_.push_back(n);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(n, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = n;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  std::vector<Neighbor> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw Error("empty point cloud");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) throw Error("point cloud too large");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()), 0);
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (auto i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as leaf

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];

  const auto left = build(begin, mid, depth + 1);
  const auto right = build(mid, end, depth + 1);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  k = std::min(k, points_.size());
  if (k == 0) return {};
  KBest best(k);

  // Explicit stack of (node, lower bound on squared distance to its region).
  struct Item {
    std::int32_t node;
    double bound;
  };
  std::vector<Item> stack;
  stack.reserve(64);
  stack.push_back({root_, 0.0});
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    // Equal bounds may still hide a lower-index tie, so only strictly farther regions are pruned.
    if (item.bound > best.worst()) continue;
    const Node& node = nodes_[item.node];
    if (node.axis < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const auto idx = order_[i];
        best.offer({idx, (points_[idx] - query).squaredNorm()});
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    stack.push_back({far, std::max(item.bound, diff * diff)});
    stack.push_back({near, item.bound});
  }
  return std::move(best).sorted();
}

Neighbor SpatialIndex::nearest(const Vec3& query) const { return knn(query, 1).front(); }

std::vector<Neighbor> brute_force_knn(const std::vector<Vec3>& points, const Vec3& query, std::size_t k) {
  std::vector<Neighbor> all(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) all[i] = {i, (points[i] - query).squaredNorm()};
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) { return a.sq_distance < b.sq_distance; });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace attnorm
