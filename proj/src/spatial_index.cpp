#include "earscan/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "earscan/error.hpp"

namespace earscan {
namespace {
constexpr std::uint32_t kLeafSize = 12;
}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end, 0, 0, 0, 0.0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]];
    Vec3 hi = lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points coincide

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    return id;
}

void SpatialIndex::nearest_rec(std::uint32_t node, const Vec3& q, double& best_d2,
                               std::size_t& best_id) const {
    const Node& n = nodes_[node];
    if (n.left == 0) {
        for (auto i = n.begin; i < n.end; ++i) {
            const auto idx = order_[i];
            const double d2 = squared_distance(points_[idx], q);
            if (d2 < best_d2 || (d2 == best_d2 && idx < best_id)) {
                best_d2 = d2;
                best_id = idx;
            }
        }
        return;
    }
    // Left subtree holds coordinates <= split, right holds >= split.
    const double diff = q[n.axis] - n.split;
    const auto near = diff <= 0.0 ? n.left : n.right;
    const auto far = diff <= 0.0 ? n.right : n.left;
    nearest_rec(near, q, best_d2, best_id);
    if (diff * diff <= best_d2) nearest_rec(far, q, best_d2, best_id);
}

Neighbor SpatialIndex::nearest(const Vec3& q) const {
    if (points_.empty()) throw Error(ErrorKind::EmptyInput, "nearest query on empty index");
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_id = std::numeric_limits<std::size_t>::max();
    nearest_rec(0, q, best_d2, best_id);
    return Neighbor{best_id, std::sqrt(best_d2), best_d2};
}

void SpatialIndex::within_rec(std::uint32_t node, const Vec3& q, double r2,
                              std::vector<std::size_t>& out) const {
    const Node& n = nodes_[node];
    if (n.left == 0) {
        for (auto i = n.begin; i < n.end; ++i) {
            const auto idx = order_[i];
            if (squared_distance(points_[idx], q) <= r2) out.push_back(idx);
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    const auto near = diff <= 0.0 ? n.left : n.right;
    const auto far = diff <= 0.0 ? n.right : n.left;
    within_rec(near, q, r2, out);
    if (diff * diff <= r2) within_rec(far, q, r2, out);
}

std::vector<std::size_t> SpatialIndex::within(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (points_.empty()) return out;
    within_rec(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace earscan
