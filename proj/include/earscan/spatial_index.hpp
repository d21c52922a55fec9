#pragma once

#include <cstddef>
#include <vector>

#include "earscan/types.hpp"

namespace earscan {

/// dx*dx + dy*dy + dz*dz, evaluated in that order everywhere a point distance is needed.
inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
    std::size_t id = 0;
    double distance = 0.0;
    double squared = 0.0;
};

/// Immutable k-d tree over a copy of the input positions. Queries are exact;
/// ties go to the lowest point index.
class SpatialIndex {
public:
    explicit SpatialIndex(std::vector<Vec3> points);
    explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.positions) {}

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    Neighbor nearest(const Vec3& q) const;

    /// Indices of all points with |p - q| <= radius, ascending.
    std::vector<std::size_t> within(const Vec3& q, double radius) const;

private:
    struct Node {
        // Leaf when left == 0; then [begin, end) indexes order_.
        std::uint32_t begin = 0, end = 0;
        std::uint32_t left = 0, right = 0;
        int axis = 0;
        double split = 0.0;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);
    void nearest_rec(std::uint32_t node, const Vec3& q, double& best_d2, std::size_t& best_id) const;
    void within_rec(std::uint32_t node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace earscan
