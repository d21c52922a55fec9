#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "earscan/types.hpp"

namespace earscan {

struct ClosestPoint {
    double distance = 0.0;
    double squared = 0.0;
    std::size_t face = 0;
    Vec3 point = Vec3::Zero();
};

struct RayHit {
    double t = 0.0;
    std::size_t face = 0;
};

/// Closest point on triangle (a, b, c) to q, by Voronoi-region classification.
Vec3 closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c);

/// Moller-Trumbore; returns the ray parameter or nothing. Edges are inclusive
/// with a 1e-10 barycentric tolerance so rays through shared edges cannot slip
/// between neighbouring faces.
std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c);

/// Immutable SAH bounding-volume hierarchy over a mesh's faces.
class MeshBVH {
public:
    explicit MeshBVH(const TriangleMesh& mesh);

    std::size_t face_count() const { return faces_.size(); }
    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }

    /// Unit outward normal following the face winding.
    const Vec3& face_normal(std::size_t face) const { return face_normals_[face]; }

    /// Self-intersection offset: 1e-4 of the mesh bounding-box diagonal.
    double epsilon() const { return epsilon_; }

    /// Minimal over all faces; ties go to the lowest face index.
    ClosestPoint closest_point(const Vec3& q) const;

    /// Smallest t >= epsilon() with origin + t*dir on a face; ties go to the lowest face.
    std::optional<RayHit> first_hit(const Vec3& origin, const Vec3& dir) const;

    /// True if any face is hit at t >= epsilon().
    bool occluded(const Vec3& origin, const Vec3& dir) const;

private:
    struct Node {
        Vec3 lo, hi;
        std::uint32_t first = 0;  // first child index, or first face slot for leaves
        std::uint32_t count = 0;  // faces in leaf; 0 for interior nodes
    };

    struct Box {
        Vec3 lo, hi;
    };

    void build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
               const std::vector<Vec3>& centroids, const std::vector<Box>& boxes, int depth);
    void check_direction(const Vec3& dir) const;

    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Vec3> face_normals_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    double epsilon_ = 0.0;
};

}  // namespace earscan
