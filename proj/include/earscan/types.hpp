#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace earscan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Points in millimetres with optional per-point normals and ambient occlusion.
struct PointCloud {
    std::vector<Vec3> positions;
    std::optional<std::vector<Vec3>> normals;
    std::optional<std::vector<double>> ao;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    bool has_normals() const { return normals.has_value(); }
    bool has_ao() const { return ao.has_value(); }

    /// Copies the points named by `indices` (in that order) with their attributes.
    PointCloud subset(const std::vector<std::size_t>& indices) const;
};

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::optional<std::vector<Vec3>> vertex_normals;
    std::optional<std::vector<double>> vertex_ao;

    bool empty() const { return faces.empty(); }

    /// Unnormalized face normal following the winding order.
    Vec3 face_normal(std::size_t face) const;

    /// Area-weighted vertex normals from face winding.
    std::vector<Vec3> compute_vertex_normals() const;

    /// The vertex set as a cloud, carrying normals and AO.
    PointCloud vertex_cloud() const;
};

/// Throws on attribute length mismatch, non-unit normals or AO outside [0,1].
void validate(const PointCloud& cloud);

/// Throws on dangling indices or degenerate faces.
void validate(const TriangleMesh& mesh);

/// Euclidean length of a cloud's axis-aligned bounding box diagonal.
double bounding_diagonal(const PointCloud& cloud);
double bounding_diagonal(const std::vector<Vec3>& points);

}  // namespace earscan
