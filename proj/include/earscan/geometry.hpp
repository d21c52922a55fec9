#pragma once

#include "earscan/mesh_bvh.hpp"
#include "earscan/types.hpp"

namespace earscan {

/// Reflects across the xz-plane (y -> -y); used to map right ears onto left ears.
PointCloud mirror_cloud(const PointCloud& cloud);

/// Mesh vertices whose distance from `center`, measured in the plane
/// perpendicular to the y-axis, is <= radius. Depth along y is not limited.
PointCloud extract_ear_disc(const TriangleMesh& mesh, const Vec3& center, double radius);

/// Points within `threshold` (inclusive) of the mesh surface, in input order.
PointCloud select_near_mesh(const PointCloud& cloud, const MeshBVH& bvh, double threshold);

/// Applies x -> R x + t to positions and R to normals.
PointCloud transform_cloud(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation);
TriangleMesh transform_mesh(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation);

}  // namespace earscan
