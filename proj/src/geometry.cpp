#include "earscan/geometry.hpp"

#include <string>

#include "earscan/error.hpp"

namespace earscan {

PointCloud mirror_cloud(const PointCloud& cloud) {
    PointCloud out = cloud;
    for (auto& p : out.positions) p.y() = -p.y();
    if (out.normals)
        for (auto& n : *out.normals) n.y() = -n.y();
    return out;
}

PointCloud extract_ear_disc(const TriangleMesh& mesh, const Vec3& center, double radius) {
    if (!mesh.vertex_normals)
        throw Error(ErrorKind::MissingAttribute, "ear disc extraction needs vertex normals");
    if (!(radius > 0.0)) throw Error(ErrorKind::Domain, "disc radius must be positive");
    const double r2 = radius * radius;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const double dx = mesh.vertices[i].x() - center.x();
        const double dz = mesh.vertices[i].z() - center.z();
        if (dx * dx + dz * dz <= r2) keep.push_back(i);
    }
    if (keep.empty())
        throw Error(ErrorKind::EmptySelection,
                    "no vertices within " + std::to_string(radius) + " mm of the disc centre");
    return mesh.vertex_cloud().subset(keep);
}

PointCloud select_near_mesh(const PointCloud& cloud, const MeshBVH& bvh, double threshold) {
    if (!(threshold > 0.0)) throw Error(ErrorKind::Domain, "selection threshold must be positive");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (bvh.closest_point(cloud.positions[i]).distance <= threshold) keep.push_back(i);
    return cloud.subset(keep);
}

PointCloud transform_cloud(const PointCloud& cloud, const Mat3& rotation, const Vec3& translation) {
    PointCloud out = cloud;
    for (auto& p : out.positions) p = rotation * p + translation;
    if (out.normals)
        for (auto& n : *out.normals) n = rotation * n;
    return out;
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation) {
    TriangleMesh out = mesh;
    for (auto& p : out.vertices) p = rotation * p + translation;
    if (out.vertex_normals)
        for (auto& n : *out.vertex_normals) n = rotation * n;
    return out;
}

}  // namespace earscan
