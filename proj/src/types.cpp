#include "earscan/types.hpp"

#include <cmath>
#include <string>

#include "earscan/error.hpp"

namespace earscan {

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const {
    PointCloud out;
    out.positions.reserve(indices.size());
    for (auto i : indices) out.positions.push_back(positions[i]);
    if (normals) {
        out.normals.emplace();
        out.normals->reserve(indices.size());
        for (auto i : indices) out.normals->push_back((*normals)[i]);
    }
    if (ao) {
        out.ao.emplace();
        out.ao->reserve(indices.size());
        for (auto i : indices) out.ao->push_back((*ao)[i]);
    }
    return out;
}

Vec3 TriangleMesh::face_normal(std::size_t face) const {
    const auto& f = faces[face];
    const Vec3& a = vertices[f[0]];
    return (vertices[f[1]] - a).cross(vertices[f[2]] - a);
}

std::vector<Vec3> TriangleMesh::compute_vertex_normals() const {
    std::vector<Vec3> acc(vertices.size(), Vec3::Zero());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const Vec3 n = face_normal(i);
        for (auto v : faces[i]) acc[v] += n;
    }
    for (auto& n : acc) {
        const double len = n.norm();
        n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }
    return acc;
}

PointCloud TriangleMesh::vertex_cloud() const {
    PointCloud cloud;
    cloud.positions = vertices;
    cloud.normals = vertex_normals;
    cloud.ao = vertex_ao;
    return cloud;
}

void validate(const PointCloud& cloud) {
    const auto n = cloud.positions.size();
    if (cloud.normals) {
        if (cloud.normals->size() != n)
            throw Error(ErrorKind::Shape, "normals length differs from positions");
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs((*cloud.normals)[i].norm() - 1.0) > 1e-6)
                throw Error(ErrorKind::Domain,
                            "normal " + std::to_string(i) + " is not unit length");
        }
    }
    if (cloud.ao) {
        if (cloud.ao->size() != n)
            throw Error(ErrorKind::Shape, "ao length differs from positions");
        for (std::size_t i = 0; i < n; ++i) {
            const double a = (*cloud.ao)[i];
            if (!(a >= 0.0 && a <= 1.0))
                throw Error(ErrorKind::Domain,
                            "ao value " + std::to_string(i) + " outside [0,1]");
        }
    }
}

void validate(const TriangleMesh& mesh) {
    const auto nv = mesh.vertices.size();
    for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        for (auto v : f) {
            if (v >= nv)
                throw Error(ErrorKind::Index, "face " + std::to_string(i) +
                                                  " references vertex " + std::to_string(v));
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2] || mesh.face_normal(i).norm() == 0.0)
            throw Error(ErrorKind::DegenerateFace, "face " + std::to_string(i) + " is degenerate");
    }
    if (mesh.vertex_normals && mesh.vertex_normals->size() != nv)
        throw Error(ErrorKind::Shape, "vertex normals length differs from vertices");
    if (mesh.vertex_ao && mesh.vertex_ao->size() != nv)
        throw Error(ErrorKind::Shape, "vertex ao length differs from vertices");
}

double bounding_diagonal(const std::vector<Vec3>& points) {
    if (points.empty()) throw Error(ErrorKind::EmptyInput, "bounding diagonal of empty cloud");
    Vec3 lo = points.front();
    Vec3 hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

double bounding_diagonal(const PointCloud& cloud) { return bounding_diagonal(cloud.positions); }

}  // namespace earscan
