#include "earscan/occlusion.hpp"

#include <cmath>
#include <numbers>

#include "earscan/error.hpp"
#include "earscan/parallel.hpp"
#include "earscan/random.hpp"
#include "earscan/spatial_index.hpp"

namespace earscan {
namespace {

constexpr std::uint64_t kAoStream = 0xa0a0a0a0ULL;

// Duff et al. branchless orthonormal basis.
void tangent_basis(const Vec3& n, Vec3& t, Vec3& b) {
    const double sign = std::copysign(1.0, n.z());
    const double a = -1.0 / (sign + n.z());
    const double bb = n.x() * n.y() * a;
    t = Vec3(1.0 + sign * n.x() * n.x() * a, sign * bb, -sign * n.x());
    b = Vec3(bb, sign + n.y() * n.y() * a, -n.y());
}

double frac(double x) { return x - std::floor(x); }

}  // namespace

const char* to_string(HemisphereSampling s) {
    return s == HemisphereSampling::Stratified ? "stratified" : "random";
}

HemisphereSampling parse_hemisphere_sampling(const std::string& name) {
    if (name == "stratified") return HemisphereSampling::Stratified;
    if (name == "random" || name == "uniform") return HemisphereSampling::Random;
    throw Error(ErrorKind::Domain, "unknown hemisphere sampling '" + name + "'");
}

void validate(const AoConfig& cfg) {
    if (cfg.ray_count < 16) throw Error(ErrorKind::Domain, "ray_count must be at least 16");
}

std::vector<double> compute_ao_at(const MeshBVH& bvh, std::span<const Vec3> points,
                                  std::span<const Vec3> normals, const AoConfig& cfg,
                                  std::span<const std::uint64_t> keys) {
    validate(cfg);
    if (normals.size() != points.size())
        throw Error(ErrorKind::Shape, "points and normals differ in length");
    if (!keys.empty() && keys.size() != points.size())
        throw Error(ErrorKind::Shape, "points and sample keys differ in length");

    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const int rays = cfg.ray_count;
    const Mat3 frame_t = cfg.frame.transpose();
    std::vector<double> ao(points.size());

    parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3 n_local = (frame_t * normals[i]).normalized();
            Vec3 t, b;
            tangent_basis(n_local, t, b);
            const Vec3 origin = points[i] + bvh.epsilon() * normals[i];
            Rng rng(derive_seed(cfg.seed, kAoStream, keys.empty() ? i : keys[i]));
            const double shift_z = rng.uniform();
            const double shift_phi = rng.uniform();
            int open = 0;
            for (int k = 0; k < rays; ++k) {
                double s1, s2;
                if (cfg.hemisphere == HemisphereSampling::Stratified) {
                    s1 = frac((k + 0.5) / rays + shift_z);
                    s2 = frac(k * golden + shift_phi);
                } else {
                    s1 = rng.uniform();
                    s2 = rng.uniform();
                }
                // cos(theta) uniform on [0,1] gives uniform solid angle on the hemisphere.
                const double z = s1;
                const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                const double phi = 2.0 * std::numbers::pi * s2;
                const Vec3 local = t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n_local * z;
                const Vec3 dir = (cfg.frame * local).normalized();
                if (!bvh.occluded(origin, dir)) ++open;
            }
            ao[i] = static_cast<double>(open) / rays;
        }
    });
    return ao;
}

std::vector<double> compute_ao(const TriangleMesh& mesh, const MeshBVH& bvh, const AoConfig& cfg) {
    if (!mesh.vertex_normals) throw Error(ErrorKind::MissingAttribute, "AO needs vertex normals");
    return compute_ao_at(bvh, mesh.vertices, *mesh.vertex_normals, cfg);
}

PointCloud transfer_ao(const PointCloud& cloud, const TriangleMesh& mesh) {
    if (!mesh.vertex_ao) throw Error(ErrorKind::MissingAttribute, "mesh has no vertex AO");
    if (mesh.vertices.empty()) throw Error(ErrorKind::EmptyInput, "mesh has no vertices");
    const SpatialIndex index(mesh.vertices);
    PointCloud out = cloud;
    out.ao.emplace(cloud.size());
    parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            (*out.ao)[i] = (*mesh.vertex_ao)[index.nearest(cloud.positions[i]).id];
    });
    return out;
}

double occlusion_weight(double ao, int n) {
    if (!(ao >= 0.0 && ao <= 1.0)) throw Error(ErrorKind::Domain, "ao must lie in [0,1]");
    if (n < 0) throw Error(ErrorKind::Domain, "occlusion power must be non-negative");
    const double c = 1.0 - ao;
    double w = 1.0;
    for (int k = 0; k < n; ++k) w *= c;
    return w;
}

std::vector<double> normalized_weights(const PointCloud& cloud, int n) {
    if (!cloud.ao) throw Error(ErrorKind::MissingAttribute, "cloud has no AO");
    if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cloud is empty");
    const auto& ao = *cloud.ao;
    std::vector<double> w(ao.size());
    bool uniform = true;
    for (std::size_t i = 0; i < ao.size(); ++i) {
        w[i] = occlusion_weight(ao[i], n);
        uniform = uniform && w[i] == w[0];
    }
    if (uniform) {
        if (w[0] == 0.0) throw Error(ErrorKind::ZeroMean, "occlusion weights average to zero");
        std::fill(w.begin(), w.end(), 1.0);
        return w;
    }
    // Neumaier summation keeps the mean accurate for large clouds.
    double sum = 0.0, comp = 0.0;
    for (double v : w) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    const double mean = (sum + comp) / static_cast<double>(w.size());
    if (!(mean > 0.0)) throw Error(ErrorKind::ZeroMean, "occlusion weights average to zero");
    for (auto& v : w) v /= mean;
    return w;
}

}  // namespace earscan
