#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "earscan/mesh_bvh.hpp"
#include "earscan/types.hpp"

namespace earscan {

enum class HemisphereSampling {
    /// Rank-1 lattice with a per-vertex random shift (low discrepancy).
    Stratified,
    /// Independent uniform directions.
    Random,
};

const char* to_string(HemisphereSampling s);
HemisphereSampling parse_hemisphere_sampling(const std::string& name);

struct AoConfig {
    int ray_count = 256;
    std::uint64_t seed = 0;
    // Directions are uniform over solid angle for both schemes.
    HemisphereSampling hemisphere = HemisphereSampling::Stratified;
    /// Sample directions are generated around frame^T n and rotated by frame.
    /// Passing the rotation applied to a mesh reproduces its unrotated rays.
    Mat3 frame = Mat3::Identity();
};

void validate(const AoConfig& cfg);

/// Fraction of unoccluded hemisphere directions around each (point, normal).
/// `keys` seed the per-point sample sequences (defaults to the point index).
std::vector<double> compute_ao_at(const MeshBVH& bvh, std::span<const Vec3> points,
                                  std::span<const Vec3> normals, const AoConfig& cfg,
                                  std::span<const std::uint64_t> keys = {});

/// Per-vertex AO of a mesh with vertex normals.
std::vector<double> compute_ao(const TriangleMesh& mesh, const MeshBVH& bvh, const AoConfig& cfg);

/// Each point takes the AO of its nearest mesh vertex (lowest index on ties).
PointCloud transfer_ao(const PointCloud& cloud, const TriangleMesh& mesh);

/// (1 - ao)^n.
double occlusion_weight(double ao, int n);

/// (1 - ao_i)^n divided by its mean over the cloud.
std::vector<double> normalized_weights(const PointCloud& cloud, int n);

}  // namespace earscan
