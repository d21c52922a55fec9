#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "earscan/types.hpp"

namespace earscan {

struct LossConfig {
    double alpha = 0.99;
    /// Local patch radius as a fraction of the noisy cloud's l.
    double patch_radius_fraction = 0.05;
    /// Points in the distance-weighted global subsample; 0 disables it.
    std::size_t global_count = 0;
    /// Power applied to the AO complement before normalization.
    int weight_power = 1;
    std::uint64_t seed = 0;
};

void validate(const LossConfig& cfg);

/// Indices of points within the closed ball, ascending.
std::vector<std::size_t> local_patch_indices(const PointCloud& cloud, const Vec3& query, double radius);
PointCloud local_patch(const PointCloud& cloud, const Vec3& query, double radius);

/// `count` points drawn without replacement with weight |p - query|; output in input order.
std::vector<std::size_t> global_subsample_indices(const PointCloud& cloud, const Vec3& query,
                                                  std::size_t count, std::uint64_t seed);
PointCloud global_subsample(const PointCloud& cloud, const Vec3& query, std::size_t count,
                            std::uint64_t seed);

struct LossTerms {
    double ls_hat = 0.0;  // min squared distance to the patch, times the AO weight
    double lr = 0.0;      // max squared distance to the patch
};

LossTerms loss_terms(const Vec3& denoised, const PointCloud& patch, double ao_weight);

double loss_total(double ls_hat, double lr, double alpha);

struct LossRecord {
    std::size_t index = 0;
    Vec3 query = Vec3::Zero();
    Vec3 denoised = Vec3::Zero();
    double ao_weight = 1.0;
    std::vector<std::size_t> clean_patch;   // indices into the clean cloud
    std::vector<std::size_t> input_patch;   // indices into the noisy cloud
    std::vector<std::size_t> global;        // indices into the noisy cloud
    LossTerms terms;
    double loss = 0.0;
};

struct LossBatch {
    double patch_radius = 0.0;  // mm
    double mean_loss = 0.0;
    std::vector<LossRecord> records;
};

/// Evaluates the training loss for each query index. `denoised` defaults to
/// the noisy positions; the noisy cloud must carry AO.
LossBatch evaluate_loss(const PointCloud& noisy, const PointCloud& clean,
                        const std::optional<PointCloud>& denoised, const LossConfig& cfg,
                        const std::vector<std::size_t>& queries);

}  // namespace earscan
