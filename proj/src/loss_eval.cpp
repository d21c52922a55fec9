#include "earscan/loss_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "earscan/error.hpp"
#include "earscan/occlusion.hpp"
#include "earscan/parallel.hpp"
#include "earscan/random.hpp"
#include "earscan/spatial_index.hpp"

namespace earscan {

void validate(const LossConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw Error(ErrorKind::Domain, "alpha must lie in [0,1]");
    if (!(cfg.patch_radius_fraction > 0.0)) throw Error(ErrorKind::Domain, "patch radius fraction must be positive");
    if (cfg.weight_power < 0) throw Error(ErrorKind::Domain, "weight power must be non-negative");
}

std::vector<std::size_t> local_patch_indices(const PointCloud& cloud, const Vec3& query, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorKind::Domain, "patch radius must be positive");
    const double r2 = radius * radius;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (squared_distance(cloud.positions[i], query) <= r2) idx.push_back(i);
    if (idx.empty()) throw Error(ErrorKind::EmptySelection, "local patch is empty");
    return idx;
}

PointCloud local_patch(const PointCloud& cloud, const Vec3& query, double radius) {
    return cloud.subset(local_patch_indices(cloud, query, radius));
}

std::vector<std::size_t> global_subsample_indices(const PointCloud& cloud, const Vec3& query,
                                                  std::size_t count, std::uint64_t seed) {
    if (count > cloud.size())
        throw Error(ErrorKind::Size, "global subsample of " + std::to_string(count) + " from " +
                                         std::to_string(cloud.size()) + " points");
    std::vector<double> w(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) w[i] = std::sqrt(squared_distance(cloud.positions[i], query));
    Rng rng(seed);
    const auto order = weighted_order(w, rng);
    std::vector<std::size_t> idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

PointCloud global_subsample(const PointCloud& cloud, const Vec3& query, std::size_t count, std::uint64_t seed) {
    return cloud.subset(global_subsample_indices(cloud, query, count, seed));
}

LossTerms loss_terms(const Vec3& denoised, const PointCloud& patch, double ao_weight) {
    if (patch.empty()) throw Error(ErrorKind::EmptySelection, "loss patch is empty");
    if (!(ao_weight >= 0.0)) throw Error(ErrorKind::Domain, "AO weight must be non-negative");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& p : patch.positions) {
        const double d2 = squared_distance(denoised, p);
        lo = std::min(lo, d2);
        hi = std::max(hi, d2);
    }
    return LossTerms{lo * ao_weight, hi};
}

double loss_total(double ls_hat, double lr, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Domain, "alpha must lie in [0,1]");
    return alpha * ls_hat + (1.0 - alpha) * lr;
}

LossBatch evaluate_loss(const PointCloud& noisy, const PointCloud& clean,
                        const std::optional<PointCloud>& denoised, const LossConfig& cfg,
                        const std::vector<std::size_t>& queries) {
    validate(cfg);
    if (noisy.empty() || clean.empty()) throw Error(ErrorKind::EmptyInput, "loss evaluation needs non-empty clouds");
    if (denoised && denoised->size() != noisy.size())
        throw Error(ErrorKind::Shape, "denoised cloud must match the noisy cloud point for point");
    if (cfg.global_count > noisy.size())
        throw Error(ErrorKind::Size, "global subsample larger than the noisy cloud");

    // The AO complement is normalized over the noisy cloud, where the AO is attached.
    const auto weights = normalized_weights(noisy, cfg.weight_power);
    LossBatch batch;
    batch.patch_radius = cfg.patch_radius_fraction * bounding_diagonal(noisy);
    const SpatialIndex clean_index(clean), noisy_index(noisy);
    batch.records.resize(queries.size());

    parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const auto qi = queries[k];
            if (qi >= noisy.size()) throw Error(ErrorKind::Index, "query index out of range");
            LossRecord& r = batch.records[k];
            r.index = qi;
            r.query = noisy.positions[qi];
            r.denoised = denoised ? denoised->positions[qi] : r.query;
            r.ao_weight = weights[qi];
            r.clean_patch = clean_index.within(r.query, batch.patch_radius);
            if (r.clean_patch.empty())
                throw Error(ErrorKind::EmptySelection, "empty clean patch at query " + std::to_string(qi));
            r.input_patch = noisy_index.within(r.query, batch.patch_radius);
            if (cfg.global_count > 0)
                r.global = global_subsample_indices(noisy, r.query, cfg.global_count, derive_seed(cfg.seed, 0x61, qi));
            r.terms = loss_terms(r.denoised, clean.subset(r.clean_patch), r.ao_weight);
            r.loss = loss_total(r.terms.ls_hat, r.terms.lr, cfg.alpha);
        }
    });
    double sum = 0.0;
    for (const auto& r : batch.records) sum += r.loss;
    batch.mean_loss = batch.records.empty() ? 0.0 : sum / static_cast<double>(batch.records.size());
    return batch;
}

}  // namespace earscan
