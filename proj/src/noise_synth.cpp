#include "earscan/noise_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "earscan/error.hpp"
#include "earscan/occlusion.hpp"
#include "earscan/random.hpp"

namespace earscan {
namespace {

enum Stream : std::uint64_t {
    kSubsample = 1,
    kStudentT = 2,
    kAssign = 3,
};

}  // namespace

void validate(const NoiseParams& p) {
    if (!(p.nu > 0.0)) throw Error(ErrorKind::Domain, "nu must be positive");
    if (!(p.max_med > 0.0)) throw Error(ErrorKind::Domain, "max_med must be positive");
    if (!(p.sigma_min < p.sigma_max) || !(p.sigma_min > 0.0))
        throw Error(ErrorKind::Domain, "sigma bounds must satisfy 0 < sigma_min < sigma_max");
    if (!(p.sigma >= p.sigma_min && p.sigma <= p.sigma_max))
        throw Error(ErrorKind::Domain, "sigma outside [sigma_min, sigma_max]");
    if (!(p.cmp_min < p.cmp_max)) throw Error(ErrorKind::Domain, "cmp_min must be below cmp_max");
    if (p.ao_power < 0) throw Error(ErrorKind::Domain, "ao_power must be non-negative");
}

std::vector<double> sample_student_t(double nu, double mu, double sigma, std::size_t count,
                                     std::uint64_t seed) {
    if (!(nu > 0.0)) throw Error(ErrorKind::Domain, "nu must be positive");
    if (!(sigma > 0.0)) throw Error(ErrorKind::Domain, "sigma must be positive");
    if (count < 1) throw Error(ErrorKind::Domain, "count must be at least 1");
    Rng rng(seed);
    std::vector<double> out(count);
    for (auto& v : out) {
        const double z = rng.normal();
        const double chi2 = rng.chi_squared(nu);
        v = mu + sigma * (z / std::sqrt(chi2 / nu));
    }
    return out;
}

std::vector<double> clamp_scale(std::span<const double> t, double max_med) {
    if (!(max_med > 0.0)) throw Error(ErrorKind::Domain, "max_med must be positive");
    double peak = 0.0;
    for (double v : t) peak = std::max(peak, std::abs(v));
    std::vector<double> out(t.begin(), t.end());
    if (peak <= max_med) return out;
    const double scale = max_med / peak;
    for (auto& v : out)
        if (std::abs(v) > max_med) v = std::copysign(std::min(std::abs(v) * scale, max_med), v);
    return out;
}

double cmp_schedule(double sigma, const NoiseParams& p) {
    if (!(sigma >= p.sigma_min && sigma <= p.sigma_max))
        throw Error(ErrorKind::Domain, "sigma outside [sigma_min, sigma_max]");
    const double eta = (sigma - p.sigma_min) / (p.sigma_max - p.sigma_min);
    return p.cmp_max * (1.0 - eta) + p.cmp_min * eta;
}

std::vector<std::size_t> occlusion_subsample_indices(const PointCloud& cloud, double keep_fraction,
                                                     int ao_power, std::uint64_t seed) {
    if (!cloud.ao) throw Error(ErrorKind::MissingAttribute, "subsampling needs per-point AO");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw Error(ErrorKind::Domain, "keep_fraction must lie in (0,1]");
    const auto n = cloud.size();
    std::vector<double> w(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 1.0 - occlusion_weight((*cloud.ao)[i], ao_power);
        any = any || w[i] > 0.0;
    }
    if (!any) throw Error(ErrorKind::DegenerateWeights, "every subsampling weight is zero");
    const auto keep = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx;
    if (keep == n) {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    Rng rng(seed);
    const auto order = weighted_order(w, rng);
    idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(idx.begin(), idx.end());
    return idx;
}

PointCloud occlusion_subsample(const PointCloud& cloud, double keep_fraction, int ao_power,
                               std::uint64_t seed) {
    return cloud.subset(occlusion_subsample_indices(cloud, keep_fraction, ao_power, seed));
}

std::vector<double> assign_errors(const PointCloud& cloud, std::span<const double> t_hat, int ao_power,
                                  std::uint64_t seed) {
    if (!cloud.ao) throw Error(ErrorKind::MissingAttribute, "error assignment needs per-point AO");
    const auto n = cloud.size();
    if (t_hat.size() != n) throw Error(ErrorKind::Shape, "t_hat length differs from cloud size");

    std::vector<double> occ(n);
    for (std::size_t i = 0; i < n; ++i) occ[i] = occlusion_weight((*cloud.ao)[i], ao_power);
    std::vector<std::size_t> visit(n);
    std::iota(visit.begin(), visit.end(), std::size_t{0});
    std::stable_sort(visit.begin(), visit.end(), [&](std::size_t a, std::size_t b) { return occ[a] < occ[b]; });

    double peak = 0.0;
    for (double v : t_hat) peak = std::max(peak, std::abs(v));
    std::vector<double> flipped(n);
    for (std::size_t j = 0; j < n; ++j) flipped[j] = peak - std::abs(t_hat[j]);

    Rng rng(seed);
    const auto draws = weighted_order(flipped, rng);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[visit[k]] = t_hat[draws[k]];
    return out;
}

PointCloud displace(const PointCloud& cloud, std::span<const double> offsets) {
    if (!cloud.normals) throw Error(ErrorKind::MissingAttribute, "displacement needs normals");
    if (offsets.size() != cloud.size()) throw Error(ErrorKind::Shape, "offset count differs from cloud size");
    PointCloud out = cloud;
    for (std::size_t i = 0; i < cloud.size(); ++i) out.positions[i] += offsets[i] * (*cloud.normals)[i];
    return out;
}

SynthesizedScan synthesize_scan(const PointCloud& cloud, const NoiseParams& params) {
    validate(params);
    if (!cloud.normals) throw Error(ErrorKind::MissingAttribute, "synthesis needs normals");
    if (!cloud.ao) throw Error(ErrorKind::MissingAttribute, "synthesis needs per-point AO");

    SynthesizedScan s;
    s.diagonal = bounding_diagonal(cloud);
    s.cmp_target = cmp_schedule(params.sigma, params);
    s.kept = occlusion_subsample_indices(cloud, s.cmp_target / 100.0, params.ao_power,
                                         derive_seed(params.seed, kSubsample));
    const PointCloud sub = cloud.subset(s.kept);
    const double l = s.diagonal;
    const auto t = sample_student_t(params.nu, params.mu * l, params.sigma * l, sub.size(),
                                    derive_seed(params.seed, kStudentT));
    const auto t_hat = clamp_scale(t, params.max_med * l);
    s.displacement = assign_errors(sub, t_hat, params.ao_power, derive_seed(params.seed, kAssign));
    s.cloud = displace(sub, s.displacement);
    return s;
}

}  // namespace earscan
