#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "earscan/types.hpp"

namespace earscan {

/// Synthetic photogrammetric error. Lengths (mu, sigma, max_med, sigma bounds)
/// are fractions of the cloud's bounding-box diagonal l.
struct NoiseParams {
    double nu = 1.95;
    double mu = 0.0002;
    double sigma = 0.002;
    double max_med = 0.0378;
    double sigma_min = 0.001;
    double sigma_max = 0.005;
    double cmp_max = 98.0;
    double cmp_min = 80.0;
    int ao_power = 3;
    std::uint64_t seed = 0;
};

void validate(const NoiseParams& params);

/// Location-scale Student t draws: mu + sigma * z / sqrt(chi2(nu) / nu).
std::vector<double> sample_student_t(double nu, double mu, double sigma, std::size_t count,
                                     std::uint64_t seed);

/// Samples with |t| > max_med are rescaled by max_med / max|t|; the rest are untouched.
std::vector<double> clamp_scale(std::span<const double> t, double max_med);

/// Completeness target in percent, linear in sigma between the schedule bounds.
double cmp_schedule(double sigma, const NoiseParams& params);

/// round(keep_fraction * N) points drawn without replacement with weight
/// 1 - (1 - ao)^ao_power; survivors keep their input order.
std::vector<std::size_t> occlusion_subsample_indices(const PointCloud& cloud, double keep_fraction,
                                                     int ao_power, std::uint64_t seed);
PointCloud occlusion_subsample(const PointCloud& cloud, double keep_fraction, int ao_power,
                               std::uint64_t seed);

/// Hands each point one value of t_hat, each value used once. Points are
/// visited from least to most occluded and draw from the remaining pool with
/// weight max|t_hat| - |t_hat_j|, uniform once the remaining weights are all zero.
std::vector<double> assign_errors(const PointCloud& cloud, std::span<const double> t_hat, int ao_power,
                                  std::uint64_t seed);

/// y_i = x_i + t_i * n_i.
PointCloud displace(const PointCloud& cloud, std::span<const double> offsets);

struct SynthesizedScan {
    PointCloud cloud;
    std::vector<std::size_t> kept;     // source indices of the retained points
    std::vector<double> displacement;  // signed offset along each retained normal, mm
    double diagonal = 0.0;             // l of the source cloud, mm
    double cmp_target = 0.0;           // percent
};

/// Full corruption: subsample by occlusion, draw and clamp t, assign by occlusion, displace.
SynthesizedScan synthesize_scan(const PointCloud& cloud, const NoiseParams& params);

}  // namespace earscan
