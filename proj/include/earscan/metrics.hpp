#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "earscan/mesh_bvh.hpp"
#include "earscan/spatial_index.hpp"
#include "earscan/types.hpp"

namespace earscan {

/// Scan-vs-reference metrics. Distances in mm, CD and MD in mm^2, Cmp in percent.
struct MetricReport {
    double acc = 0.0;
    double cmp = 0.0;
    double avg = 0.0;
    double max = 0.0;
    double cd = 0.0;
    double hd = 0.0;
    double md = 0.0;
    int n_power = 0;
    /// Scan-to-reference nearest distances, unweighted.
    std::optional<std::vector<double>> per_point_d;
    /// Same distances after occlusion weighting (equal to per_point_d when n_power == 0).
    std::optional<std::vector<double>> per_point_weighted_d;
};

struct MetricOptions {
    double cmp_threshold = 1.0;
    bool keep_per_point = false;
};

inline constexpr const char* kPercentileMethod = "linear";
inline constexpr const char* kStatsReference = "reference_cloud";

struct ScanStats {
    double avg = 0.0;
    double max = 0.0;
    double acc = 0.0;
};

/// Nearest-neighbour distance from every point of `from` to `to`.
std::vector<Neighbor> nearest_all(const PointCloud& from, const SpatialIndex& to);

/// Percentile p in [0,100] with linear interpolation between order statistics.
double percentile(std::span<const double> values, double p);

/// Closest-face distance signed by the face orientation at the closest point.
std::vector<double> signed_distance(const PointCloud& cloud, const MeshBVH& bvh);

double chamfer(const PointCloud& x, const PointCloud& y);
double hausdorff(const PointCloud& x, const PointCloud& y);
double mesh_distance(const PointCloud& y, const MeshBVH& bvh);

/// Percentage of reference points strictly closer than `threshold` to the scan.
double completeness(const PointCloud& reference, const PointCloud& scan, double threshold = 1.0);

ScanStats scan_stats(const PointCloud& scan, const PointCloud& reference);

std::vector<double> weighted_distances(std::span<const double> d, std::span<const double> weights);

/// 100 * (before - after) / before.
double noise_reduction(double before, double after);

double pearson(std::span<const double> a, std::span<const double> b);

/// All metrics of `scan` against a reference cloud and mesh. For n > 0 the
/// scan-side distances are multiplied by normalized_weights(scan, n); the
/// reference-side distances take the weight of their nearest scan point.
MetricReport metric_report(const PointCloud& scan, const PointCloud& reference, const MeshBVH& bvh,
                           int n, const MetricOptions& options = {});

}  // namespace earscan
