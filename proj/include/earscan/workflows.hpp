#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "earscan/denoise_pol.hpp"
#include "earscan/metrics.hpp"
#include "earscan/noise_synth.hpp"
#include "earscan/occlusion.hpp"

namespace earscan {

/// Geometric metrics available to the correlation study, in report order.
const std::vector<std::string>& metric_names();
double metric_value(const MetricReport& report, const std::string& name);

struct CorrelationRow {
    std::string metric;
    int n = 0;
    std::vector<double> r;  // one per HRTF metric; NaN when undefined
    double r_median = 0.0;
};

/// reports[s][k] is scan s evaluated with weight power n_values[k];
/// hrtf[s][m] is HRTF metric m for scan s. Needs at least three scans.
std::vector<CorrelationRow> correlation_table(const std::vector<std::vector<MetricReport>>& reports,
                                              const std::vector<int>& n_values,
                                              const std::vector<std::string>& metrics,
                                              const std::vector<std::vector<double>>& hrtf);

/// Pairwise Pearson r between HRTF metric columns, upper triangle in column order.
std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> hrtf_intercorrelations(
    const std::vector<std::vector<double>>& hrtf);

/// Median that tolerates NaN entries by ignoring them; NaN if none remain.
double median_ignoring_nan(std::vector<double> values);

struct NrRow {
    int iteration = 0;
    double cd = 0.0, hd = 0.0, md = 0.0;
    std::optional<double> nr_cd, nr_hd, nr_md;  // absent when the initial distance is zero
};

/// POL applied repeatedly; row k holds metrics after k iterations and their
/// noise reduction relative to row 0.
std::vector<NrRow> nr_sweep(const PointCloud& scan, const PointCloud& reference, const MeshBVH& bvh,
                            const PolConfig& pol, int max_iterations);

struct PipelineConfig {
    std::filesystem::path mesh;
    std::filesystem::path out;
    Vec3 center = Vec3::Zero();
    double radius = 40.0;
    AoConfig ao;
    NoiseParams noise;  // sigma == 0 keeps the clean cloud
    PolConfig pol;
    int weight_n = 0;
};

/// mesh -> ear disc -> AO -> corruption -> POL -> metrics. Writes disc.ply,
/// noisy.ply, denoised.ply, flags.csv, report.json into `out`; nothing is
/// left behind on failure.
void run_pipeline(const PipelineConfig& cfg);

/// Flat key/value rendering of a pipeline configuration (also its config-file
/// format). The output directory is left out so artifacts do not depend on it.
std::string format_pipeline_config(const PipelineConfig& cfg);

}  // namespace earscan
