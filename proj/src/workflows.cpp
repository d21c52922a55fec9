#include "earscan/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "earscan/dataset.hpp"
#include "earscan/error.hpp"
#include "earscan/io.hpp"
#include "earscan/version.hpp"

namespace earscan {
namespace {

double round9(double v) { return std::stod(format_double(v)); }

nlohmann::ordered_json report_json(const MetricReport& r) {
    return {{"acc", round9(r.acc)}, {"cmp", round9(r.cmp)}, {"avg", round9(r.avg)}, {"max", round9(r.max)},
            {"cd", round9(r.cd)},   {"hd", round9(r.hd)},   {"md", round9(r.md)},   {"n_power", r.n_power}};
}

}  // namespace

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"acc", "cmp", "avg", "max", "cd", "hd", "md"};
    return names;
}

double metric_value(const MetricReport& r, const std::string& name) {
    if (name == "acc") return r.acc;
    if (name == "cmp") return r.cmp;
    if (name == "avg") return r.avg;
    if (name == "max") return r.max;
    if (name == "cd") return r.cd;
    if (name == "hd") return r.hd;
    if (name == "md") return r.md;
    throw Error(ErrorKind::Domain, "unknown metric '" + name + "'");
}

double median_ignoring_nan(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const auto m = values.size() / 2;
    return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

std::vector<CorrelationRow> correlation_table(const std::vector<std::vector<MetricReport>>& reports,
                                              const std::vector<int>& n_values,
                                              const std::vector<std::string>& metrics,
                                              const std::vector<std::vector<double>>& hrtf) {
    const auto scans = reports.size();
    if (scans < 3) throw Error(ErrorKind::InsufficientData, "correlation needs at least three scans");
    if (hrtf.size() != scans) throw Error(ErrorKind::Shape, "HRTF table and scan list differ in length");
    const auto columns = hrtf.front().size();
    for (std::size_t s = 0; s < scans; ++s) {
        if (reports[s].size() != n_values.size()) throw Error(ErrorKind::Shape, "missing reports for some weight powers");
        if (hrtf[s].size() != columns) throw Error(ErrorKind::Shape, "ragged HRTF table");
    }
    std::vector<CorrelationRow> rows;
    for (const auto& metric : metrics) {
        for (std::size_t k = 0; k < n_values.size(); ++k) {
            std::vector<double> geo(scans);
            for (std::size_t s = 0; s < scans; ++s) geo[s] = metric_value(reports[s][k], metric);
            CorrelationRow row;
            row.metric = metric;
            row.n = n_values[k];
            for (std::size_t m = 0; m < columns; ++m) {
                std::vector<double> col(scans);
                for (std::size_t s = 0; s < scans; ++s) col[s] = hrtf[s][m];
                double r = std::numeric_limits<double>::quiet_NaN();
                try {
                    r = pearson(geo, col);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
                }
                row.r.push_back(r);
            }
            row.r_median = median_ignoring_nan(row.r);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> hrtf_intercorrelations(
    const std::vector<std::vector<double>>& hrtf) {
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> out;
    if (hrtf.size() < 3) throw Error(ErrorKind::InsufficientData, "correlation needs at least three scans");
    const auto columns = hrtf.front().size();
    auto column = [&](std::size_t m) {
        std::vector<double> c;
        for (const auto& row : hrtf) c.push_back(row[m]);
        return c;
    };
    for (std::size_t a = 0; a < columns; ++a)
        for (std::size_t b = a + 1; b < columns; ++b) {
            double r = std::numeric_limits<double>::quiet_NaN();
            try {
                r = pearson(column(a), column(b));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::UndefinedCorrelation) throw;
            }
            out.push_back({{a, b}, r});
        }
    return out;
}

std::vector<NrRow> nr_sweep(const PointCloud& scan, const PointCloud& reference, const MeshBVH& bvh,
                            const PolConfig& pol, int max_iterations) {
    if (max_iterations < 0) throw Error(ErrorKind::Domain, "iteration count must be non-negative");
    PolConfig step = pol;
    step.iterations = 1;
    std::vector<NrRow> rows;
    PointCloud current = scan;
    auto guarded = [](double before, double after) -> std::optional<double> {
        if (before == 0.0) return std::nullopt;
        return noise_reduction(before, after);
    };
    for (int it = 0; it <= max_iterations; ++it) {
        if (it > 0) current = denoise_pol(current, step).cloud;
        NrRow row;
        row.iteration = it;
        row.cd = chamfer(reference, current);
        row.hd = hausdorff(reference, current);
        row.md = mesh_distance(current, bvh);
        const NrRow& base = rows.empty() ? row : rows.front();
        row.nr_cd = guarded(base.cd, row.cd);
        row.nr_hd = guarded(base.hd, row.hd);
        row.nr_md = guarded(base.md, row.md);
        rows.push_back(row);
    }
    return rows;
}

std::string format_pipeline_config(const PipelineConfig& cfg) {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    kv("mesh", cfg.mesh.generic_string());
    kv("center", format_double(cfg.center.x()) + "," + format_double(cfg.center.y()) + "," + format_double(cfg.center.z()));
    kv("radius", format_double(cfg.radius));
    kv("rays", std::to_string(cfg.ao.ray_count));
    kv("ao-seed", std::to_string(cfg.ao.seed));
    kv("sampling", to_string(cfg.ao.hemisphere));
    kv("sigma", format_double(cfg.noise.sigma));
    kv("seed", std::to_string(cfg.noise.seed));
    kv("nu", format_double(cfg.noise.nu));
    kv("mu", format_double(cfg.noise.mu));
    kv("max-med", format_double(cfg.noise.max_med));
    kv("ao-power", std::to_string(cfg.noise.ao_power));
    kv("pol-radius", format_double(cfg.pol.radius));
    kv("iterations", std::to_string(cfg.pol.iterations));
    kv("min-neighbors", std::to_string(cfg.pol.min_neighbors));
    kv("weight-n", std::to_string(cfg.weight_n));
    return s;
}

void run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    validate(cfg.pol);
    validate(cfg.ao);
    if (cfg.out.empty()) throw Error(ErrorKind::Domain, "pipeline needs an output directory");
    const bool clean_level = cfg.noise.sigma == 0.0;
    if (!clean_level) validate(cfg.noise);

    const fs::path staging = cfg.out.string() + ".partial";
    fs::remove_all(staging);
    fs::create_directories(staging);
    try {
        TriangleMesh mesh = load_mesh(cfg.mesh);
        if (!mesh.vertex_normals) mesh.vertex_normals = mesh.compute_vertex_normals();
        const PointCloud disc = prepare_ear_cloud(mesh, cfg.center, cfg.radius, cfg.ao);
        save_point_cloud(staging / "disc.ply", disc);

        PointCloud noisy = disc;
        double cmp_target = 100.0;
        if (!clean_level) {
            const auto scan = synthesize_scan(disc, cfg.noise);
            noisy = scan.cloud;
            cmp_target = scan.cmp_target;
        }
        save_point_cloud(staging / "noisy.ply", noisy);

        const auto denoised = denoise_pol(noisy, cfg.pol);
        save_point_cloud(staging / "denoised.ply", denoised.cloud);
        std::string flags = "index,pass_through\n";
        std::size_t passed = 0;
        for (std::size_t i = 0; i < denoised.pass_through.size(); ++i) {
            flags += std::to_string(i) + "," + (denoised.pass_through[i] ? "1" : "0") + "\n";
            passed += denoised.pass_through[i] ? 1 : 0;
        }
        write_text_file(staging / "flags.csv", flags);

        const MeshBVH bvh(mesh);
        const auto before = metric_report(noisy, disc, bvh, cfg.weight_n);
        const auto after = metric_report(denoised.cloud, disc, bvh, cfg.weight_n);

        nlohmann::ordered_json report;
        report["metadata"] = {{"tool", kToolName},
                              {"version", kVersion},
                              {"command", "pipeline"},
                              {"seed", cfg.noise.seed},
                              {"ao_seed", cfg.ao.seed},
                              {"parameters", format_pipeline_config(cfg)},
                              {"percentile_method", kPercentileMethod},
                              {"stats_reference", kStatsReference},
                              {"hemisphere", to_string(cfg.ao.hemisphere)},
                              {"rays", cfg.ao.ray_count}};
        report["counts"] = {{"disc", disc.size()}, {"noisy", noisy.size()}, {"pass_through", passed}};
        report["l"] = round9(bounding_diagonal(disc));
        report["cmp_target"] = round9(cmp_target);
        report["before"] = report_json(before);
        report["after"] = report_json(after);
        nlohmann::ordered_json nr;
        for (const auto& name : {"acc", "avg", "max", "cd", "hd", "md"}) {
            const double b = metric_value(before, name);
            if (b == 0.0)
                nr[name] = "skipped";
            else
                nr[name] = round9(noise_reduction(b, metric_value(after, name)));
        }
        report["nr_percent"] = nr;
        write_text_file(staging / "report.json", report.dump(2) + "\n");
        write_text_file(staging / "config.txt", format_pipeline_config(cfg));
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    fs::remove_all(cfg.out);
    if (cfg.out.has_parent_path()) fs::create_directories(cfg.out.parent_path());
    fs::rename(staging, cfg.out);
}

}  // namespace earscan
