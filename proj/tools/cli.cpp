#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "earscan/dataset.hpp"
#include "earscan/denoise_pol.hpp"
#include "earscan/error.hpp"
#include "earscan/geometry.hpp"
#include "earscan/io.hpp"
#include "earscan/loss_eval.hpp"
#include "earscan/metrics.hpp"
#include "earscan/noise_synth.hpp"
#include "earscan/occlusion.hpp"
#include "earscan/parallel.hpp"
#include "earscan/spectral.hpp"
#include "earscan/version.hpp"
#include "earscan/workflows.hpp"

namespace earscan::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

double round9(double v) { return std::stod(format_double(v)); }

std::string fmt(double v) { return std::isnan(v) ? "nan" : format_double(v); }

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InsufficientData: return kInsufficientData;
        case ErrorKind::Domain:
        case ErrorKind::DegenerateFit:
        case ErrorKind::DegenerateWeights:
        case ErrorKind::ZeroMean:
        case ErrorKind::UndefinedCorrelation:
        case ErrorKind::Division: return kNumericError;
        default: return kInputError;
    }
}

Json metadata(const std::string& command, const std::map<std::string, std::string>& params) {
    Json p = Json::object();
    for (const auto& [k, v] : params) p[k] = v;
    return {{"tool", kToolName}, {"version", kVersion}, {"command", command}, {"parameters", p}};
}

void write_json(const std::string& path, const Json& j, std::ostream& out) {
    const auto text = j.dump(2) + "\n";
    if (path.empty() || path == "-")
        out << text;
    else
        write_text_file(path, text);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-")
        out << text;
    else
        write_text_file(path, text);
}

Json report_json(const MetricReport& r) {
    return {{"acc", round9(r.acc)}, {"cmp", round9(r.cmp)}, {"avg", round9(r.avg)}, {"max", round9(r.max)},
            {"cd", round9(r.cd)},   {"hd", round9(r.hd)},   {"md", round9(r.md)},   {"n_power", r.n_power}};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, sep)) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

Vec3 parse_vec3(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 3) throw Error(ErrorKind::Parse, "expected x,y,z but got '" + s + "'");
    try {
        return Vec3(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "invalid coordinates '" + s + "'");
    }
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const std::string& file) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorKind::Parse, file + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

CsvTable read_csv(const std::string& path) {
    CsvTable t;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line, ',');
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw Error(ErrorKind::Parse, path + ": line " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " cells, expected " +
                                              std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double to_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, context + ": invalid number '" + s + "'");
    }
}

PointCloud with_ao(PointCloud cloud, const TriangleMesh& mesh) {
    if (cloud.has_ao()) return cloud;
    return transfer_ao(cloud, mesh);
}

std::string flags_csv(const std::vector<bool>& flags) {
    std::string s = "index,pass_through\n";
    for (std::size_t i = 0; i < flags.size(); ++i) s += std::to_string(i) + "," + (flags[i] ? "1" : "0") + "\n";
    return s;
}

// Options shared by every subcommand.
struct Common {
    unsigned threads = 0;
};

}  // namespace

std::vector<std::string> config_arguments(const std::string& text) {
    std::vector<std::string> args;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Parse, "config line " + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::Parse, "config line " + std::to_string(line_no) + ": empty key");
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ear point-cloud metrics, synthetic scan error and polynomial denoising", "earscan"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Common common;
    std::function<void()> action;
    std::map<std::string, std::string> recorded;

    auto sub = [&](const std::string& name, const std::string& desc) {
        auto* s = app.add_subcommand(name, desc);
        s->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
        s->set_help_flag("-h,--help");
        return s;
    };

    // ao
    struct {
        std::string mesh, out, sampling = "stratified";
        int rays = 256;
        std::uint64_t seed = 0;
    } ao;
    {
        auto* s = sub("ao", "Compute per-vertex ambient occlusion into the PLY quality property");
        s->add_option("--mesh", ao.mesh, "Input mesh (PLY or OBJ)")->required();
        s->add_option("--out", ao.out, "Output PLY")->required();
        s->add_option("--rays", ao.rays, "Rays per vertex")->capture_default_str();
        s->add_option("--seed", ao.seed, "Sampling seed")->capture_default_str();
        s->add_option("--sampling", ao.sampling, "stratified or random")->capture_default_str();
        s->callback([&] {
            action = [&] {
                TriangleMesh mesh = load_mesh(ao.mesh);
                if (!mesh.vertex_normals) mesh.vertex_normals = mesh.compute_vertex_normals();
                AoConfig cfg;
                cfg.ray_count = ao.rays;
                cfg.seed = ao.seed;
                cfg.hemisphere = parse_hemisphere_sampling(ao.sampling);
                const MeshBVH bvh(mesh);
                mesh.vertex_ao = compute_ao(mesh, bvh, cfg);
                save_mesh(ao.out, mesh);
                recorded = {{"mesh", ao.mesh}, {"rays", std::to_string(cfg.ray_count)},
                            {"seed", std::to_string(cfg.seed)}, {"sampling", to_string(cfg.hemisphere)}};
                write_json(ao.out + ".meta.json", {{"metadata", metadata("ao", recorded)}}, out);
            };
        });
    }

    // corrupt
    NoiseParams noise;
    struct {
        std::string in, mesh, out;
    } corrupt;
    auto add_noise_options = [&](CLI::App* s, NoiseParams& p) {
        s->add_option("--sigma", p.sigma, "t scale as a fraction of l")->capture_default_str();
        s->add_option("--seed", p.seed, "Random seed")->capture_default_str();
        s->add_option("--nu", p.nu, "t shape")->capture_default_str();
        s->add_option("--mu", p.mu, "t location as a fraction of l")->capture_default_str();
        s->add_option("--max-med", p.max_med, "Clamp bound as a fraction of l")->capture_default_str();
        s->add_option("--ao-power", p.ao_power, "Power of the AO complement")->capture_default_str();
        s->add_option("--sigma-min", p.sigma_min)->capture_default_str();
        s->add_option("--sigma-max", p.sigma_max)->capture_default_str();
        s->add_option("--cmp-max", p.cmp_max)->capture_default_str();
        s->add_option("--cmp-min", p.cmp_min)->capture_default_str();
    };
    auto noise_record = [](const NoiseParams& p) {
        return std::map<std::string, std::string>{
            {"sigma", format_double(p.sigma)},       {"seed", std::to_string(p.seed)},
            {"nu", format_double(p.nu)},             {"mu", format_double(p.mu)},
            {"max_med", format_double(p.max_med)},   {"ao_power", std::to_string(p.ao_power)},
            {"sigma_min", format_double(p.sigma_min)}, {"sigma_max", format_double(p.sigma_max)},
            {"cmp_max", format_double(p.cmp_max)},   {"cmp_min", format_double(p.cmp_min)}};
    };
    {
        auto* s = sub("corrupt", "Apply synthetic photogrammetric error to a clean cloud");
        s->add_option("--in", corrupt.in, "Clean cloud with normals (and AO unless --mesh is given)")->required();
        s->add_option("--mesh", corrupt.mesh, "Mesh with vertex AO to transfer from");
        s->add_option("--out", corrupt.out, "Output PLY")->required();
        add_noise_options(s, noise);
        s->callback([&] {
            action = [&] {
                PointCloud cloud = load_point_cloud(corrupt.in);
                if (!corrupt.mesh.empty()) cloud = with_ao(cloud, load_mesh(corrupt.mesh));
                const auto scan = synthesize_scan(cloud, noise);
                save_point_cloud(corrupt.out, scan.cloud);
                recorded = noise_record(noise);
                recorded["in"] = corrupt.in;
                Json meta{{"metadata", metadata("corrupt", recorded)},
                          {"l", round9(scan.diagonal)},
                          {"cmp_target", round9(scan.cmp_target)},
                          {"input_count", cloud.size()},
                          {"output_count", scan.cloud.size()}};
                write_json(corrupt.out + ".meta.json", meta, out);
            };
        });
    }

    // dataset
    NoiseParams ds_noise;
    struct {
        std::string meshes, split, subjects, out, sampling = "stratified";
        int rays = 256;
        std::uint64_t seed = 0, ao_seed = 0;
    } ds;
    {
        auto* s = sub("dataset", "Build the noisy/clean training, validation and testing splits");
        s->add_option("--meshes", ds.meshes, "Directory of <subject>.ply meshes")->required();
        auto* split_opt = s->add_option("--split", ds.split, "Split definition (JSON)");
        s->add_option("--subjects", ds.subjects, "Text file of 40 subject ids for the standard 20/10/10 split")
            ->excludes(split_opt);
        s->add_option("--out", ds.out, "Output directory")->required();
        s->add_option("--seed", ds.seed, "Dataset seed")->capture_default_str();
        s->add_option("--rays", ds.rays, "AO rays per vertex")->capture_default_str();
        s->add_option("--ao-seed", ds.ao_seed, "AO seed")->capture_default_str();
        s->add_option("--sampling", ds.sampling, "AO sampling scheme")->capture_default_str();
        s->add_option("--nu", ds_noise.nu)->capture_default_str();
        s->add_option("--mu", ds_noise.mu)->capture_default_str();
        s->add_option("--max-med", ds_noise.max_med)->capture_default_str();
        s->add_option("--ao-power", ds_noise.ao_power)->capture_default_str();
        s->callback([&] {
            action = [&] {
                SplitSpec spec;
                if (!ds.split.empty()) {
                    spec = parse_split_spec(read_text_file(ds.split));
                } else if (!ds.subjects.empty()) {
                    std::vector<std::string> ids;
                    std::istringstream in(read_text_file(ds.subjects));
                    for (std::string id; in >> id;) ids.push_back(id);
                    spec = standard_split(ids);
                } else {
                    throw Error(ErrorKind::Dataset, "either --split or --subjects is required");
                }
                AoConfig ao_cfg;
                ao_cfg.ray_count = ds.rays;
                ao_cfg.seed = ds.ao_seed;
                ao_cfg.hemisphere = parse_hemisphere_sampling(ds.sampling);
                const auto summary = build_dataset(ds.meshes, spec, ds_noise, ds.seed, ds.out, ao_cfg);
                for (const auto& [name, n] : summary.counts) out << name << "," << n << "\n";
            };
        });
    }

    // denoise
    PolConfig pol;
    struct {
        std::string method = "pol", in, out, flags;
    } dn;
    {
        auto* s = sub("denoise", "Polynomial (moving least squares) denoising");
        s->add_option("--method", dn.method, "Denoising method")->check(CLI::IsMember({"pol"}))->capture_default_str();
        s->add_option("--radius", pol.radius, "Neighbourhood radius, mm")->capture_default_str();
        s->add_option("--iterations", pol.iterations, "Number of passes")->capture_default_str();
        s->add_option("--min-neighbors", pol.min_neighbors, "Pass-through below this count")->capture_default_str();
        s->add_option("--in", dn.in, "Input PLY")->required();
        s->add_option("--out", dn.out, "Output PLY")->required();
        s->add_option("--flags", dn.flags, "Pass-through flags CSV");
        s->callback([&] {
            action = [&] {
                const auto result = denoise_pol(load_point_cloud(dn.in), pol);
                save_point_cloud(dn.out, result.cloud);
                if (!dn.flags.empty()) write_text_file(dn.flags, flags_csv(result.pass_through));
                recorded = {{"method", dn.method}, {"radius", format_double(pol.radius)},
                            {"iterations", std::to_string(pol.iterations)},
                            {"min_neighbors", std::to_string(pol.min_neighbors)}, {"in", dn.in}};
                write_json(dn.out + ".meta.json", {{"metadata", metadata("denoise", recorded)}}, out);
            };
        });
    }

    // metrics
    struct {
        std::string scan, ref, mesh, out, per_point, format = "json";
        int weight_n = 0;
        double threshold = 1.0;
    } mt;
    {
        auto* s = sub("metrics", "Acc, Cmp, Avg, Max, CD, HD and MD of a scan");
        s->add_option("--scan", mt.scan, "Scan cloud")->required();
        s->add_option("--ref", mt.ref, "Reference cloud")->required();
        s->add_option("--mesh", mt.mesh, "Reference mesh")->required();
        s->add_option("--weight-n", mt.weight_n, "Power of the AO complement weighting (0 = none)")->capture_default_str();
        s->add_option("--threshold", mt.threshold, "Completeness threshold, mm")->capture_default_str();
        s->add_option("--out", mt.out, "Report (default stdout)");
        s->add_option("--format", mt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
        s->add_option("--per-point", mt.per_point, "Per-point CSV: index,d,weighted_d,ao");
        s->callback([&] {
            action = [&] {
                PointCloud scan = load_point_cloud(mt.scan);
                const PointCloud ref = load_point_cloud(mt.ref);
                const TriangleMesh mesh = load_mesh(mt.mesh);
                if (!scan.has_ao() && mesh.vertex_ao) scan = transfer_ao(scan, mesh);
                const MeshBVH bvh(mesh);
                MetricOptions opt;
                opt.cmp_threshold = mt.threshold;
                opt.keep_per_point = !mt.per_point.empty();
                const auto r = metric_report(scan, ref, bvh, mt.weight_n, opt);
                recorded = {{"scan", mt.scan}, {"ref", mt.ref}, {"mesh", mt.mesh},
                            {"weight_n", std::to_string(mt.weight_n)}, {"threshold", format_double(mt.threshold)}};
                Json j{{"metadata", metadata("metrics", recorded)},
                       {"percentile_method", kPercentileMethod},
                       {"stats_reference", kStatsReference},
                       {"report", report_json(r)}};
                if (mt.format == "csv") {
                    std::string csv = "metric,value\n";
                    for (const auto& name : metric_names()) csv += name + "," + fmt(metric_value(r, name)) + "\n";
                    write_text(mt.out, csv, out);
                    if (!mt.out.empty() && mt.out != "-")
                        write_text_file(mt.out + ".meta.json", Json{{"metadata", metadata("metrics", recorded)}}.dump(2) + "\n");
                } else {
                    write_json(mt.out, j, out);
                }
                if (!mt.per_point.empty()) {
                    std::string csv = "index,d,weighted_d,ao\n";
                    for (std::size_t i = 0; i < scan.size(); ++i)
                        csv += std::to_string(i) + "," + fmt((*r.per_point_d)[i]) + "," +
                               fmt((*r.per_point_weighted_d)[i]) + "," + (scan.ao ? fmt((*scan.ao)[i]) : "") + "\n";
                    write_text_file(mt.per_point, csv);
                }
            };
        });
    }

    // nr
    PolConfig nr_pol;
    struct {
        std::string scan, ref, mesh, method = "pol", out;
        int iterations = 3;
    } nr;
    {
        auto* s = sub("nr", "Noise reduction of CD, HD and MD over denoising iterations");
        s->add_option("--scan", nr.scan)->required();
        s->add_option("--ref", nr.ref)->required();
        s->add_option("--mesh", nr.mesh)->required();
        s->add_option("--method", nr.method)->check(CLI::IsMember({"pol"}))->capture_default_str();
        s->add_option("--iterations", nr.iterations, "Largest iteration count")->capture_default_str();
        s->add_option("--radius", nr_pol.radius)->capture_default_str();
        s->add_option("--out", nr.out, "CSV (default stdout)");
        s->callback([&] {
            action = [&] {
                const MeshBVH bvh(load_mesh(nr.mesh));
                const auto rows = nr_sweep(load_point_cloud(nr.scan), load_point_cloud(nr.ref), bvh, nr_pol, nr.iterations);
                std::string csv = "iteration,cd,hd,md,nr_cd,nr_hd,nr_md\n";
                auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("skipped"); };
                for (const auto& r : rows)
                    csv += std::to_string(r.iteration) + "," + fmt(r.cd) + "," + fmt(r.hd) + "," + fmt(r.md) + "," +
                           opt(r.nr_cd) + "," + opt(r.nr_hd) + "," + opt(r.nr_md) + "\n";
                write_text(nr.out, csv, out);
                recorded = {{"scan", nr.scan}, {"ref", nr.ref}, {"mesh", nr.mesh}, {"method", nr.method},
                            {"iterations", std::to_string(nr.iterations)}, {"radius", format_double(nr_pol.radius)}};
                if (!nr.out.empty() && nr.out != "-")
                    write_text_file(nr.out + ".meta.json", Json{{"metadata", metadata("nr", recorded)}}.dump(2) + "\n");
            };
        });
    }

    // front
    struct {
        std::string in, mesh, out;
        double threshold = 2.0;
    } fr;
    {
        auto* s = sub("front", "Keep the points within a distance of a (front-of-pinna) mesh");
        s->add_option("--in", fr.in)->required();
        s->add_option("--mesh", fr.mesh)->required();
        s->add_option("--threshold", fr.threshold, "mm")->capture_default_str();
        s->add_option("--out", fr.out)->required();
        s->callback([&] {
            action = [&] {
                const MeshBVH bvh(load_mesh(fr.mesh));
                const auto selected = select_near_mesh(load_point_cloud(fr.in), bvh, fr.threshold);
                save_point_cloud(fr.out, selected);
                recorded = {{"in", fr.in}, {"mesh", fr.mesh}, {"threshold", format_double(fr.threshold)}};
                write_json(fr.out + ".meta.json",
                           {{"metadata", metadata("front", recorded)}, {"count", selected.size()}}, out);
            };
        });
    }

    // correlate
    struct {
        std::string manifest, hrtf, n_values = "0,1,2,3,4,5", metrics = "acc,cmp,avg,max,cd,hd,md", out, hrtf_out;
    } co;
    {
        auto* s = sub("correlate", "Pearson correlation of AO-weighted geometric metrics with HRTF metrics");
        s->add_option("--manifest", co.manifest, "CSV: scan_id,scan,ref,mesh")->required();
        s->add_option("--hrtf", co.hrtf, "CSV: scan_id,issd,qe,pe")->required();
        s->add_option("--n", co.n_values, "Comma-separated weight powers")->capture_default_str();
        s->add_option("--metrics", co.metrics, "Comma-separated metric names")->capture_default_str();
        s->add_option("--out", co.out, "Correlation CSV (default stdout)");
        s->add_option("--hrtf-out", co.hrtf_out, "HRTF inter-correlation CSV");
        s->callback([&] {
            action = [&] {
                const auto manifest = read_csv(co.manifest);
                const auto hrtf_table = read_csv(co.hrtf);
                const std::vector<std::string> hrtf_cols{"issd", "qe", "pe"};
                std::map<std::string, std::vector<double>> hrtf_by_id;
                const auto id_col = hrtf_table.column("scan_id", co.hrtf);
                std::vector<std::size_t> cols;
                for (const auto& c : hrtf_cols) cols.push_back(hrtf_table.column(c, co.hrtf));
                for (const auto& row : hrtf_table.rows) {
                    std::vector<double> v;
                    for (auto c : cols) v.push_back(to_double(row[c], co.hrtf));
                    hrtf_by_id[row[id_col]] = v;
                }
                std::vector<int> n_values;
                for (const auto& t : split(co.n_values, ',')) n_values.push_back(static_cast<int>(to_double(t, "--n")));
                const auto metrics = split(co.metrics, ',');
                for (const auto& m : metrics) metric_value(MetricReport{}, m);

                const auto mid = manifest.column("scan_id", co.manifest);
                const auto mscan = manifest.column("scan", co.manifest);
                const auto mref = manifest.column("ref", co.manifest);
                const auto mmesh = manifest.column("mesh", co.manifest);
                if (manifest.rows.size() < 3)
                    throw Error(ErrorKind::InsufficientData, "correlation needs at least three scans");
                const fs::path base = fs::path(co.manifest).parent_path();
                auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
                std::vector<std::vector<MetricReport>> reports;
                std::vector<std::vector<double>> hrtf;
                for (const auto& row : manifest.rows) {
                    auto it = hrtf_by_id.find(row[mid]);
                    if (it == hrtf_by_id.end())
                        throw Error(ErrorKind::Parse, "no HRTF metrics for scan '" + row[mid] + "'");
                    const TriangleMesh mesh = load_mesh(resolve(row[mmesh]));
                    PointCloud scan = load_point_cloud(resolve(row[mscan]));
                    if (!scan.has_ao() && mesh.vertex_ao) scan = transfer_ao(scan, mesh);
                    const PointCloud ref = load_point_cloud(resolve(row[mref]));
                    const MeshBVH bvh(mesh);
                    std::vector<MetricReport> per_n;
                    for (int n : n_values) per_n.push_back(metric_report(scan, ref, bvh, n));
                    reports.push_back(std::move(per_n));
                    hrtf.push_back(it->second);
                }
                const auto rows = correlation_table(reports, n_values, metrics, hrtf);
                std::string csv = "metric,n,r_issd,r_qe,r_pe,r_median\n";
                for (const auto& r : rows)
                    csv += r.metric + "," + std::to_string(r.n) + "," + fmt(r.r[0]) + "," + fmt(r.r[1]) + "," +
                           fmt(r.r[2]) + "," + fmt(r.r_median) + "\n";
                write_text(co.out, csv, out);
                recorded = {{"manifest", co.manifest}, {"hrtf", co.hrtf}, {"n", co.n_values}, {"metrics", co.metrics}};
                if (!co.out.empty() && co.out != "-")
                    write_text_file(co.out + ".meta.json", Json{{"metadata", metadata("correlate", recorded)}}.dump(2) + "\n");
                if (!co.hrtf_out.empty()) {
                    std::string pairs = "pair,r\n";
                    for (const auto& [ab, r] : hrtf_intercorrelations(hrtf))
                        pairs += hrtf_cols[ab.first] + "-" + hrtf_cols[ab.second] + "," + fmt(r) + "\n";
                    write_text_file(co.hrtf_out, pairs);
                }
            };
        });
    }

    // issd
    struct {
        std::string a, b, per_direction, out;
        double fmin = 700.0, fmax = 18000.0;
    } is;
    {
        auto* s = sub("issd", "Inter-subject spectral difference of two DTF sets");
        s->add_option("--a", is.a, "DTF CSV")->required();
        s->add_option("--b", is.b, "DTF CSV")->required();
        s->add_option("--fmin", is.fmin, "Lowest band centre, Hz")->capture_default_str();
        s->add_option("--fmax", is.fmax, "Highest band centre, Hz")->capture_default_str();
        s->add_option("--per-direction", is.per_direction, "Per-direction CSV");
        s->add_option("--out", is.out, "JSON result (default stdout)");
        s->callback([&] {
            action = [&] {
                const auto a = load_dtf_csv(is.a);
                const auto b = load_dtf_csv(is.b);
                const auto bank = gammatone_weights(erb_centers(is.fmin, is.fmax), a.frequencies);
                const auto per_dir = issd_per_direction(a, b, bank);
                double mean = 0.0;
                for (double v : per_dir) mean += v;
                if (per_dir.empty()) throw Error(ErrorKind::EmptyInput, "DTF sets have no directions");
                mean /= static_cast<double>(per_dir.size());
                recorded = {{"a", is.a}, {"b", is.b}, {"fmin", format_double(is.fmin)}, {"fmax", format_double(is.fmax)}};
                Json j{{"metadata", metadata("issd", recorded)},
                       {"variance", "population"},
                       {"bands", bank.centers.size()},
                       {"issd", round9(mean)}};
                write_json(is.out, j, out);
                if (!is.per_direction.empty()) {
                    std::string csv = "azimuth,elevation,issd\n";
                    for (std::size_t i = 0; i < per_dir.size(); ++i)
                        csv += fmt(a.directions[i].first) + "," + fmt(a.directions[i].second) + "," + fmt(per_dir[i]) + "\n";
                    write_text_file(is.per_direction, csv);
                }
            };
        });
    }

    // loss-export
    LossConfig loss;
    struct {
        std::string noisy, clean, mesh, denoised, out;
        std::size_t stride = 1;
    } le;
    {
        auto* s = sub("loss-export", "Export per-query loss records (JSON lines)");
        s->add_option("--noisy", le.noisy)->required();
        s->add_option("--clean", le.clean)->required();
        s->add_option("--mesh", le.mesh, "Mesh with vertex AO, used when the noisy cloud has none");
        s->add_option("--denoised", le.denoised, "Denoised cloud matching --noisy point for point");
        s->add_option("--alpha", loss.alpha)->capture_default_str();
        s->add_option("--patch-frac", loss.patch_radius_fraction, "Patch radius as a fraction of l")->capture_default_str();
        s->add_option("--global-count", loss.global_count)->capture_default_str();
        s->add_option("--weight-n", loss.weight_power, "Power of the AO complement")->capture_default_str();
        s->add_option("--seed", loss.seed)->capture_default_str();
        s->add_option("--stride", le.stride, "Use every k-th noisy point as a query")->check(CLI::PositiveNumber)->capture_default_str();
        s->add_option("--out", le.out, "Output file (default stdout)");
        s->callback([&] {
            action = [&] {
                PointCloud noisy = load_point_cloud(le.noisy);
                if (!noisy.has_ao()) {
                    if (le.mesh.empty()) throw Error(ErrorKind::MissingAttribute, "noisy cloud has no AO; pass --mesh");
                    noisy = transfer_ao(noisy, load_mesh(le.mesh));
                }
                const PointCloud clean = load_point_cloud(le.clean);
                std::optional<PointCloud> denoised;
                if (!le.denoised.empty()) denoised = load_point_cloud(le.denoised);
                std::vector<std::size_t> queries;
                for (std::size_t i = 0; i < noisy.size(); i += le.stride) queries.push_back(i);
                const auto batch = evaluate_loss(noisy, clean, denoised, loss, queries);
                recorded = {{"noisy", le.noisy}, {"clean", le.clean}, {"alpha", format_double(loss.alpha)},
                            {"patch_frac", format_double(loss.patch_radius_fraction)},
                            {"global_count", std::to_string(loss.global_count)},
                            {"weight_n", std::to_string(loss.weight_power)}, {"seed", std::to_string(loss.seed)},
                            {"stride", std::to_string(le.stride)}};
                std::string text;
                Json header{{"metadata", metadata("loss-export", recorded)},
                            {"patch_radius", round9(batch.patch_radius)},
                            {"records", batch.records.size()},
                            {"mean_loss", round9(batch.mean_loss)}};
                text += header.dump() + "\n";
                auto vec = [](const Vec3& v) { return Json::array({round9(v.x()), round9(v.y()), round9(v.z())}); };
                for (const auto& r : batch.records) {
                    Json j{{"index", r.index},
                           {"query", vec(r.query)},
                           {"denoised", vec(r.denoised)},
                           {"ao_weight", round9(r.ao_weight)},
                           {"ls_hat", round9(r.terms.ls_hat)},
                           {"lr", round9(r.terms.lr)},
                           {"loss", round9(r.loss)},
                           {"clean_patch", r.clean_patch},
                           {"input_patch", r.input_patch}};
                    if (loss.global_count > 0) j["global"] = r.global;
                    text += j.dump() + "\n";
                }
                write_text(le.out, text, out);
            };
        });
    }

    // pipeline
    PipelineConfig pc;
    struct {
        std::string mesh, out, center = "0,0,0", sampling = "stratified";
    } pl;
    {
        auto* s = sub("pipeline", "mesh -> ear disc -> AO -> corrupt -> denoise -> report");
        s->add_option("--mesh", pl.mesh)->required();
        s->add_option("--out", pl.out, "Output directory")->required();
        s->add_option("--center", pl.center, "Disc centre x,y,z")->capture_default_str();
        s->add_option("--radius", pc.radius, "Disc radius, mm")->capture_default_str();
        s->add_option("--rays", pc.ao.ray_count)->capture_default_str();
        s->add_option("--ao-seed", pc.ao.seed)->capture_default_str();
        s->add_option("--sampling", pl.sampling)->capture_default_str();
        add_noise_options(s, pc.noise);
        s->add_option("--pol-radius", pc.pol.radius)->capture_default_str();
        s->add_option("--iterations", pc.pol.iterations)->capture_default_str();
        s->add_option("--min-neighbors", pc.pol.min_neighbors)->capture_default_str();
        s->add_option("--weight-n", pc.weight_n)->capture_default_str();
        s->callback([&] {
            action = [&] {
                pc.mesh = pl.mesh;
                pc.out = pl.out;
                pc.center = parse_vec3(pl.center);
                pc.ao.hemisphere = parse_hemisphere_sampling(pl.sampling);
                run_pipeline(pc);
            };
        });
    }

    // Splice a --config file's entries in before the other flags so flags win.
    if (!args.empty()) {
        try {
            for (std::size_t i = 1; i < args.size(); ++i) {
                if (args[i] == "--config" && i + 1 < args.size()) {
                    const auto extra = config_arguments(read_text_file(args[i + 1]));
                    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                               args.begin() + static_cast<std::ptrdiff_t>(i + 2));
                    args.insert(args.begin() + 1, extra.begin(), extra.end());
                    break;
                }
                if (args[i].rfind("--config=", 0) == 0) {
                    const auto extra = config_arguments(read_text_file(args[i].substr(9)));
                    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
                    args.insert(args.begin() + 1, extra.begin(), extra.end());
                    break;
                }
            }
        } catch (const Error& e) {
            err << "earscan: " << to_string(e.kind()) << ": " << e.what() << "\n";
            return exit_code(e.kind());
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        for (auto* s : app.get_subcommands())
            if (s->parsed()) out << s->help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "earscan: " << e.what() << "\n";
        return kInputError;
    }

    try {
        set_thread_count(common.threads);
        if (action) action();
    } catch (const Error& e) {
        err << "earscan: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "earscan: io error: " << e.what() << "\n";
        return kInputError;
    }
    return kOk;
}

}  // namespace earscan::cli
