#include "earscan/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "earscan/error.hpp"
#include "earscan/geometry.hpp"
#include "earscan/io.hpp"
#include "earscan/mesh_bvh.hpp"
#include "earscan/parallel.hpp"
#include "earscan/random.hpp"
#include "earscan/version.hpp"

namespace earscan {
namespace {

double round9(double v) { return std::stod(format_double(v)); }

}  // namespace

SplitSpec standard_split(const std::vector<std::string>& subjects) {
    if (subjects.size() < 40)
        throw Error(ErrorKind::Dataset, "the standard split needs 40 subjects, got " + std::to_string(subjects.size()));
    SplitSpec spec;
    auto take = [&](std::size_t from, std::size_t n) {
        return std::vector<std::string>(subjects.begin() + static_cast<std::ptrdiff_t>(from),
                                        subjects.begin() + static_cast<std::ptrdiff_t>(from + n));
    };
    spec.splits.push_back({"training", take(0, 20), {0.0, 0.001, 0.002, 0.003, 0.004, 0.005}});
    spec.splits.push_back({"validation", take(20, 10), {0.001, 0.003, 0.005}});
    spec.splits.push_back({"testing", take(30, 10), {0.001, 0.003, 0.005}});
    return spec;
}

SplitSpec parse_split_spec(const std::string& json_text) {
    SplitSpec spec;
    try {
        const auto j = nlohmann::json::parse(json_text);
        for (const auto& s : j.at("splits")) {
            SplitSpec::Split split;
            split.name = s.at("name").get<std::string>();
            split.subjects = s.at("subjects").get<std::vector<std::string>>();
            split.sigmas = s.at("sigmas").get<std::vector<double>>();
            spec.splits.push_back(std::move(split));
        }
        if (j.contains("disc")) {
            const auto& d = j.at("disc");
            if (d.contains("center")) {
                const auto c = d.at("center").get<std::vector<double>>();
                if (c.size() != 3) throw Error(ErrorKind::Parse, "disc centre needs three coordinates");
                spec.disc_center = Vec3(c[0], c[1], c[2]);
            }
            if (d.contains("radius")) spec.disc_radius = d.at("radius").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("split file: ") + e.what());
    }
    return spec;
}

std::string sigma_tag(double sigma) {
    if (sigma == 0.0) return "clean";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fpct", sigma * 100.0);
    return buf;
}

PointCloud prepare_ear_cloud(TriangleMesh mesh, const Vec3& center, double radius, const AoConfig& ao_cfg) {
    if (!mesh.vertex_normals) mesh.vertex_normals = mesh.compute_vertex_normals();
    if (!mesh.vertex_ao) {
        // AO only at disc vertices; per-vertex seeds use the mesh vertex index.
        std::vector<std::uint64_t> keys;
        std::vector<Vec3> pts, nrm;
        const double r2 = radius * radius;
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            const double dx = mesh.vertices[i].x() - center.x();
            const double dz = mesh.vertices[i].z() - center.z();
            if (dx * dx + dz * dz <= r2) {
                keys.push_back(i);
                pts.push_back(mesh.vertices[i]);
                nrm.push_back((*mesh.vertex_normals)[i]);
            }
        }
        const MeshBVH bvh(mesh);
        const auto ao = compute_ao_at(bvh, pts, nrm, ao_cfg, keys);
        mesh.vertex_ao.emplace(mesh.vertices.size(), 1.0);
        for (std::size_t k = 0; k < keys.size(); ++k) (*mesh.vertex_ao)[keys[k]] = ao[k];
    }
    return extract_ear_disc(mesh, center, radius);
}

DatasetSummary build_dataset(const std::filesystem::path& mesh_dir, const SplitSpec& spec,
                             const NoiseParams& params, std::uint64_t seed,
                             const std::filesystem::path& out_dir, const AoConfig& ao_cfg) {
    struct Job {
        std::string split;
        std::string subject;
        std::vector<double> sigmas;
        std::filesystem::path mesh;
    };
    std::vector<Job> jobs;
    std::set<std::string> seen;
    std::set<std::string> split_names;
    for (const auto& split : spec.splits) {
        if (!split_names.insert(split.name).second)
            throw Error(ErrorKind::Dataset, "split '" + split.name + "' listed twice");
        if (split.sigmas.empty()) throw Error(ErrorKind::Dataset, "split '" + split.name + "' has no noise levels");
        for (double s : split.sigmas) {
            if (s != 0.0 && !(s >= params.sigma_min && s <= params.sigma_max))
                throw Error(ErrorKind::Dataset, "noise level " + format_double(s) + " outside the sigma range");
        }
        for (const auto& subject : split.subjects) {
            if (!seen.insert(subject).second)
                throw Error(ErrorKind::Dataset, "subject '" + subject + "' appears in more than one split");
            auto mesh = mesh_dir / (subject + ".ply");
            if (!std::filesystem::exists(mesh)) mesh = mesh_dir / (subject + ".obj");
            if (!std::filesystem::exists(mesh))
                throw Error(ErrorKind::Dataset, "missing mesh for subject '" + subject + "' in " + mesh_dir.string());
            jobs.push_back({split.name, subject, split.sigmas, mesh});
        }
    }

    std::vector<std::vector<DatasetEntry>> results(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const auto& job = jobs[j];
            const PointCloud clean = prepare_ear_cloud(load_mesh(job.mesh), spec.disc_center, spec.disc_radius, ao_cfg);
            const std::string clean_text = format_ply(clean);
            const double l = bounding_diagonal(clean);
            for (double sigma : job.sigmas) {
                DatasetEntry e;
                e.split = job.split;
                e.subject = job.subject;
                e.sigma = sigma;
                e.tag = sigma_tag(sigma);
                e.seed = derive_seed(seed, hash_string(job.split + "/" + job.subject), hash_string(e.tag));
                const auto stem = out_dir / job.split / (job.subject + "_" + e.tag);
                e.noisy = stem.string() + "_noisy.ply";
                e.clean = stem.string() + "_clean.ply";
                e.clean_count = clean.size();
                e.diagonal = l;
                if (sigma == 0.0) {
                    write_text_file(e.noisy, clean_text);
                    e.noisy_count = clean.size();
                } else {
                    NoiseParams p = params;
                    p.sigma = sigma;
                    p.seed = e.seed;
                    const auto scan = synthesize_scan(clean, p);
                    save_point_cloud(e.noisy, scan.cloud);
                    e.noisy_count = scan.cloud.size();
                    e.cmp_target = scan.cmp_target;
                }
                write_text_file(e.clean, clean_text);
                results[j].push_back(std::move(e));
            }
        }
    });

    DatasetSummary summary;
    std::map<std::string, std::size_t> counts;
    for (auto& r : results)
        for (auto& e : r) {
            ++counts[e.split];
            summary.entries.push_back(std::move(e));
        }
    for (const auto& split : spec.splits) summary.counts.emplace_back(split.name, counts[split.name]);

    nlohmann::ordered_json manifest;
    manifest["generator"] = {{"tool", kToolName}, {"version", kVersion}};
    manifest["seed"] = seed;
    manifest["params"] = {{"nu", round9(params.nu)},
                          {"mu", round9(params.mu)},
                          {"max_med", round9(params.max_med)},
                          {"sigma_min", round9(params.sigma_min)},
                          {"sigma_max", round9(params.sigma_max)},
                          {"cmp_max", round9(params.cmp_max)},
                          {"cmp_min", round9(params.cmp_min)},
                          {"ao_power", params.ao_power},
                          {"length_unit", "fraction of l"}};
    manifest["ao"] = {{"rays", ao_cfg.ray_count}, {"seed", ao_cfg.seed}, {"hemisphere", to_string(ao_cfg.hemisphere)}};
    manifest["disc"] = {{"center", {round9(spec.disc_center.x()), round9(spec.disc_center.y()), round9(spec.disc_center.z())}},
                        {"radius", round9(spec.disc_radius)}};
    nlohmann::ordered_json counts_json = nlohmann::ordered_json::object();
    for (const auto& [name, n] : summary.counts) counts_json[name] = n;
    manifest["counts"] = counts_json;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : summary.entries) {
        entries.push_back({{"split", e.split},
                           {"subject", e.subject},
                           {"sigma", round9(e.sigma)},
                           {"tag", e.tag},
                           {"seed", e.seed},
                           {"noisy", std::filesystem::relative(e.noisy, out_dir).generic_string()},
                           {"clean", std::filesystem::relative(e.clean, out_dir).generic_string()},
                           {"clean_count", e.clean_count},
                           {"noisy_count", e.noisy_count},
                           {"l", round9(e.diagonal)},
                           {"cmp_target", round9(e.cmp_target)}});
    }
    manifest["entries"] = entries;
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

}  // namespace earscan
