#include <doctest.h>

#include <filesystem>

#include "earscan/dataset.hpp"
#include "earscan/error.hpp"
#include "earscan/io.hpp"
#include "earscan/metrics.hpp"
#include "earscan/parallel.hpp"
#include "earscan/workflows.hpp"
#include "fixtures.hpp"

using namespace earscan;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("earscan_wf_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Wavy ear-sized sheet in the xz plane facing +y.
TriangleMesh wavy_sheet(int cells, double half, double phase = 0.0) {
    auto g = fixtures::grid_mesh(cells, cells, 2 * half / cells, -half, -half,
                                 [&](double x, double y) { return 2.0 * std::sin(x / 5 + phase) * std::cos(y / 7); });
    // (x, y, h) -> (x, h, -y): the sheet's +z normal becomes +y.
    return fixtures::map_vertices(g, [](const Vec3& v) { return Vec3(v.x(), v.z(), -v.y()); });
}

std::string tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.string() + "\n" + read_text_file(root / f) + "\n";
    return all;
}

}  // namespace

TEST_SUITE("workflows") {

TEST_CASE("correlation table") {
    std::vector<std::vector<MetricReport>> reports;
    std::vector<std::vector<double>> hrtf;
    for (int s = 0; s < 5; ++s) {
        std::vector<MetricReport> per_n;
        for (int n = 0; n < 2; ++n) {
            MetricReport r;
            r.cd = 1.0 + s * s + n;
            r.hd = 3.0 - s;
            r.acc = 1.0;  // constant: undefined correlation
            per_n.push_back(r);
        }
        reports.push_back(per_n);
        hrtf.push_back({1.0 + s * s, -(1.0 + s * s), 0.5 * s});
    }
    const auto rows = correlation_table(reports, {0, 1}, {"cd", "hd", "acc"}, hrtf);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].metric == "cd");
    CHECK(rows[0].n == 0);
    CHECK(rows[0].r[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rows[0].r[1] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(rows[0].r_median == doctest::Approx(rows[0].r[2]));
    CHECK(rows[2].metric == "hd");
    CHECK(rows[2].r[2] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(std::isnan(rows[4].r[0]));
    CHECK(std::isnan(rows[4].r_median));
    reports.resize(2);
    hrtf.resize(2);
    CHECK(kind_of([&] { correlation_table(reports, {0, 1}, {"cd"}, hrtf); }) == ErrorKind::InsufficientData);
    CHECK(median_ignoring_nan({1.0, NAN, 3.0}) == 2.0);
    const auto inter = hrtf_intercorrelations({{1, 2, 3}, {2, 4, 5}, {3, 7, 9}, {4, 1, 0}});
    CHECK(inter.size() == 3);
    CHECK(inter[0].first == std::pair<std::size_t, std::size_t>{0, 1});
}

TEST_CASE("noise-reduction sweep") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> e(-0.2, 0.2);
    const auto plane = fixtures::grid_mesh(40, 40, 0.3, 0, 0);
    const auto ref = fixtures::cloud_of(plane.vertices);
    auto scan = ref;
    for (auto& p : scan.positions) p.z() += e(rng);
    const MeshBVH bvh(plane);
    const auto rows = nr_sweep(scan, ref, bvh, PolConfig{}, 3);
    REQUIRE(rows.size() == 4);
    CHECK((*rows[0].nr_cd == 0.0 && *rows[0].nr_hd == 0.0 && *rows[0].nr_md == 0.0));
    CHECK(*rows[1].nr_md > 0.0);
    CHECK(*rows[1].nr_md >= *rows[0].nr_md);
    for (const auto& r : rows) CHECK(r.iteration >= 0);
    CHECK(noise_reduction(rows[0].cd, chamfer(ref, ref)) == 100.0);
    const auto clean = nr_sweep(ref, ref, bvh, PolConfig{}, 1);
    CHECK_FALSE(clean[0].nr_cd.has_value());
}

TEST_CASE("pipeline: deterministic, thread independent, clean level skipped") {
    const auto dir = scratch("pipeline");
    auto mesh = wavy_sheet(60, 30.0);
    save_mesh(dir / "ear.ply", mesh);
    PipelineConfig cfg;
    cfg.mesh = dir / "ear.ply";
    cfg.radius = 25.0;
    cfg.ao.ray_count = 32;
    cfg.noise.sigma = 0.003;
    cfg.noise.seed = 17;
    cfg.out = dir / "a";
    set_thread_count(1);
    run_pipeline(cfg);
    cfg.out = dir / "b";
    set_thread_count(4);
    run_pipeline(cfg);
    set_thread_count(0);
    CHECK(tree_digest(dir / "a") == tree_digest(dir / "b"));
    for (const char* f : {"disc.ply", "noisy.ply", "denoised.ply", "flags.csv", "report.json", "config.txt"})
        CHECK(fs::exists(dir / "a" / f));
    const auto report = read_text_file(dir / "a" / "report.json");
    CHECK(report.find("\"percentile_method\": \"linear\"") != std::string::npos);

    cfg.noise.sigma = 0.0;
    cfg.out = dir / "clean";
    run_pipeline(cfg);
    CHECK(read_text_file(dir / "clean" / "report.json").find("\"md\": \"skipped\"") != std::string::npos);

    cfg.mesh = dir / "missing.ply";
    cfg.out = dir / "fail";
    CHECK(kind_of([&] { run_pipeline(cfg); }) == ErrorKind::Io);
    CHECK_FALSE(fs::exists(dir / "fail"));
    CHECK_FALSE(fs::exists(dir / "fail.partial"));
    fs::remove_all(dir);
}

TEST_CASE("standard split counts and split-file parsing") {
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("s" + std::to_string(i));
    const auto spec = standard_split(ids);
    REQUIRE(spec.splits.size() == 3);
    std::size_t total[3];
    for (int k = 0; k < 3; ++k) total[k] = spec.splits[k].subjects.size() * spec.splits[k].sigmas.size();
    CHECK(total[0] == 120);
    CHECK(total[1] == 30);
    CHECK(total[2] == 30);
    CHECK(kind_of([&] { standard_split(std::vector<std::string>(ids.begin(), ids.begin() + 39)); }) == ErrorKind::Dataset);
    CHECK(sigma_tag(0.0) == "clean");
    CHECK(sigma_tag(0.003) == "0.3pct");
    const auto parsed = parse_split_spec(
        R"({"splits":[{"name":"train","subjects":["a","b"],"sigmas":[0,0.002]}],"disc":{"center":[1,2,3],"radius":12}})");
    CHECK(parsed.splits[0].subjects.size() == 2);
    CHECK(parsed.disc_radius == 12.0);
    CHECK(parsed.disc_center == Vec3(1, 2, 3));
    CHECK(kind_of([] { parse_split_spec("{"); }) == ErrorKind::Parse);
}

TEST_CASE("dataset build") {
    const auto dir = scratch("dataset");
    fs::create_directories(dir / "meshes");
    for (int s = 0; s < 3; ++s) save_mesh(dir / "meshes" / ("m" + std::to_string(s) + ".ply"), wavy_sheet(16, 10.0, s));
    SplitSpec spec;
    spec.splits = {{"training", {"m0", "m1"}, {0.0, 0.001, 0.005}}, {"testing", {"m2"}, {0.003}}};
    spec.disc_radius = 8.0;
    AoConfig ao;
    ao.ray_count = 16;
    const auto summary = build_dataset(dir / "meshes", spec, NoiseParams{}, 5, dir / "out", ao);
    CHECK(summary.entries.size() == 7);
    CHECK(summary.counts == std::vector<std::pair<std::string, std::size_t>>{{"training", 6}, {"testing", 1}});
    CHECK(fs::exists(dir / "out" / "training" / "m1_0.5pct_noisy.ply"));
    CHECK(fs::exists(dir / "out" / "testing" / "m2_0.3pct_clean.ply"));
    CHECK(read_text_file(dir / "out" / "training" / "m0_clean_noisy.ply") ==
          read_text_file(dir / "out" / "training" / "m0_clean_clean.ply"));
    const auto digest = tree_digest(dir / "out");
    build_dataset(dir / "meshes", spec, NoiseParams{}, 5, dir / "again", ao);
    CHECK(tree_digest(dir / "again") == digest);

    auto dup = spec;
    dup.splits[1].subjects = {"m0"};
    CHECK(kind_of([&] { build_dataset(dir / "meshes", dup, NoiseParams{}, 5, dir / "x", ao); }) == ErrorKind::Dataset);
    auto missing = spec;
    missing.splits[1].subjects = {"nobody"};
    CHECK(kind_of([&] { build_dataset(dir / "meshes", missing, NoiseParams{}, 5, dir / "y", ao); }) == ErrorKind::Dataset);
    fs::remove_all(dir);
}

}  // TEST_SUITE
