#include <doctest.h>

#include "earscan/denoise_pol.hpp"
#include "earscan/error.hpp"
#include "earscan/geometry.hpp"
#include "earscan/spatial_index.hpp"
#include "fixtures.hpp"

using namespace earscan;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;
}

PointCloud height_field(double extent, double h, const std::function<double(double, double)>& f) {
    PointCloud c;
    const int n = static_cast<int>(std::lround(2 * extent / h)) + 1;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x = -extent + i * h, y = -extent + j * h;
            c.positions.emplace_back(x, y, f(x, y));
        }
    return c;
}

double angle_deg(const Vec3& a, const Vec3& b) {
    return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))) * 180.0 / M_PI;
}

}  // namespace

TEST_SUITE("pol") {

TEST_CASE("plane fit on an exact plane") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) pts.emplace_back(i * 0.5 + 1, j * 0.3 - 2, 0.0);
    const auto f = fit_local_plane(pts);
    CHECK(std::abs(f.normal.z()) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.normal.z() > 0.0);
    CHECK(std::abs(f.origin.z()) < 1e-15);
    CHECK(f.origin.x() == doctest::Approx(2.0));
    // Oriented toward an off-plane query.
    CHECK(fit_local_plane(pts, Vec3(0, 0, -1)).normal.z() < 0.0);
    const auto& n = f.normal;
    CHECK(std::abs(n.dot(f.u)) < 1e-15);
    CHECK(std::abs(n.dot(f.v)) < 1e-15);
    CHECK(f.u.cross(f.v).dot(n) == doctest::Approx(1.0));
}

TEST_CASE("plane fit with symmetric noise matches an eigen oracle") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> pts;
        for (int i = 0; i < 60; ++i) {
            const double x = u(rng), y = u(rng), e = 0.05 * (i % 2 ? 1 : -1);
            pts.emplace_back(x, y, e);
        }
        const auto f = fit_local_plane(pts);
        CHECK(angle_deg(f.normal, Vec3::UnitZ()) < 5.0);
        // Exhaustive oracle: the unit normal minimizing sum of squared offsets.
        Vec3 c = Vec3::Zero();
        for (const auto& p : pts) c += p;
        c /= static_cast<double>(pts.size());
        double best = 1e300;
        Vec3 best_n;
        for (int a = 0; a <= 180; ++a)
            for (int b = 0; b < 360; b += 1) {
                const double th = a * M_PI / 360.0, ph = b * M_PI / 180.0;
                const Vec3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
                double s = 0;
                for (const auto& p : pts) s += std::pow((p - c).dot(n), 2);
                if (s < best) {
                    best = s;
                    best_n = n;
                }
            }
        CHECK(angle_deg(f.normal, best_n) < 1.0);
    }
}

TEST_CASE("plane fit degeneracies") {
    CHECK(kind_of([] { fit_local_plane(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 0, 0)}); }) == ErrorKind::DegenerateFit);
    CHECK(kind_of([] {
              fit_local_plane(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(3, 3, 3)});
          }) == ErrorKind::DegenerateFit);
}

TEST_CASE("quadratic fit: exact representations") {
    const LocalFrame frame;  // identity
    auto sample = [&](const std::function<double(double, double)>& w) {
        std::vector<Vec3> pts;
        for (int i = -3; i <= 3; ++i)
            for (int j = -3; j <= 3; ++j) pts.emplace_back(i * 0.4, j * 0.5, w(i * 0.4, j * 0.5));
        return pts;
    };
    auto c = fit_quadratic(sample([](double u, double) { return u * u; }), frame);
    const QuadraticCoeffs want{0, 0, 0, 1, 0, 0};
    for (int k = 0; k < 6; ++k) CHECK(std::abs(c[k] - want[k]) < 1e-9);
    c = fit_quadratic(sample([](double u, double) { return 2 + u; }), frame);
    const QuadraticCoeffs plane{2, 1, 0, 0, 0, 0};
    for (int k = 0; k < 6; ++k) CHECK(std::abs(c[k] - plane[k]) < 1e-9);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        QuadraticCoeffs g;
        for (auto& x : g) x = u(rng);
        const Mat3 R = fixtures::random_rotation(rng);
        const auto f = make_frame(Vec3(u(rng), u(rng), u(rng)), R.col(2));
        std::vector<Vec3> pts;
        for (int i = 0; i < 50; ++i) {
            const double a = u(rng), b = u(rng);
            pts.push_back(f.to_world(Vec3(a, b, evaluate_quadratic(g, a, b))));
        }
        const auto fit = fit_quadratic(pts, f);
        for (int k = 0; k < 6; ++k) CHECK(std::abs(fit[k] - g[k]) < 1e-6);
    }
    CHECK(kind_of([&] { fit_quadratic(std::vector<Vec3>(5, Vec3::Zero()), frame); }) == ErrorKind::DegenerateFit);
    std::vector<Vec3> line;
    for (int i = 0; i < 10; ++i) line.emplace_back(i, 0, i * i);
    CHECK(kind_of([&] { fit_quadratic(line, frame); }) == ErrorKind::DegenerateFit);
}

TEST_CASE("projection") {
    const LocalFrame id;
    const QuadraticCoeffs c{0, 0, 0, 1, 0, 0};
    CHECK((project_point(Vec3(1, 0, 5), id, c) - Vec3(1, 0, 1)).norm() < 1e-15);
    CHECK((project_point(Vec3(0.5, 0.2, 0.25), id, c) - Vec3(0.5, 0.2, 0.25)).norm() < 1e-12);
    const auto f = make_frame(Vec3(1, 2, 3), Vec3(0, 1, 1).normalized());
    const QuadraticCoeffs zero{};
    const Vec3 q = Vec3(1, 2, 3) + 3.0 * f.normal + 0.7 * f.u;
    const Vec3 p = project_point(q, f, zero);
    CHECK((q - p - 3.0 * f.normal).norm() < 1e-12);
}

TEST_CASE("plane with uniform noise: RMS halves in one pass") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> e(-0.2, 0.2);
    auto c = height_field(6.0, 0.3, [&](double, double) { return e(rng); });
    auto rms = [](const PointCloud& p) {
        double s = 0;
        for (const auto& v : p.positions) s += v.z() * v.z();
        return std::sqrt(s / static_cast<double>(p.size()));
    };
    const double before = rms(c);
    PolConfig cfg;
    const auto r = denoise_pol(c, cfg);
    CHECK(r.cloud.size() == c.size());
    CHECK(rms(r.cloud) <= 0.5 * before);
    cfg.iterations = 3;
    CHECK(denoise_pol(c, cfg).cloud.size() == c.size());
}

TEST_CASE("noiseless patches") {
    // Quadratic over the fitted plane: exact.
    const auto tilted = height_field(5.0, 0.3, [](double x, double y) { return 0.4 * x + 0.1 * y + 1.0; });
    PolConfig twice;
    twice.iterations = 2;
    const auto r = denoise_pol(tilted, PolConfig{});
    const auto rr = denoise_pol(tilted, twice);
    for (std::size_t i = 0; i < tilted.size(); ++i) {
        CHECK((r.cloud.positions[i] - tilted.positions[i]).norm() < 1e-9);
        CHECK((rr.cloud.positions[i] - r.cloud.positions[i]).norm() < 1e-9);
    }
    // Apex of a paraboloid: symmetric neighbourhood, frame along the axis.
    const auto bowl = height_field(3.0, 0.3, [](double x, double y) { return 0.1 * (x * x + y * y); });
    const auto rb = denoise_pol(bowl, PolConfig{});
    const auto centre = bowl.size() / 2;
    CHECK(bowl.positions[centre].norm() < 1e-12);
    CHECK((rb.cloud.positions[centre] - bowl.positions[centre]).norm() < 1e-12);
    // Gently curved world-frame quadratic: interior displacement < 1e-6 mm.
    const auto gentle = height_field(12.0, 0.3, [](double x, double y) { return 0.004 * x * x + 0.002 * x * y - 0.003 * y * y; });
    const auto r1 = denoise_pol(gentle, PolConfig{});
    const auto r2 = denoise_pol(gentle, twice);
    for (std::size_t i = 0; i < gentle.size(); ++i) {
        const auto& p = gentle.positions[i];
        if (std::abs(p.x()) > 9.0 || std::abs(p.y()) > 9.0) continue;
        CHECK((r1.cloud.positions[i] - p).norm() < 1e-6);
        // A second pass reads first-pass boundary points up to one radius away.
        if (std::abs(p.x()) <= 6.0 && std::abs(p.y()) <= 6.0)
            CHECK((r2.cloud.positions[i] - r1.cloud.positions[i]).norm() < 1e-6);
    }
}

TEST_CASE("pass-through for isolated points and carried attributes") {
    PointCloud c = height_field(2.0, 0.5, [](double x, double) { return 0.05 * x; });
    c.positions.emplace_back(100, 100, 100);
    c.ao = std::vector<double>(c.size(), 0.5);
    c.normals = std::vector<Vec3>(c.size(), Vec3::UnitZ());
    const auto r = denoise_pol(c, PolConfig{});
    CHECK(r.pass_through.back());
    CHECK(r.cloud.positions.back() == Vec3(100, 100, 100));
    CHECK(std::count(r.pass_through.begin(), r.pass_through.end(), true) == 1);
    CHECK(*r.cloud.ao == *c.ao);
    CHECK(*r.cloud.normals == *c.normals);
    // Collinear neighbourhoods degrade to pass-through.
    PointCloud line;
    for (int i = 0; i < 20; ++i) line.positions.emplace_back(i * 0.1, 0, 0);
    const auto rl = denoise_pol(line, PolConfig{});
    CHECK(std::all_of(rl.pass_through.begin(), rl.pass_through.end(), [](bool b) { return b; }));
    CHECK(rl.cloud.positions == line.positions);
}

TEST_CASE("rigid equivariance and thread independence") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> e(0, 0.05);
    const auto c = height_field(5.0, 0.35, [&](double x, double y) { return 0.05 * x * x - 0.02 * y * y + e(rng); });
    const Mat3 R = fixtures::random_rotation(rng);
    const Vec3 t(10, -20, 5);
    PolConfig cfg;
    cfg.iterations = 2;
    const auto a = transform_cloud(denoise_pol(c, cfg).cloud, R, t);
    const auto b = denoise_pol(transform_cloud(c, R, t), cfg).cloud;
    for (std::size_t i = 0; i < c.size(); ++i) CHECK((a.positions[i] - b.positions[i]).norm() < 1e-9);
}

TEST_CASE("each output lies on its own neighbourhood fit") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> e(0, 0.1);
    const auto c = height_field(4.0, 0.4, [&](double x, double y) { return 0.08 * x * y + e(rng); });
    const auto r = denoise_pol(c, PolConfig{});
    const SpatialIndex idx(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (r.pass_through[i]) continue;
        std::vector<Vec3> nb;
        for (auto j : idx.within(c.positions[i], 3.0)) nb.push_back(c.positions[j]);
        const auto frame = fit_local_plane(nb, c.positions[i]);
        const auto coeffs = fit_quadratic(nb, frame);
        const Vec3 local = frame.to_local(r.cloud.positions[i]);
        CHECK(std::abs(local.z() - evaluate_quadratic(coeffs, local.x(), local.y())) < 1e-9);
    }
}

TEST_CASE("config validation") {
    PolConfig cfg;
    cfg.radius = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = PolConfig{};
    cfg.min_neighbors = 5;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = PolConfig{};
    cfg.iterations = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = PolConfig{};
    cfg.order = 3;
    CHECK_THROWS_AS(validate(cfg), Error);
}

}  // TEST_SUITE
