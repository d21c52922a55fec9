#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "earscan/mesh_bvh.hpp"
#include "earscan/types.hpp"

namespace fixtures {

using earscan::Face;
using earscan::PointCloud;
using earscan::TriangleMesh;
using earscan::Vec3;

/// Grid of (nx+1) x (ny+1) vertices spanning [x0, x0 + nx*h] x [y0, y0 + ny*h],
/// z = height(x, y), counter-clockwise faces seen from +z.
inline TriangleMesh grid_mesh(int nx, int ny, double h, double x0, double y0,
                              const std::function<double(double, double)>& height = nullptr) {
    TriangleMesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const double x = x0 + i * h, y = y0 + j * h;
            m.vertices.emplace_back(x, y, height ? height(x, y) : 0.0);
        }
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (nx + 1) + i); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

inline TriangleMesh unit_triangle() {
    TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    m.faces = {{0, 1, 2}};
    return m;
}

/// Appends `b` to `a`, offsetting b's face indices.
inline void append(TriangleMesh& a, const TriangleMesh& b) {
    const auto base = static_cast<std::uint32_t>(a.vertices.size());
    a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (auto f : b.faces) a.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

inline TriangleMesh map_vertices(TriangleMesh m, const std::function<Vec3(const Vec3&)>& f) {
    for (auto& v : m.vertices) v = f(v);
    return m;
}

inline TriangleMesh flip_faces(TriangleMesh m) {
    for (auto& f : m.faces) std::swap(f[1], f[2]);
    return m;
}

/// Floor z = 0 (x >= 0) and wall x = 0 (z >= 0), both spanning |y| <= half,
/// meeting in a 90 degree concave edge along the y axis. Vertex 0 sits on the
/// edge at the origin; the returned normal is the edge bisector.
struct Dihedral {
    TriangleMesh mesh;
    std::size_t edge_vertex = 0;
    Vec3 normal = Vec3(1, 0, 1).normalized();
};

inline Dihedral dihedral(double half = 1000.0, int cells = 4) {
    Dihedral d;
    const double h = half / cells;
    // Floor: x in [0, half], y in [-half, half].
    auto floor = grid_mesh(cells, 2 * cells, h, 0.0, -half);
    // Wall: map the grid (s, y) to (0, y, s), facing +x.
    auto wall = flip_faces(map_vertices(grid_mesh(cells, 2 * cells, h, 0.0, -half),
                                        [](const Vec3& v) { return Vec3(0.0, v.y(), v.x()); }));
    TriangleMesh m;
    m.vertices.push_back(Vec3::Zero());
    append(m, floor);
    append(m, wall);
    d.mesh = m;
    return d;
}

/// Axis-aligned closed cube [0, s]^3 with each face split into n x n cells,
/// faces wound outward.
inline TriangleMesh cube(double s = 10.0, int n = 2) {
    TriangleMesh m;
    const double h = s / n;
    auto face = [&](const std::function<Vec3(const Vec3&)>& f, bool flip) {
        auto g = map_vertices(grid_mesh(n, n, h, 0.0, 0.0), f);
        append(m, flip ? flip_faces(g) : g);
    };
    face([&](const Vec3& v) { return Vec3(v.x(), v.y(), s); }, false);   // top, +z
    face([&](const Vec3& v) { return Vec3(v.x(), v.y(), 0.0); }, true);  // bottom, -z
    face([&](const Vec3& v) { return Vec3(v.y(), s, v.x()); }, false);   // +y
    face([&](const Vec3& v) { return Vec3(v.y(), 0.0, v.x()); }, true);  // -y
    face([&](const Vec3& v) { return Vec3(s, v.x(), v.y()); }, false);   // +x
    face([&](const Vec3& v) { return Vec3(0.0, v.x(), v.y()); }, true);  // -x
    return m;
}

inline std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    return pts;
}

inline PointCloud cloud_of(std::vector<Vec3> pts) {
    PointCloud c;
    c.positions = std::move(pts);
    return c;
}

/// Random triangle soup with non-degenerate faces.
inline TriangleMesh random_soup(std::size_t faces, std::mt19937_64& rng, double scale = 10.0) {
    std::uniform_real_distribution<double> u(-scale, scale), s(-2.0, 2.0);
    TriangleMesh m;
    while (m.faces.size() < faces) {
        const Vec3 c(u(rng), u(rng), u(rng));
        const Vec3 a = c + Vec3(s(rng), s(rng), s(rng));
        const Vec3 b = c + Vec3(s(rng), s(rng), s(rng));
        const Vec3 d = c + Vec3(s(rng), s(rng), s(rng));
        if ((b - a).cross(d - a).norm() < 1e-3) continue;
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.insert(m.vertices.end(), {a, b, d});
        m.faces.push_back({base, base + 1, base + 2});
    }
    return m;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec3 v;
    do v = Vec3(n(rng), n(rng), n(rng));
    while (v.norm() < 1e-6);
    return v.normalized();
}

inline earscan::Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

// ---- brute-force oracles --------------------------------------------------

inline double sq(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

/// (index, squared distance), lowest index on ties.
inline std::pair<std::size_t, double> brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = sq(pts[i], q);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return {best, bd};
}

inline std::vector<double> brute_distances(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    std::vector<double> d;
    for (const auto& p : from) d.push_back(std::sqrt(brute_nearest(to, p).second));
    return d;
}

/// (face, squared distance, point), lowest face on ties.
struct BruteClosest {
    std::size_t face = 0;
    double squared = std::numeric_limits<double>::infinity();
    Vec3 point;
};

inline BruteClosest brute_closest(const TriangleMesh& m, const Vec3& q) {
    BruteClosest best;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const auto& F = m.faces[f];
        const Vec3 p = earscan::closest_point_on_triangle(q, m.vertices[F[0]], m.vertices[F[1]], m.vertices[F[2]]);
        const double d = sq(p, q);
        if (d < best.squared) best = {f, d, p};
    }
    return best;
}

inline std::optional<std::pair<double, std::size_t>> brute_hit(const TriangleMesh& m, const Vec3& o, const Vec3& d,
                                                              double eps) {
    std::optional<std::pair<double, std::size_t>> best;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const auto& F = m.faces[f];
        const auto t = earscan::intersect_triangle(o, d, m.vertices[F[0]], m.vertices[F[1]], m.vertices[F[2]]);
        if (t && *t >= eps && (!best || *t < best->first)) best = {{*t, f}};
    }
    return best;
}

/// Linear-interpolation percentile on a sorted copy, written independently.
inline double brute_percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (rank - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean(const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
}

inline double population_variance(const std::vector<double>& v) {
    const double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / v.size());
}

inline bool rel_close(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace fixtures

namespace fixtures {

/// Two-sample Kolmogorov-Smirnov statistic D.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic critical value of D at significance alpha.
inline double ks_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

/// t draws built from the standard library's normal and chi-square
/// distributions on a 32-bit engine; shares nothing with the library sampler.
inline std::vector<double> oracle_student_t(double nu, double mu, double sigma, std::size_t count,
                                            std::uint32_t seed) {
    std::mt19937 eng(seed);
    std::normal_distribution<double> z;
    std::chi_squared_distribution<double> chi(nu);
    std::vector<double> out(count);
    for (auto& v : out) {
        const double n = z(eng);
        v = mu + sigma * n / std::sqrt(chi(eng) / nu);
    }
    return out;
}

/// Flat square sheet of points in the xy plane with +z normals and AO drawn
/// uniformly from [0, 1).
inline PointCloud sheet(int side, double h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud c;
    c.normals = std::vector<Vec3>();
    c.ao = std::vector<double>();
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) {
            c.positions.emplace_back(i * h, j * h, 0.0);
            c.normals->emplace_back(0.0, 0.0, 1.0);
            c.ao->push_back(u(rng));
        }
    return c;
}

struct MetricOracle {
    double acc, cmp, avg, max, cd, hd, md;
};

/// O(N*M) evaluation of every metric, weighted per scan point by `w`
/// (reference points take the weight of their nearest scan point).
inline MetricOracle brute_metrics(const PointCloud& y, const PointCloud& x, const TriangleMesh& mesh, const std::vector<double>& w) {
    std::vector<double> dy, dx, dy2, dx2, md2;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto [id, d2] = brute_nearest(x.positions, y.positions[i]);
        (void)id;
        dy.push_back(std::sqrt(d2) * w[i]);
        dy2.push_back(d2 * w[i] * w[i]);
        md2.push_back(brute_closest(mesh, y.positions[i]).squared * w[i] * w[i]);
    }
    for (const auto& p : x.positions) {
        const auto [id, d2] = brute_nearest(y.positions, p);
        dx.push_back(std::sqrt(d2) * w[id]);
        dx2.push_back(d2 * w[id] * w[id]);
    }
    MetricOracle o{};
    o.avg = mean(dy);
    o.max = *std::max_element(dy.begin(), dy.end());
    o.acc = brute_percentile(dy, 95.0);
    o.cmp = 100.0 * static_cast<double>(std::count_if(dx.begin(), dx.end(), [](double d) { return d < 1.0; })) /
            static_cast<double>(dx.size());
    o.cd = mean(dx2) + mean(dy2);
    o.hd = std::max(o.max, *std::max_element(dx.begin(), dx.end()));
    o.md = mean(md2);
    return o;
}

}  // namespace fixtures
