#include "earscan/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "earscan/error.hpp"
#include "earscan/occlusion.hpp"
#include "earscan/parallel.hpp"

namespace earscan {
namespace {

void require_nonempty(const PointCloud& c, const char* what) {
    if (c.empty()) throw Error(ErrorKind::EmptyInput, std::string(what) + " is empty");
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<Neighbor> nearest_all(const PointCloud& from, const SpatialIndex& to) {
    std::vector<Neighbor> out(from.size());
    parallel_for(from.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = to.nearest(from.positions[i]);
    });
    return out;
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw Error(ErrorKind::EmptyInput, "percentile of empty sequence");
    if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorKind::Domain, "percentile outside [0,100]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    if (lo + 1 >= v.size()) return v.back();
    const double f = rank - static_cast<double>(lo);
    return v[lo] + f * (v[lo + 1] - v[lo]);
}

std::vector<double> signed_distance(const PointCloud& cloud, const MeshBVH& bvh) {
    std::vector<double> out(cloud.size());
    parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& q = cloud.positions[i];
            const auto hit = bvh.closest_point(q);
            const double side = (q - hit.point).dot(bvh.face_normal(hit.face));
            out[i] = side < 0.0 ? -hit.distance : hit.distance;
        }
    });
    return out;
}

double chamfer(const PointCloud& x, const PointCloud& y) {
    require_nonempty(x, "first cloud");
    require_nonempty(y, "second cloud");
    const SpatialIndex ix(x), iy(y);
    double sx = 0.0, sy = 0.0;
    for (const auto& n : nearest_all(x, iy)) sx += n.squared;
    for (const auto& n : nearest_all(y, ix)) sy += n.squared;
    return sx / static_cast<double>(x.size()) + sy / static_cast<double>(y.size());
}

double hausdorff(const PointCloud& x, const PointCloud& y) {
    require_nonempty(x, "first cloud");
    require_nonempty(y, "second cloud");
    const SpatialIndex ix(x), iy(y);
    double h = 0.0;
    for (const auto& n : nearest_all(x, iy)) h = std::max(h, n.distance);
    for (const auto& n : nearest_all(y, ix)) h = std::max(h, n.distance);
    return h;
}

double mesh_distance(const PointCloud& y, const MeshBVH& bvh) {
    require_nonempty(y, "scan");
    std::vector<double> d2(y.size());
    parallel_for(y.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) d2[i] = bvh.closest_point(y.positions[i]).squared;
    });
    return mean_of(d2);
}

double completeness(const PointCloud& reference, const PointCloud& scan, double threshold) {
    require_nonempty(reference, "reference");
    require_nonempty(scan, "scan");
    const SpatialIndex is(scan);
    std::size_t hits = 0;
    for (const auto& n : nearest_all(reference, is))
        if (n.distance < threshold) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(reference.size());
}

ScanStats scan_stats(const PointCloud& scan, const PointCloud& reference) {
    require_nonempty(scan, "scan");
    require_nonempty(reference, "reference");
    const SpatialIndex ir(reference);
    std::vector<double> d;
    d.reserve(scan.size());
    for (const auto& n : nearest_all(scan, ir)) d.push_back(n.distance);
    return ScanStats{mean_of(d), *std::max_element(d.begin(), d.end()), percentile(d, 95.0)};
}

std::vector<double> weighted_distances(std::span<const double> d, std::span<const double> weights) {
    if (d.size() != weights.size()) throw Error(ErrorKind::Shape, "distances and weights differ in length");
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] * weights[i];
    return out;
}

double noise_reduction(double before, double after) {
    if (before == 0.0) throw Error(ErrorKind::Division, "noise reduction undefined for zero initial distance");
    if (!(before > 0.0)) throw Error(ErrorKind::Domain, "initial distance must be positive");
    return 100.0 * (before - after) / before;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::Shape, "correlation inputs differ in length");
    if (a.size() < 2) throw Error(ErrorKind::InsufficientData, "correlation needs at least two samples");
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw Error(ErrorKind::UndefinedCorrelation, "correlation of a constant sequence");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

MetricReport metric_report(const PointCloud& scan, const PointCloud& reference, const MeshBVH& bvh,
                           int n, const MetricOptions& options) {
    require_nonempty(scan, "scan");
    require_nonempty(reference, "reference");
    if (n < 0) throw Error(ErrorKind::Domain, "weight power must be non-negative");

    const SpatialIndex iscan(scan), iref(reference);
    const auto y_to_x = nearest_all(scan, iref);
    const auto x_to_y = nearest_all(reference, iscan);
    std::vector<double> mesh_d2(scan.size());
    parallel_for(scan.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) mesh_d2[i] = bvh.closest_point(scan.positions[i]).squared;
    });

    std::vector<double> w;
    if (n > 0) w = normalized_weights(scan, n);
    auto weight = [&](std::size_t scan_index) { return n > 0 ? w[scan_index] : 1.0; };

    // Squared terms are weighted as d^2 * w^2 so unit weights reproduce d^2 bit for bit.
    std::vector<double> dy(scan.size()), dy2(scan.size()), md2(scan.size());
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const double wi = weight(i);
        dy[i] = y_to_x[i].distance * wi;
        dy2[i] = y_to_x[i].squared * (wi * wi);
        md2[i] = mesh_d2[i] * (wi * wi);
    }
    std::vector<double> dx(reference.size()), dx2(reference.size());
    for (std::size_t j = 0; j < reference.size(); ++j) {
        const double wj = weight(x_to_y[j].id);
        dx[j] = x_to_y[j].distance * wj;
        dx2[j] = x_to_y[j].squared * (wj * wj);
    }

    MetricReport r;
    r.n_power = n;
    r.avg = mean_of(dy);
    r.max = *std::max_element(dy.begin(), dy.end());
    r.acc = percentile(dy, 95.0);
    std::size_t hits = 0;
    for (double d : dx)
        if (d < options.cmp_threshold) ++hits;
    r.cmp = 100.0 * static_cast<double>(hits) / static_cast<double>(reference.size());
    r.cd = mean_of(dx2) + mean_of(dy2);
    r.hd = std::max(*std::max_element(dx.begin(), dx.end()), r.max);
    r.md = mean_of(md2);
    if (options.keep_per_point) {
        r.per_point_d.emplace(scan.size());
        for (std::size_t i = 0; i < scan.size(); ++i) (*r.per_point_d)[i] = y_to_x[i].distance;
        r.per_point_weighted_d = dy;
    }
    return r;
}

}  // namespace earscan
