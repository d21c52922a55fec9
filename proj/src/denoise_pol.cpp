#include "earscan/denoise_pol.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "earscan/error.hpp"
#include "earscan/parallel.hpp"
#include "earscan/spatial_index.hpp"

namespace earscan {

void validate(const PolConfig& cfg) {
    if (!(cfg.radius > 0.0)) throw Error(ErrorKind::Domain, "radius must be positive");
    if (cfg.order != 2) throw Error(ErrorKind::Domain, "only second-order polynomials are supported");
    if (cfg.min_neighbors < 6) throw Error(ErrorKind::Domain, "min_neighbors must be at least 6");
    if (cfg.iterations < 1) throw Error(ErrorKind::Domain, "iterations must be at least 1");
}

Vec3 LocalFrame::to_local(const Vec3& p) const {
    const Vec3 d = p - origin;
    return Vec3(d.dot(u), d.dot(v), d.dot(normal));
}

Vec3 LocalFrame::to_world(const Vec3& local) const {
    return origin + local.x() * u + local.y() * v + local.z() * normal;
}

LocalFrame make_frame(const Vec3& origin, const Vec3& normal) {
    LocalFrame f;
    f.origin = origin;
    f.normal = normal;
    // Seed the tangent with the axis least aligned with the normal.
    int axis = 0;
    normal.cwiseAbs().minCoeff(&axis);
    Vec3 seed = Vec3::Zero();
    seed[axis] = 1.0;
    f.u = (seed - normal * normal.dot(seed)).normalized();
    f.v = normal.cross(f.u);
    return f;
}

LocalFrame fit_local_plane(std::span<const Vec3> points, const std::optional<Vec3>& query) {
    if (points.size() < 3) throw Error(ErrorKind::DegenerateFit, "plane fit needs at least three points");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::DegenerateFit, "eigen decomposition failed");
    const auto& ev = eig.eigenvalues();  // ascending
    if (!(ev[1] > 1e-12 * ev[2]) || ev[2] <= 0.0)
        throw Error(ErrorKind::DegenerateFit, "neighbourhood is collinear or coincident");
    Vec3 n = eig.eigenvectors().col(0).normalized();

    double side = query ? n.dot(*query - centroid) : 0.0;
    if (side == 0.0) side = n.z() != 0.0 ? n.z() : (n.y() != 0.0 ? n.y() : n.x());
    if (side < 0.0) n = -n;
    return make_frame(centroid, n);
}

QuadraticCoeffs fit_quadratic(std::span<const Vec3> points, const LocalFrame& frame) {
    if (points.size() < 6) throw Error(ErrorKind::DegenerateFit, "quadratic fit needs at least six points");
    Eigen::MatrixXd a(points.size(), 6);
    Eigen::VectorXd w(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 l = frame.to_local(points[i]);
        const double u = l.x(), v = l.y();
        a.row(static_cast<Eigen::Index>(i)) << 1.0, u, v, u * u, u * v, v * v;
        w[static_cast<Eigen::Index>(i)] = l.z();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < 6) throw Error(ErrorKind::DegenerateFit, "quadratic fit is rank deficient");
    const Eigen::VectorXd c = qr.solve(w);
    return {c[0], c[1], c[2], c[3], c[4], c[5]};
}

double evaluate_quadratic(const QuadraticCoeffs& c, double u, double v) {
    return c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v;
}

Vec3 project_point(const Vec3& q, const LocalFrame& frame, const QuadraticCoeffs& c) {
    const Vec3 l = frame.to_local(q);
    return frame.to_world(Vec3(l.x(), l.y(), evaluate_quadratic(c, l.x(), l.y())));
}

DenoiseResult denoise_pol(const PointCloud& cloud, const PolConfig& cfg) {
    validate(cfg);
    DenoiseResult result;
    result.cloud = cloud;
    result.pass_through.assign(cloud.size(), false);
    if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "cannot denoise an empty cloud");

    std::vector<Vec3> current = cloud.positions;
    std::vector<char> flags(cloud.size(), 0);
    for (int it = 0; it < cfg.iterations; ++it) {
        const SpatialIndex index(current);
        std::vector<Vec3> next(current.size());
        parallel_for(current.size(), [&](std::size_t begin, std::size_t end) {
            std::vector<Vec3> hood;
            for (std::size_t i = begin; i < end; ++i) {
                const Vec3& q = current[i];
                const auto ids = index.within(q, cfg.radius);
                next[i] = q;
                flags[i] = 1;
                if (ids.size() < static_cast<std::size_t>(cfg.min_neighbors)) continue;
                hood.clear();
                for (auto id : ids) hood.push_back(current[id]);
                try {
                    const auto frame = fit_local_plane(hood, q);
                    const auto coeffs = fit_quadratic(hood, frame);
                    next[i] = project_point(q, frame, coeffs);
                    flags[i] = 0;
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::DegenerateFit) throw;
                }
            }
        });
        current = std::move(next);
    }
    result.cloud.positions = std::move(current);
    for (std::size_t i = 0; i < flags.size(); ++i) result.pass_through[i] = flags[i] != 0;
    return result;
}

}  // namespace earscan
