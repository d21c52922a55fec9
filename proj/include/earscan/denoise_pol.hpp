#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "earscan/types.hpp"

namespace earscan {

struct PolConfig {
    double radius = 3.0;
    int order = 2;
    int min_neighbors = 6;
    int iterations = 1;
};

void validate(const PolConfig& cfg);

/// Local frame: w runs along `normal`, (u, v) span the tangent plane.
struct LocalFrame {
    Vec3 origin = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();

    Vec3 to_local(const Vec3& p) const;
    Vec3 to_world(const Vec3& local) const;
};

/// Deterministic tangent pair completing `normal` to a right-handed frame.
LocalFrame make_frame(const Vec3& origin, const Vec3& normal);

/// Centroid and smallest-eigenvalue eigenvector of the neighbourhood covariance.
/// The normal points toward `query` when it is off the plane; otherwise the
/// sign makes the z component positive (then y, then x).
LocalFrame fit_local_plane(std::span<const Vec3> points, const std::optional<Vec3>& query = std::nullopt);

/// Coefficients of w = c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2.
using QuadraticCoeffs = std::array<double, 6>;

/// Least-squares fit of w over (u, v).
QuadraticCoeffs fit_quadratic(std::span<const Vec3> points, const LocalFrame& frame);

double evaluate_quadratic(const QuadraticCoeffs& c, double u, double v);

/// Keeps the query's (u, v) and sets w to the polynomial value.
Vec3 project_point(const Vec3& q, const LocalFrame& frame, const QuadraticCoeffs& c);

struct DenoiseResult {
    PointCloud cloud;
    /// True where the last iteration left the point unchanged (too few
    /// neighbours or a degenerate fit).
    std::vector<bool> pass_through;
};

/// Moving-least-squares polynomial projection. Each iteration projects every
/// point against the previous iteration's positions.
DenoiseResult denoise_pol(const PointCloud& cloud, const PolConfig& cfg);

}  // namespace earscan
