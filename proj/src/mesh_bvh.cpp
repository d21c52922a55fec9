#include "earscan/mesh_bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "earscan/error.hpp"
#include "earscan/spatial_index.hpp"

namespace earscan {
namespace {

constexpr std::uint32_t kMaxLeaf = 4;
constexpr int kBins = 12;
// Beyond this depth splits fall back to the median, bounding traversal stacks.
constexpr int kMaxSahDepth = 48;

double box_area(const Vec3& lo, const Vec3& hi) {
    const Vec3 e = (hi - lo).cwiseMax(0.0);
    return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
}

double box_squared_distance(const Vec3& lo, const Vec3& hi, const Vec3& q) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double d = std::max({lo[k] - q[k], 0.0, q[k] - hi[k]});
        d2 += d * d;
    }
    return d2;
}

// Entry parameter of the ray into the box, or +inf on a miss within [tmin, tmax].
double ray_box(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& inv, const Vec3& dir,
               double tmin, double tmax) {
    for (int k = 0; k < 3; ++k) {
        if (dir[k] == 0.0) {
            if (o[k] < lo[k] || o[k] > hi[k]) return std::numeric_limits<double>::infinity();
            continue;
        }
        double t0 = (lo[k] - o[k]) * inv[k];
        double t1 = (hi[k] - o[k]) * inv[k];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::numeric_limits<double>::infinity();
    }
    return tmin;
}

}  // namespace

Vec3 closest_point_on_triangle(const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = q - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = q - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

    const Vec3 cp = q - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    // Face interior: drop the offset along the face normal.
    const Vec3 n = ab.cross(ac);
    return q - n * (ap.dot(n) / n.dot(n));
}

std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c) {
    constexpr double kTol = 1e-10;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (det == 0.0) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv;
    if (u < -kTol || u > 1.0 + kTol) return std::nullopt;
    const Vec3 qv = s.cross(e1);
    const double v = dir.dot(qv) * inv;
    if (v < -kTol || u + v > 1.0 + kTol) return std::nullopt;
    return e2.dot(qv) * inv;
}

MeshBVH::MeshBVH(const TriangleMesh& mesh) : vertices_(mesh.vertices), faces_(mesh.faces) {
    validate(mesh);
    face_normals_.reserve(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) face_normals_.push_back(mesh.face_normal(f).normalized());
    if (faces_.empty()) return;

    Vec3 lo = vertices_[faces_[0][0]], hi = lo;
    for (const auto& f : faces_)
        for (auto v : f) {
            lo = lo.cwiseMin(vertices_[v]);
            hi = hi.cwiseMax(vertices_[v]);
        }
    const double diag = (hi - lo).norm();
    epsilon_ = 1e-4 * diag;
    const double pad = 1e-9 * diag + 1e-300;

    std::vector<Vec3> centroids(faces_.size());
    std::vector<Box> boxes(faces_.size());
    order_.resize(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Vec3& a = vertices_[faces_[f][0]];
        const Vec3& b = vertices_[faces_[f][1]];
        const Vec3& c = vertices_[faces_[f][2]];
        boxes[f].lo = a.cwiseMin(b).cwiseMin(c).array() - pad;
        boxes[f].hi = a.cwiseMax(b).cwiseMax(c).array() + pad;
        centroids[f] = (a + b + c) / 3.0;
        order_[f] = static_cast<std::uint32_t>(f);
    }
    nodes_.reserve(2 * faces_.size());
    nodes_.push_back(Node{});
    build(0, 0, static_cast<std::uint32_t>(faces_.size()), centroids, boxes, 0);
}

void MeshBVH::build(std::uint32_t node, std::uint32_t begin, std::uint32_t end,
                    const std::vector<Vec3>& centroids, const std::vector<Box>& boxes, int depth) {
    Vec3 lo = boxes[order_[begin]].lo, hi = boxes[order_[begin]].hi;
    Vec3 clo = centroids[order_[begin]], chi = clo;
    for (auto i = begin; i < end; ++i) {
        const auto f = order_[i];
        lo = lo.cwiseMin(boxes[f].lo);
        hi = hi.cwiseMax(boxes[f].hi);
        clo = clo.cwiseMin(centroids[f]);
        chi = chi.cwiseMax(centroids[f]);
    }
    nodes_[node].lo = lo;
    nodes_[node].hi = hi;
    const auto count = end - begin;
    auto make_leaf = [&] {
        nodes_[node].first = begin;
        nodes_[node].count = count;
    };
    if (count <= kMaxLeaf) return make_leaf();

    int axis = 0;
    const Vec3 extent = chi - clo;
    extent.maxCoeff(&axis);
    if (extent[axis] <= 0.0) return make_leaf();

    // Binned surface-area heuristic along the widest centroid axis.
    struct Bin {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
        std::uint32_t n = 0;
    };
    std::array<Bin, kBins> bins;
    const double scale = kBins / extent[axis];
    auto bin_of = [&](std::uint32_t f) {
        return std::min(kBins - 1, static_cast<int>((centroids[f][axis] - clo[axis]) * scale));
    };
    for (auto i = begin; i < end; ++i) {
        const auto f = order_[i];
        auto& b = bins[bin_of(f)];
        b.lo = b.lo.cwiseMin(boxes[f].lo);
        b.hi = b.hi.cwiseMax(boxes[f].hi);
        ++b.n;
    }
    std::array<double, kBins - 1> cost{};
    Vec3 alo = bins[0].lo, ahi = bins[0].hi;
    std::uint32_t an = 0;
    for (int s = 0; s < kBins - 1; ++s) {
        alo = alo.cwiseMin(bins[s].lo);
        ahi = ahi.cwiseMax(bins[s].hi);
        an += bins[s].n;
        cost[s] = an == 0 ? std::numeric_limits<double>::infinity() : an * box_area(alo, ahi);
    }
    Vec3 blo = bins[kBins - 1].lo, bhi = bins[kBins - 1].hi;
    std::uint32_t bn = 0;
    for (int s = kBins - 1; s > 0; --s) {
        blo = blo.cwiseMin(bins[s].lo);
        bhi = bhi.cwiseMax(bins[s].hi);
        bn += bins[s].n;
        cost[s - 1] = bn == 0 ? std::numeric_limits<double>::infinity() : cost[s - 1] + bn * box_area(blo, bhi);
    }
    int best = 0;
    for (int s = 1; s < kBins - 1; ++s)
        if (cost[s] < cost[best]) best = s;

    std::uint32_t mid;
    if (std::isfinite(cost[best]) && depth < kMaxSahDepth) {
        auto it = std::stable_partition(order_.begin() + begin, order_.begin() + end,
                                        [&](std::uint32_t f) { return bin_of(f) <= best; });
        mid = static_cast<std::uint32_t>(it - order_.begin());
    } else {
        mid = begin;
    }
    if (mid == begin || mid == end) {
        mid = begin + count / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double ca = centroids[a][axis], cb = centroids[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
    }
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{});
    nodes_.push_back(Node{});
    nodes_[node].first = left;
    nodes_[node].count = 0;
    build(left, begin, mid, centroids, boxes, depth + 1);
    build(left + 1, mid, end, centroids, boxes, depth + 1);
}

ClosestPoint MeshBVH::closest_point(const Vec3& q) const {
    if (faces_.empty()) throw Error(ErrorKind::EmptyInput, "closest point query on empty mesh");
    ClosestPoint best;
    best.squared = std::numeric_limits<double>::infinity();
    best.face = std::numeric_limits<std::size_t>::max();

    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        if (box_squared_distance(n.lo, n.hi, q) > best.squared) continue;
        if (n.count > 0) {
            for (auto i = n.first; i < n.first + n.count; ++i) {
                const auto f = order_[i];
                const Vec3 p = closest_point_on_triangle(q, vertices_[faces_[f][0]],
                                                         vertices_[faces_[f][1]], vertices_[faces_[f][2]]);
                const double d2 = squared_distance(q, p);
                if (d2 < best.squared || (d2 == best.squared && f < best.face)) {
                    best.squared = d2;
                    best.face = f;
                    best.point = p;
                }
            }
            continue;
        }
        const auto l = n.first, r = n.first + 1;
        const double dl = box_squared_distance(nodes_[l].lo, nodes_[l].hi, q);
        const double dr = box_squared_distance(nodes_[r].lo, nodes_[r].hi, q);
        // Push the farther child first so the nearer one is processed next.
        if (dl <= dr) {
            stack[top++] = r;
            stack[top++] = l;
        } else {
            stack[top++] = l;
            stack[top++] = r;
        }
    }
    best.distance = std::sqrt(best.squared);
    return best;
}

void MeshBVH::check_direction(const Vec3& dir) const {
    if (std::abs(dir.norm() - 1.0) > 1e-6) throw Error(ErrorKind::Domain, "ray direction must be unit length");
}

std::optional<RayHit> MeshBVH::first_hit(const Vec3& origin, const Vec3& dir) const {
    check_direction(dir);
    if (faces_.empty()) return std::nullopt;
    const Vec3 inv = dir.cwiseInverse();
    double best_t = std::numeric_limits<double>::infinity();
    std::size_t best_face = std::numeric_limits<std::size_t>::max();

    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        if (!std::isfinite(ray_box(n.lo, n.hi, origin, inv, dir, epsilon_, best_t))) continue;
        if (n.count > 0) {
            for (auto i = n.first; i < n.first + n.count; ++i) {
                const auto f = order_[i];
                const auto t = intersect_triangle(origin, dir, vertices_[faces_[f][0]],
                                                  vertices_[faces_[f][1]], vertices_[faces_[f][2]]);
                if (!t || *t < epsilon_) continue;
                if (*t < best_t || (*t == best_t && f < best_face)) {
                    best_t = *t;
                    best_face = f;
                }
            }
            continue;
        }
        const auto l = n.first, r = n.first + 1;
        const double tl = ray_box(nodes_[l].lo, nodes_[l].hi, origin, inv, dir, epsilon_, best_t);
        const double tr = ray_box(nodes_[r].lo, nodes_[r].hi, origin, inv, dir, epsilon_, best_t);
        if (tl <= tr) {
            if (std::isfinite(tr)) stack[top++] = r;
            if (std::isfinite(tl)) stack[top++] = l;
        } else {
            if (std::isfinite(tl)) stack[top++] = l;
            if (std::isfinite(tr)) stack[top++] = r;
        }
    }
    if (!std::isfinite(best_t)) return std::nullopt;
    return RayHit{best_t, best_face};
}

bool MeshBVH::occluded(const Vec3& origin, const Vec3& dir) const {
    if (faces_.empty()) return false;
    const Vec3 inv = dir.cwiseInverse();
    const double tmax = std::numeric_limits<double>::infinity();
    std::uint32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        if (!std::isfinite(ray_box(n.lo, n.hi, origin, inv, dir, epsilon_, tmax))) continue;
        if (n.count > 0) {
            for (auto i = n.first; i < n.first + n.count; ++i) {
                const auto f = order_[i];
                const auto t = intersect_triangle(origin, dir, vertices_[faces_[f][0]],
                                                  vertices_[faces_[f][1]], vertices_[faces_[f][2]]);
                if (t && *t >= epsilon_) return true;
            }
            continue;
        }
        stack[top++] = n.first + 1;
        stack[top++] = n.first;
    }
    return false;
}

}  // namespace earscan
