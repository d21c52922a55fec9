#include <doctest.h>

#include "earscan/error.hpp"
#include "earscan/mesh_bvh.hpp"
#include "earscan/spatial_index.hpp"
#include "fixtures.hpp"

using namespace earscan;

TEST_SUITE("spatial") {

TEST_CASE("nearest: hand examples") {
    const SpatialIndex idx(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(10, 0, 0)});
    const auto n = idx.nearest(Vec3(1, 0, 0));
    CHECK(n.id == 0);
    CHECK(n.distance == 1.0);
    CHECK(idx.nearest(Vec3(10, 0, 0)).distance == 0.0);
    CHECK(idx.nearest(Vec3(5, 0, 0)).id == 0);  // tie -> lowest index
    CHECK_THROWS_AS(SpatialIndex(std::vector<Vec3>{}).nearest(Vec3::Zero()), Error);
}

TEST_CASE("nearest agrees with exhaustive search") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = fixtures::random_points(1 + rng() % 500, rng);
        const SpatialIndex idx(pts);
        for (int q = 0; q < 200; ++q) {
            const Vec3 p = q % 5 == 0 ? pts[rng() % pts.size()] : fixtures::random_points(1, rng, 12)[0];
            const auto got = idx.nearest(p);
            const auto want = fixtures::brute_nearest(pts, p);
            REQUIRE(got.id == want.first);
            REQUIRE(got.squared == want.second);
            REQUIRE(got.distance == std::sqrt(want.second));
        }
    }
}

TEST_CASE("nearest ties on duplicated and lattice points") {
    std::vector<Vec3> pts;
    for (int r = 0; r < 3; ++r)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) pts.emplace_back(i, j, 0);
    const SpatialIndex idx(pts);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const Vec3 q(i + 0.5, j + 0.5, 0);
            CHECK(idx.nearest(q).id == fixtures::brute_nearest(pts, q).first);
        }
}

TEST_CASE("within: closed ball matches exhaustive search") {
    std::mt19937_64 rng(5);
    const auto pts = fixtures::random_points(400, rng);
    const SpatialIndex idx(pts);
    for (int q = 0; q < 100; ++q) {
        const Vec3 c = pts[rng() % pts.size()];
        const double r = 0.5 + (rng() % 100) / 20.0;
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (fixtures::sq(pts[i], c) <= r * r) want.push_back(i);
        CHECK(idx.within(c, r) == want);
    }
    const SpatialIndex line(std::vector<Vec3>{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)});
    CHECK(line.within(Vec3::Zero(), 2.0) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("closest point on the unit triangle") {
    const MeshBVH bvh(fixtures::unit_triangle());
    auto c = bvh.closest_point(Vec3(0.25, 0.25, 1));
    CHECK(c.distance == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((c.point - Vec3(0.25, 0.25, 0)).norm() < 1e-15);
    c = bvh.closest_point(Vec3(2, 0, 0));
    CHECK((c.point - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK(c.distance == doctest::Approx(1.0));
    CHECK(bvh.closest_point(Vec3(0.2, 0.3, 0)).distance == 0.0);
    CHECK_THROWS_AS(MeshBVH(TriangleMesh{}).closest_point(Vec3::Zero()), Error);
}

TEST_CASE("ray hits on the unit triangle") {
    const MeshBVH bvh(fixtures::unit_triangle());
    const auto h = bvh.first_hit(Vec3(0.25, 0.25, -1), Vec3(0, 0, 1));
    REQUIRE(h);
    CHECK(h->t == doctest::Approx(1.0));
    CHECK(h->face == 0);
    CHECK_FALSE(bvh.first_hit(Vec3(0.25, 0.25, -1), Vec3(0, 0, -1)));
    CHECK_THROWS_AS(bvh.first_hit(Vec3::Zero(), Vec3(0, 0, 2)), Error);
}

TEST_CASE("ray from a closed surface along its outward normal escapes") {
    const auto box = fixtures::cube(10.0, 3);
    const MeshBVH bvh(box);
    for (std::size_t f = 0; f < box.faces.size(); ++f) {
        const auto& F = box.faces[f];
        const Vec3 c = (box.vertices[F[0]] + box.vertices[F[1]] + box.vertices[F[2]]) / 3.0;
        CHECK_FALSE(bvh.first_hit(c, bvh.face_normal(f)));
        CHECK(bvh.first_hit(c, -bvh.face_normal(f)));
    }
}

TEST_CASE("closest point and rays agree with exhaustive search") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mesh = fixtures::random_soup(1 + rng() % 200, rng);
        const MeshBVH bvh(mesh);
        for (int q = 0; q < 100; ++q) {
            const Vec3 p = fixtures::random_points(1, rng, 14)[0];
            const auto got = bvh.closest_point(p);
            const auto want = fixtures::brute_closest(mesh, p);
            REQUIRE(got.face == want.face);
            REQUIRE(got.squared == want.squared);
            REQUIRE(got.point == want.point);

            const Vec3 d = fixtures::random_unit(rng);
            const auto hit = bvh.first_hit(p, d);
            const auto bh = fixtures::brute_hit(mesh, p, d, bvh.epsilon());
            REQUIRE(hit.has_value() == bh.has_value());
            if (hit) {
                REQUIRE(hit->t == bh->first);
                REQUIRE(hit->face == bh->second);
            }
            REQUIRE(bvh.occluded(p, d) == bh.has_value());
        }
    }
}

TEST_CASE("closest point ties go to the lowest face") {
    // Two faces sharing an edge; a query above the edge is equidistant.
    TriangleMesh m;
    m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    m.faces = {{1, 3, 2}, {0, 1, 2}};
    const MeshBVH bvh(m);
    CHECK(bvh.closest_point(Vec3(0.5, 0.5, 1)).face == 0);
}

TEST_CASE("epsilon is 1e-4 of the diagonal") {
    const MeshBVH bvh(fixtures::cube(10.0, 1));
    CHECK(bvh.epsilon() == doctest::Approx(1e-4 * std::sqrt(300.0)));
}

}  // TEST_SUITE
