#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "salforge/geometry.hpp"
#include "salforge/rng.hpp"

using namespace salforge;
using geom::PointCloud;
using geom::TriangleSoup;
using geom::Vec3;

namespace {

TriangleSoup unit_right_triangle() {
    TriangleSoup s;
    s.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    s.triangles = {{0, 1, 2}};
    return s;
}

TriangleSoup two_triangle_soup() {
    TriangleSoup s;
    s.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {3, 0, 1}, {4, 0, 1}, {3, 2, 1}};
    s.triangles = {{0, 1, 2}, {3, 4, 5}};
    return s;
}

PointCloud random_cloud(std::int64_t n, std::uint64_t seed, double lo = -2, double hi = 2) {
    Rng rng = Rng::substream(seed, "cloud");
    PointCloud c(static_cast<std::size_t>(n));
    for (auto& p : c) p = {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
    return c;
}

}  // namespace

TEST_CASE("closest point on triangle covers face, edge and vertex regions") {
    const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};

    auto face = geom::point_triangle_distance({0.25, 0.25, 1.0}, a, b, c);
    CHECK(face.dist == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(face.point == Vec3{0.25, 0.25, 0});

    auto vert = geom::point_triangle_distance({2, 0, 0}, a, b, c);
    CHECK(vert.dist == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(vert.point == Vec3{1, 0, 0});

    auto edge = geom::point_triangle_distance({0.5, -1, 0}, a, b, c);
    CHECK(edge.dist == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(edge.point == Vec3{0.5, 0, 0});

    auto hyp = geom::point_triangle_distance({1, 1, 0}, a, b, c);
    CHECK(hyp.dist == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
    CHECK(hyp.point.x == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(hyp.point.y == doctest::Approx(0.5).epsilon(1e-14));

    // barycentric reconstruction of an interior point rounds at the last ulp
    auto inside = geom::point_triangle_distance({0.2, 0.2, 0}, a, b, c);
    CHECK(inside.dist < 1e-15);
}

TEST_CASE("degenerate triangles fall back to their edges") {
    // collinear
    auto d = geom::point_triangle_distance({1.5, 1, 0}, {0, 0, 0}, {1, 0, 0}, {2, 0, 0});
    CHECK(d.dist == doctest::Approx(1.0).epsilon(1e-14));
    // fully collapsed
    auto p = geom::point_triangle_distance({1, 1, 3}, {1, 1, 1}, {1, 1, 1}, {1, 1, 1});
    CHECK(p.dist == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p.point == Vec3{1, 1, 1});
}

TEST_CASE("segment projection clamps to the endpoints") {
    const Vec3 a{0, 0, 0}, b{2, 0, 0};
    CHECK(geom::closest_point_on_segment({-1, 1, 0}, a, b) == a);
    CHECK(geom::closest_point_on_segment({3, 1, 0}, a, b) == b);
    CHECK(geom::closest_point_on_segment({1, 1, 0}, a, b) == Vec3{1, 0, 0});
    // zero-length segment
    CHECK(geom::closest_point_on_segment({5, 0, 0}, a, a) == a);
}

TEST_CASE("triangle area") {
    CHECK(geom::triangle_area({0, 0, 0}, {1, 0, 0}, {0, 1, 0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(geom::triangle_area({0, 0, 0}, {1, 0, 0}, {2, 0, 0}) == 0.0);
}

TEST_CASE("normalization recenters, rescales and round-trips") {
    TriangleSoup soup = geom::make_torus(0.9, 0.3, 24, 12);
    for (auto& v : soup.vertices) v = v * 3.7 + Vec3{10, -4, 2};
    const TriangleSoup original = soup;

    const auto t = geom::normalize(soup);
    // bounding-box center at the origin, bounding-sphere radius exactly 1
    geom::Aabb box;
    double max_r = 0;
    for (const auto& v : soup.vertices) {
        box.grow(v);
        max_r = std::max(max_r, v.norm());
    }
    const Vec3 center = (box.lo + box.hi) / 2;
    CHECK(std::abs(center.x) < 1e-12);
    CHECK(std::abs(center.y) < 1e-12);
    CHECK(std::abs(center.z) < 1e-12);
    CHECK(max_r == doctest::Approx(1.0).epsilon(1e-12));

    for (std::size_t i = 0; i < soup.vertices.size(); ++i) {
        const Vec3 back = geom::denormalize(soup.vertices[i], t);
        CHECK(back.x == doctest::Approx(original.vertices[i].x).epsilon(1e-12));
        CHECK(back.y == doctest::Approx(original.vertices[i].y).epsilon(1e-12));
        CHECK(back.z == doctest::Approx(original.vertices[i].z).epsilon(1e-12));
    }

    TriangleSoup empty;
    CHECK_THROWS_AS(geom::normalize(empty), ContractError);
    TriangleSoup flat;
    flat.vertices = {{1, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_AS(geom::normalize(flat), ContractError);

    PointCloud cloud = random_cloud(50, 2);
    const auto tc = geom::normalize(cloud);
    double r = 0;
    for (const auto& p : cloud) r = std::max(r, p.norm());
    CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tc.scale > 0);
}

TEST_CASE("accelerated distances equal the brute-force oracle") {
    const TriangleSoup meshes[] = {geom::make_icosphere(3), geom::make_torus(0.7, 0.25, 48, 24),
                                   two_triangle_soup()};
    for (const auto& soup : meshes) {
        CAPTURE(soup.triangles.size());
        geom::TriangleBvh bvh(soup);
        Rng rng = Rng::substream(17, "queries", soup.triangles.size());
        for (int i = 0; i < 1000; ++i) {
            const Vec3 p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
            const auto fast = bvh.unsigned_distance(p);
            const auto slow = geom::unsigned_distance_brute(soup, p);
            REQUIRE(std::abs(fast.dist - slow.dist) <= 1e-6);
            REQUIRE(fast.triangle == slow.triangle);
            // reported witness point is consistent with the distance
            REQUIRE((p - fast.point).norm() == doctest::Approx(fast.dist).epsilon(1e-12));
        }
    }
}

TEST_CASE("exact distance ties resolve to the lowest triangle index") {
    TriangleSoup soup = unit_right_triangle();
    // duplicate the same triangle; every query ties
    soup.triangles.push_back(soup.triangles[0]);
    geom::TriangleBvh bvh(soup);
    Rng rng = Rng::substream(3, "tie-queries");
    for (int i = 0; i < 50; ++i) {
        const Vec3 p{rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 1)};
        CHECK(bvh.unsigned_distance(p).triangle == 0);
        CHECK(geom::unsigned_distance_brute(soup, p).triangle == 0);
    }
}

TEST_CASE("point lookups equal a linear scan") {
    const PointCloud cloud = random_cloud(500, 8);
    geom::PointBvh bvh(cloud);
    Rng rng = Rng::substream(9, "pq");
    for (int i = 0; i < 200; ++i) {
        const Vec3 p{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto [d, idx] = bvh.nearest(p);
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        for (std::size_t j = 0; j < cloud.size(); ++j) {
            const double dj = (cloud[j] - p).norm();
            if (dj < best) {
                best = dj;
                best_i = static_cast<int>(j);
            }
        }
        CHECK(idx == best_i);
        CHECK(d == doctest::Approx(best).epsilon(1e-14));
    }

    // duplicated point: lowest index wins on the exact tie
    PointCloud dup = {{1, 1, 1}, {0, 0, 0}, {1, 1, 1}};
    CHECK(geom::PointBvh(dup).nearest({1, 1, 1}).second == 0);
}

TEST_CASE("chamfer distance matches hand values and the quadratic oracle") {
    CHECK(geom::chamfer({{0, 0, 0}}, {{1, 0, 0}}) == doctest::Approx(1.0).epsilon(1e-15));
    // asymmetric sides average: 1/2 * (mean(0, 1) + 0)
    CHECK(geom::chamfer({{0, 0, 0}, {1, 0, 0}}, {{0, 0, 0}}) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(geom::chamfer({{1, 2, 3}}, {{1, 2, 3}}) == 0.0);

    for (auto [na, nb] : {std::pair<int, int>{1, 1}, {37, 211}, {500, 499}}) {
        const PointCloud a = random_cloud(na, 100 + static_cast<std::uint64_t>(na));
        const PointCloud b = random_cloud(nb, 200 + static_cast<std::uint64_t>(nb));
        CHECK(geom::chamfer(a, b) == geom::chamfer_brute(a, b));
    }

    CHECK_THROWS_AS(geom::chamfer({}, {{1, 1, 1}}), ContractError);
    CHECK_THROWS_AS(geom::chamfer_brute({{1, 1, 1}}, {}), ContractError);
}

TEST_CASE("surface samples land on the surface, weighted by area") {
    // areas 0.5 and 1.5: expect a 1:3 split
    TriangleSoup soup;
    soup.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {8, 0, 0}, {5, 1, 0}};
    soup.triangles = {{0, 1, 2}, {3, 4, 5}};
    Rng rng = Rng::substream(5, "samples");
    const auto pts = geom::sample_surface(soup, 10000, rng);
    REQUIRE(pts.size() == 10000);
    int on_small = 0;
    for (const auto& p : pts) {
        CHECK(geom::unsigned_distance_brute(soup, p).dist < 1e-12);
        if (p.x < 2) ++on_small;
    }
    // binomial(10000, 0.25): sigma ~ 43, allow 5 sigma
    CHECK(on_small > 2500 - 220);
    CHECK(on_small < 2500 + 220);

    // degenerate triangles are never selected
    TriangleSoup degen = unit_right_triangle();
    degen.vertices.push_back({9, 9, 9});
    degen.triangles.push_back({3, 3, 3});
    Rng rng2 = Rng::substream(6, "samples");
    for (const auto& p : geom::sample_surface(degen, 500, rng2))
        CHECK((p - Vec3{9, 9, 9}).norm() > 1.0);

    TriangleSoup all_degen;
    all_degen.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    all_degen.triangles = {{0, 1, 2}};
    Rng rng3 = Rng::substream(7, "samples");
    CHECK_THROWS_AS(geom::sample_surface(all_degen, 10, rng3), ContractError);
}

TEST_CASE("identical sampling streams make self-chamfer exactly zero") {
    const TriangleSoup soup = geom::make_icosphere(2);
    Rng ra = Rng::substream(11, "eval-sample", 77);
    Rng rb = Rng::substream(11, "eval-sample", 77);
    const auto pa = geom::sample_surface(soup, 3000, ra);
    const auto pb = geom::sample_surface(soup, 3000, rb);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) REQUIRE(pa[i] == pb[i]);
    CHECK(geom::chamfer(pa, pb) == 0.0);
}

TEST_CASE("icosphere subdivision counts and radius") {
    const int verts[] = {12, 42, 162};
    const int tris[] = {20, 80, 320};
    for (int s = 0; s <= 2; ++s) {
        const TriangleSoup ico = geom::make_icosphere(s);
        CHECK(static_cast<int>(ico.vertices.size()) == verts[s]);
        CHECK(static_cast<int>(ico.triangles.size()) == tris[s]);
        ico.validate();
        for (const auto& v : ico.vertices) CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("torus tessellation counts and tube radius") {
    const TriangleSoup t = geom::make_torus(0.7, 0.25, 24, 12);
    CHECK(t.vertices.size() == 24u * 12u);
    CHECK(t.triangles.size() == 2u * 24u * 12u);
    t.validate();
    for (const auto& v : t.vertices) {
        const double ring = std::sqrt(v.x * v.x + v.y * v.y) - 0.7;
        CHECK(std::sqrt(ring * ring + v.z * v.z) == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("soup validation rejects bad indices and non-finite coordinates") {
    TriangleSoup bad = unit_right_triangle();
    bad.triangles.push_back({0, 1, 3});
    CHECK_THROWS_AS(bad.validate(), ContractError);

    TriangleSoup nan_soup = unit_right_triangle();
    nan_soup.vertices[0].x = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(nan_soup.validate(), ContractError);

    TriangleSoup neg = unit_right_triangle();
    neg.triangles.push_back({-1, 0, 1});
    CHECK_THROWS_AS(neg.validate(), ContractError);
}

TEST_CASE("empty structures are rejected up front") {
    TriangleSoup empty;
    CHECK_THROWS_AS(geom::TriangleBvh{empty}, ContractError);
    CHECK_THROWS_AS(geom::unsigned_distance_brute(empty, {0, 0, 0}), ContractError);
    CHECK_THROWS_AS(geom::PointBvh{PointCloud{}}, ContractError);
}

TEST_CASE("box distance is zero inside and exact outside") {
    geom::Aabb box;
    box.grow({0, 0, 0});
    box.grow({1, 1, 1});
    CHECK(box.dist2({0.5, 0.5, 0.5}) == 0.0);
    CHECK(box.dist2({2, 0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(box.dist2({2, 2, 0.5}) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(box.surface_area() == doctest::Approx(6.0).epsilon(1e-15));
}
