#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>
#include <vector>

#include "salforge/errors.hpp"
#include "salforge/geometry.hpp"
#include "salforge/grid.hpp"
#include "salforge/marching_cubes.hpp"
#include "salforge/mesh_io.hpp"
#include "salforge/nn.hpp"
#include "salforge/reconstruct.hpp"
#include "salforge/sample_set.hpp"
#include "test_util.hpp"

using namespace salforge;
using namespace salforge::recon;
using doctest::Approx;
using geom::TriangleSoup;
using geom::Vec3;
using testutil::TempDir;

namespace {

FieldFn analytic(double (*f)(const Vec3&)) {
    return [f](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
    };
}

double linear_field(const Vec3& p) { return 2.0 * p.x - 3.0 * p.y + p.z + 0.25; }
double sphere_half(const Vec3& p) { return p.norm() - 0.5; }
double plane_z(const Vec3& p) { return p.z - 0.1; }

// decoder-only checkpoint whose zero set starts near the unit sphere
train::Checkpoint sphere_checkpoint(std::uint64_t seed) {
    train::Checkpoint ckpt;
    ckpt.params = nn::init_params<float>("lightsal", "geometric-sphere", seed);
    ckpt.adam.init_like(ckpt.params);
    ckpt.meta.config.mode = "decoder-only";
    ckpt.meta.config.init = "geometric-sphere";
    ckpt.meta.config.seed = seed;
    return ckpt;
}

}  // namespace

TEST_CASE("evaluate_grid reproduces an analytic field exactly, x-fastest") {
    const int res = 7;
    const ScalarGrid g = evaluate_grid(analytic(linear_field), res, 1.1, 60);  // forces slabs
    REQUIRE(g.res == res);
    REQUIRE(g.values.size() == static_cast<std::size_t>(res * res * res));
    CHECK(g.cell() == Approx(2.2 / 6).epsilon(1e-15));
    for (int k = 0; k < res; ++k)
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i)
                CHECK(g.at(i, j, k) == linear_field(g.point(i, j, k)));
    // res 2 is the smallest legal lattice
    const ScalarGrid g2 = evaluate_grid(analytic(linear_field), 2, 0.5);
    CHECK(g2.values.size() == 8);
    CHECK(g2.point(1, 1, 1) == Vec3{0.5, 0.5, 0.5});
}

TEST_CASE("slab partitioning never changes a lattice value") {
    const int res = 9;
    const std::size_t plane = static_cast<std::size_t>(res) * res;
    const ScalarGrid whole = evaluate_grid(analytic(sphere_half), res, 1.1, res * plane);
    const ScalarGrid one = evaluate_grid(analytic(sphere_half), res, 1.1, 1);  // 1 plane/slab
    const ScalarGrid two = evaluate_grid(analytic(sphere_half), res, 1.1, 2 * plane);
    CHECK(whole.values == one.values);
    CHECK(whole.values == two.values);
}

TEST_CASE("a network field is slab-independent bit for bit") {
    train::Checkpoint ckpt = sphere_checkpoint(5);
    std::vector<float> z(nn::kLatentDim, 0.0f);
    const FieldFn f = decoder_field(ckpt.params, z);
    const int res = 15;
    const std::size_t plane = static_cast<std::size_t>(res) * res;
    const ScalarGrid whole = evaluate_grid(f, res, 1.1, res * plane);
    const ScalarGrid planes = evaluate_grid(f, res, 1.1, plane);
    const ScalarGrid pairs = evaluate_grid(f, res, 1.1, 2 * plane);
    CHECK(whole.values == planes.values);
    CHECK(whole.values == pairs.values);
}

TEST_CASE("evaluate_grid rejects bad lattices and non-finite fields") {
    CHECK_THROWS_AS(evaluate_grid(analytic(linear_field), 1, 1.1), ContractError);
    CHECK_THROWS_AS(evaluate_grid(analytic(linear_field), 0, 1.1), ContractError);
    CHECK_THROWS_AS(evaluate_grid(analytic(linear_field), 5, 0.0), ContractError);
    CHECK_THROWS_AS(evaluate_grid(analytic(linear_field), 5, -1.0), ContractError);

    const FieldFn bad = [](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = 0.5;
        out[0] = std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_WITH_AS(evaluate_grid(bad, 4, 1.1), doctest::Contains("non-finite"), Error);
}

TEST_CASE("marching cubes recovers a sphere within one cell diagonal") {
    const int res = 33;
    const ScalarGrid g = evaluate_grid(analytic(sphere_half), res, 1.1);
    const TriangleSoup mesh = marching_cubes(g);
    REQUIRE(!mesh.empty());
    REQUIRE(mesh.vertices.size() > 100);
    mesh.validate();
    const double tol = std::sqrt(3.0) * g.cell();
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.norm() - 0.5) <= tol);
}

TEST_CASE("marching cubes cuts a linear plane exactly") {
    const ScalarGrid g = evaluate_grid(analytic(plane_z), 17, 1.1);
    const TriangleSoup mesh = marching_cubes(g);
    REQUIRE(!mesh.empty());
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(v.z - 0.1) < 1e-6);
}

TEST_CASE("a field with no zero crossing yields an empty mesh") {
    const FieldFn pos = [](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = 1.0;
    };
    const FieldFn neg = [](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = -1.0;
    };
    CHECK(marching_cubes(evaluate_grid(pos, 9, 1.1)).empty());
    CHECK(marching_cubes(evaluate_grid(neg, 9, 1.1)).empty());
}

TEST_CASE("cut-edge vertices are shared, not duplicated") {
    const ScalarGrid g = evaluate_grid(analytic(sphere_half), 17, 1.1);
    const TriangleSoup mesh = marching_cubes(g);
    std::set<std::tuple<double, double, double>> unique;
    for (const Vec3& v : mesh.vertices) unique.insert({v.x, v.y, v.z});
    CHECK(unique.size() == mesh.vertices.size());
}

TEST_CASE("every vertex lies on a lattice edge whose endpoints straddle the level set") {
    const int res = 9;
    const ScalarGrid g = evaluate_grid(analytic(sphere_half), res, 1.1);
    const TriangleSoup mesh = marching_cubes(g);
    REQUIRE(!mesh.empty());
    const double c = g.cell();
    for (const Vec3& v : mesh.vertices) {
        const double u[3] = {(v.x + g.bound) / c, (v.y + g.bound) / c, (v.z + g.bound) / c};
        int frac_axis = -1;
        int base[3];
        for (int a = 0; a < 3; ++a) {
            const double r = std::round(u[a]);
            if (std::abs(u[a] - r) > 1e-7) {
                CHECK(frac_axis == -1);  // at most one non-lattice coordinate
                frac_axis = a;
                base[a] = static_cast<int>(std::floor(u[a]));
            } else {
                base[a] = static_cast<int>(r);
            }
        }
        REQUIRE(frac_axis >= 0);
        int other[3] = {base[0], base[1], base[2]};
        other[frac_axis] += 1;
        const double f0 = g.at(base[0], base[1], base[2]);
        const double f1 = g.at(other[0], other[1], other[2]);
        CHECK(((f0 < 0) != (f1 < 0)));
    }
}

TEST_CASE("percentile interpolates order statistics") {
    std::vector<double> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i + 1;
    Rng rng = Rng::substream(3, "shuffle");
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)))]);
    CHECK(percentile(v, 50) == Approx(50.5).epsilon(1e-12));
    CHECK(percentile(v, 5) == Approx(5.95).epsilon(1e-12));
    CHECK(percentile(v, 95) == Approx(95.05).epsilon(1e-12));
    CHECK(percentile(v, 0) == 1.0);
    CHECK(percentile(v, 100) == 100.0);
    CHECK(percentile({7.0}, 31.0) == 7.0);
    CHECK(percentile({0.0, 10.0}, 50) == Approx(5.0));
    CHECK(percentile({0.0, 10.0}, 25) == Approx(2.5));
    CHECK_THROWS_AS(percentile({}, 50), ContractError);
    CHECK_THROWS_AS(percentile({1.0}, -1), ContractError);
    CHECK_THROWS_AS(percentile({1.0}, 100.5), ContractError);
}

TEST_CASE("encode_mean: z = 0 without an encoder, posterior mean with one") {
    // decoder-only mode short-circuits even though the tensors exist
    train::Checkpoint dec = sphere_checkpoint(2);
    const std::vector<float> cloud = {0.1f, 0.2f, 0.3f, -0.4f, 0.5f, -0.6f};
    const std::vector<float> z0 = encode_mean(dec, cloud);
    REQUIRE(z0.size() == static_cast<std::size_t>(nn::kLatentDim));
    for (float z : z0) CHECK(z == 0.0f);

    // the baseline architecture has no encoder tensors at all
    train::Checkpoint base;
    base.params = nn::init_params<float>("sal-baseline", "scaled-uniform", 2);
    base.adam.init_like(base.params);
    base.meta.config.arch = "sal-baseline";
    const std::vector<float> z1 = encode_mean(base, cloud);
    for (float z : z1) CHECK(z == 0.0f);

    // autoencoder checkpoints answer with the same mu as a manual forward pass
    train::Checkpoint enc;
    enc.params = nn::init_params<float>("lightsal", "scaled-uniform", 2);
    enc.adam.init_like(enc.params);
    enc.meta.config.mode = "autoencoder";
    const std::vector<float> mu = encode_mean(enc, cloud);
    ad::Graph<float> g;
    const auto pts = g.constant({3, 2}, {0.1f, -0.4f, 0.2f, 0.5f, 0.3f, -0.6f});
    const auto out = nn::encoder_forward(g, enc.params, pts);
    CHECK(mu == out.first.data());

    CHECK_THROWS_AS(encode_mean(enc, {}), ContractError);
    CHECK_THROWS_AS(encode_mean(enc, {1.0f, 2.0f}), ContractError);
}

TEST_CASE("decoder_field packs points exactly like decoder_forward") {
    train::Checkpoint ckpt = sphere_checkpoint(9);
    Rng rng = Rng::substream(9, "zdraw");
    std::vector<float> z(nn::kLatentDim);
    for (auto& v : z) v = static_cast<float>(rng.normal()) * 0.1f;

    const std::vector<Vec3> pts = {{0.2, -0.3, 0.5}, {0.0, 0.0, 0.0}, {-1.0, 0.25, 0.75}};
    std::vector<double> got(pts.size());
    decoder_field(ckpt.params, z)(pts, got);

    std::vector<float> packed(3 * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        packed[i] = static_cast<float>(pts[i].x);
        packed[pts.size() + i] = static_cast<float>(pts[i].y);
        packed[2 * pts.size() + i] = static_cast<float>(pts[i].z);
    }
    ad::Graph<float> g;
    const auto f = nn::decoder_forward(g, ckpt.params, g.constant({nn::kLatentDim}, z),
                                       g.constant({3, 3}, packed));
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(got[i] == static_cast<double>(f.data()[i]));
}

TEST_CASE("a sphere-initialized decoder reconstructs something sphere-like") {
    train::Checkpoint ckpt = sphere_checkpoint(1);
    ReconstructOptions opt;
    opt.resolution = 33;
    opt.encode_points = 256;

    Rng rng = Rng::substream(1, "recon-mesh");
    const Reconstruction rm = reconstruct(ckpt, geom::make_icosphere(2), opt, rng);
    REQUIRE(!rm.mesh.empty());
    rm.mesh.validate();
    CHECK(rm.transform.scale == Approx(1.0).epsilon(1e-9));
    CHECK(rm.transform.center.norm() == Approx(0.0).epsilon(1e-9));
    double mean_r = 0;
    for (const Vec3& v : rm.mesh.vertices) {
        const double r = v.norm();
        CHECK(r > 0.55);
        CHECK(r < 1.45);
        mean_r += r;
    }
    mean_r /= static_cast<double>(rm.mesh.vertices.size());
    CHECK(mean_r > 0.8);
    CHECK(mean_r < 1.2);

    // the cloud overload answers the same kind of query
    Rng rng2 = Rng::substream(1, "recon-cloud");
    const geom::PointCloud scan = geom::make_icosphere(2).vertices;
    const Reconstruction rc = reconstruct(ckpt, scan, opt, rng2);
    CHECK(!rc.mesh.empty());

    ReconstructOptions raw = opt;
    raw.renormalize = false;
    Rng rng3 = Rng::substream(1, "recon-raw");
    CHECK_THROWS_WITH_AS(reconstruct(ckpt, geom::PointCloud{}, raw, rng3),
                         doctest::Contains("empty scan"), ContractError);
}

TEST_CASE("eval report CSV carries rows plus percentile summary") {
    EvalReport r;
    r.rows = {{"test", "a", 1.5}, {"test", "b", 2.5}};
    r.p5 = 1.0;
    r.p50 = 2.0;
    r.p95 = 3.0;
    CHECK(r.to_csv() ==
          "split,shape,chamfer_x1e3\n"
          "test,a,1.5\n"
          "test,b,2.5\n"
          "test,p5,1\n"
          "test,p50,2\n"
          "test,p95,3\n");
}

TEST_CASE("evaluate scores manifest shapes against their stored ground truth") {
    TempDir tmp("eval");
    DataConfig dc;
    dc.n_input = 128;
    dc.n_near = 64;
    dc.n_uniform = 32;

    std::vector<data::ManifestEntry> manifest;
    int k = 0;
    for (const std::string id : {"ball", "ring"}) {
        geom::TriangleSoup soup =
            k == 0 ? geom::make_icosphere(2) : geom::make_torus(0.7, 0.25, 16, 8);
        geom::normalize(soup);
        Rng rng = Rng::substream(77, "data", fnv1a64(id));
        data::write_archive(data::generate_samples(soup, id, dc, rng), tmp / (id + ".salf"));
        geom::save_obj(tmp / (id + "_norm.obj"), soup);
        manifest.push_back({"test", id, tmp / (id + ".salf")});
        ++k;
    }

    train::Checkpoint ckpt = sphere_checkpoint(1);
    ReconstructOptions opt;
    opt.resolution = 25;

    const EvalReport rep = evaluate(ckpt, manifest, "test", opt, 13);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].shape == "ball");
    CHECK(rep.rows[1].shape == "ring");
    CHECK(rep.rows[0].split == "test");
    for (const EvalRow& row : rep.rows) {
        CHECK(row.chamfer_x1e3 > 0);
        CHECK(row.chamfer_x1e3 < 1000);  // both shapes live in the unit ball
    }
    // an untrained sphere prior should fit the ball far better than the ring
    CHECK(rep.rows[0].chamfer_x1e3 < rep.rows[1].chamfer_x1e3);
    CHECK(rep.p5 <= rep.p50);
    CHECK(rep.p50 <= rep.p95);
    CHECK(rep.p5 == Approx(std::min(rep.rows[0].chamfer_x1e3, rep.rows[1].chamfer_x1e3) * 0.95 +
                           std::max(rep.rows[0].chamfer_x1e3, rep.rows[1].chamfer_x1e3) * 0.05)
                        .epsilon(1e-12));

    // a worker pool must not change the numbers: per-shape streams are keyed
    const EvalReport rep2 = evaluate(ckpt, manifest, "test", opt, 13, 2);
    CHECK(rep2.to_csv() == rep.to_csv());

    CHECK_THROWS_WITH_AS(evaluate(ckpt, manifest, "train", opt, 13),
                         doctest::Contains("no manifest entries"), Error);

    // losing the ground-truth mesh is an explicit failure, not a silent skip
    std::filesystem::remove(tmp / "ball_norm.obj");
    CHECK_THROWS_WITH_AS(evaluate(ckpt, manifest, "test", opt, 13),
                         doctest::Contains("ground-truth mesh not found"), Error);
}

TEST_CASE("an all-positive decoder is reported as an empty reconstruction") {
    TempDir tmp("eval-empty");
    DataConfig dc;
    dc.n_input = 64;
    dc.n_near = 32;
    dc.n_uniform = 16;
    geom::TriangleSoup soup = geom::make_icosphere(1);
    geom::normalize(soup);
    Rng rng = Rng::substream(3, "data");
    data::write_archive(data::generate_samples(soup, "ball", dc, rng), tmp / "ball.salf");
    geom::save_obj(tmp / "ball_norm.obj", soup);

    train::Checkpoint ckpt = sphere_checkpoint(1);
    auto& bias = ckpt.params.at("decoder.out.b");
    bias.data.assign(bias.data.size(), 10.0f);  // push the whole field positive

    ReconstructOptions opt;
    opt.resolution = 17;
    const std::vector<data::ManifestEntry> manifest = {{"test", "ball", tmp / "ball.salf"}};
    CHECK_THROWS_WITH_AS(evaluate(ckpt, manifest, "test", opt, 13),
                         doctest::Contains("empty mesh"), Error);
}
