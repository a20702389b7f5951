#include "salforge/reconstruct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>
#include <utility>

#include "salforge/errors.hpp"
#include "salforge/marching_cubes.hpp"
#include "salforge/mesh_io.hpp"

namespace salforge::recon {

using geom::PointCloud;
using geom::TriangleSoup;

std::vector<float> encode_mean(train::Checkpoint& ckpt, const std::vector<float>& cloud) {
    if (ckpt.meta.config.mode == "decoder-only" || !ckpt.params.has("encoder.mu.w"))
        return std::vector<float>(nn::kLatentDim, 0.0f);
    if (cloud.empty() || cloud.size() % 3 != 0)
        throw ContractError("encode_mean: cloud must be a non-empty multiple of 3 floats");
    const std::size_t n = cloud.size() / 3;
    std::vector<float> in(cloud.size());
    for (std::size_t i = 0; i < n; ++i) {
        in[i] = cloud[3 * i];
        in[n + i] = cloud[3 * i + 1];
        in[2 * n + i] = cloud[3 * i + 2];
    }
    ad::Graph<float> g;
    const auto pts = g.constant({3, static_cast<int>(n)}, std::move(in));
    auto [mu, eta] = nn::encoder_forward(g, ckpt.params, pts);
    (void)eta;  // mean mode
    return mu.data();
}

FieldFn decoder_field(nn::ModelParams<float>& params, std::vector<float> z) {
    return [&params, z = std::move(z)](const std::vector<Vec3>& pts, std::vector<double>& out) {
        const std::size_t m = pts.size();
        std::vector<float> p(3 * m);
        for (std::size_t i = 0; i < m; ++i) {
            p[i] = static_cast<float>(pts[i].x);
            p[m + i] = static_cast<float>(pts[i].y);
            p[2 * m + i] = static_cast<float>(pts[i].z);
        }
        ad::Graph<float> g;
        const auto pv = g.constant({3, static_cast<int>(m)}, std::move(p));
        const auto zv = g.constant({nn::kLatentDim}, z);
        const auto f = nn::decoder_forward(g, params, zv, pv);
        const auto& vals = f.data();
        for (std::size_t i = 0; i < m; ++i) out[i] = vals[i];
    };
}

namespace {

// Subsample of at most `want` distinct points, in draw order; a smaller cloud
// is used whole. The pick is a partial Fisher-Yates over an index table.
std::vector<float> pack_f32(const PointCloud& cloud, std::int64_t want, Rng& rng) {
    const std::int64_t n = static_cast<std::int64_t>(cloud.size());
    std::vector<std::int64_t> idx;
    if (n > want) {
        idx.resize(n);
        for (std::int64_t i = 0; i < n; ++i) idx[i] = i;
        for (std::int64_t i = 0; i < want; ++i) {
            const std::int64_t j = i + static_cast<std::int64_t>(rng.uniform_int(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(want);
    } else {
        idx.resize(n);
        for (std::int64_t i = 0; i < n; ++i) idx[i] = i;
    }
    std::vector<float> out;
    out.reserve(3 * idx.size());
    for (const std::int64_t i : idx) {
        out.push_back(static_cast<float>(cloud[i].x));
        out.push_back(static_cast<float>(cloud[i].y));
        out.push_back(static_cast<float>(cloud[i].z));
    }
    return out;
}

Reconstruction reconstruct_from_f32(train::Checkpoint& ckpt, const std::vector<float>& enc_cloud,
                                    const geom::NormalizeTransform& transform,
                                    const ReconstructOptions& opt) {
    auto field = decoder_field(ckpt.params, encode_mean(ckpt, enc_cloud));
    const ScalarGrid grid = evaluate_grid(field, opt.resolution, opt.bound, opt.max_slab_points);
    return {marching_cubes(grid, 0.0), transform};
}

}  // namespace

Reconstruction reconstruct(train::Checkpoint& ckpt, const PointCloud& scan,
                           const ReconstructOptions& opt, Rng& rng) {
    PointCloud cloud = scan;
    geom::NormalizeTransform t;
    if (opt.renormalize) t = geom::normalize(cloud);
    if (cloud.empty()) throw ContractError("reconstruct: empty scan");
    return reconstruct_from_f32(ckpt, pack_f32(cloud, opt.encode_points, rng), t, opt);
}

Reconstruction reconstruct(train::Checkpoint& ckpt, const TriangleSoup& scan,
                           const ReconstructOptions& opt, Rng& rng) {
    TriangleSoup soup = scan;
    geom::NormalizeTransform t;
    if (opt.renormalize) t = geom::normalize(soup);
    const PointCloud cloud = geom::sample_surface(soup, opt.encode_points, rng);
    return reconstruct_from_f32(ckpt, pack_f32(cloud, opt.encode_points, rng), t, opt);
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw ContractError("percentile: empty value list");
    if (!(p >= 0.0 && p <= 100.0))
        throw ContractError("percentile: p must be in [0, 100], got " + std::to_string(p));
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::string EvalReport::to_csv() const {
    std::string out = "split,shape,chamfer_x1e3\n";
    char line[256];
    for (const EvalRow& r : rows) {
        std::snprintf(line, sizeof(line), "%s,%s,%.9g\n", r.split.c_str(), r.shape.c_str(),
                      r.chamfer_x1e3);
        out += line;
    }
    const std::string split = rows.empty() ? "all" : rows.front().split;
    std::snprintf(line, sizeof(line), "%s,p5,%.9g\n%s,p50,%.9g\n%s,p95,%.9g\n", split.c_str(), p5,
                  split.c_str(), p50, split.c_str(), p95);
    out += line;
    return out;
}

EvalReport evaluate(train::Checkpoint& ckpt, const std::vector<data::ManifestEntry>& manifest,
                    const std::string& split, const ReconstructOptions& opt, std::uint64_t seed,
                    int workers) {
    std::vector<const data::ManifestEntry*> entries;
    for (const auto& e : manifest)
        if (e.split == split) entries.push_back(&e);
    if (entries.empty()) throw Error("evaluate: split '" + split + "' has no manifest entries");

    const std::size_t n = entries.size();
    std::vector<double> dists(n, 0.0);
    std::vector<std::exception_ptr> errors(n);

    auto run_one = [&](std::size_t i) {
        const data::ManifestEntry& e = *entries[i];
        const data::SampleSet set = data::read_archive(e.path);

        std::filesystem::path gt_path = e.path;
        gt_path.replace_extension();
        gt_path += "_norm.obj";
        if (!std::filesystem::exists(gt_path))
            throw Error("evaluate: shape '" + e.id + "': ground-truth mesh not found at " +
                        gt_path.string() + " (re-run preprocessing)");
        const TriangleSoup gt = geom::load_mesh(gt_path);

        ReconstructOptions shape_opt = opt;
        shape_opt.renormalize = false;  // archives are already in the unit frame
        Rng enc_rng = Rng::substream(seed, "eval-encode", fnv1a64(e.id));
        PointCloud cloud(set.n_input());
        for (std::int64_t k = 0; k < set.n_input(); ++k) cloud[k] = set.input_point(k);
        const Reconstruction rec = reconstruct(ckpt, cloud, shape_opt, enc_rng);
        if (rec.mesh.empty())
            throw Error("evaluate: shape '" + e.id + "': reconstruction produced an empty mesh");

        // Both meshes sample from the same stream: evaluating a mesh against
        // itself is exactly zero, real pairs decouple through their geometry.
        Rng ra = Rng::substream(seed, "eval-sample", fnv1a64(e.id));
        Rng rb = Rng::substream(seed, "eval-sample", fnv1a64(e.id));
        const PointCloud pa = geom::sample_surface(rec.mesh, 30000, ra);
        const PointCloud pb = geom::sample_surface(gt, 30000, rb);
        dists[i] = geom::chamfer(pa, pb) * 1e3;
    };

    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (pool == 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    run_one(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> threads;
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    EvalReport report;
    for (std::size_t i = 0; i < n; ++i)
        report.rows.push_back({split, entries[i]->id, dists[i]});
    report.p5 = percentile(dists, 5.0);
    report.p50 = percentile(dists, 50.0);
    report.p95 = percentile(dists, 95.0);
    if (!(report.p5 <= report.p50 && report.p50 <= report.p95))
        throw Error("evaluate: percentile ordering violated");
    return report;
}

}  // namespace salforge::recon
