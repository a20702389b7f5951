// Command-line front end: preprocess / train / reconstruct / eval /
// gradcheck / info. Exit codes: 0 success, 1 operational failure,
// 2 usage or config error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "salforge/checkpoint.hpp"
#include "salforge/config.hpp"
#include "salforge/errors.hpp"
#include "salforge/gradcheck.hpp"
#include "salforge/io_util.hpp"
#include "salforge/losses.hpp"
#include "salforge/mesh_io.hpp"
#include "salforge/nn.hpp"
#include "salforge/reconstruct.hpp"
#include "salforge/sample_set.hpp"
#include "salforge/trainer.hpp"

namespace fs = std::filesystem;
using namespace salforge;

namespace {

std::string with_commas(std::int64_t v) {
    std::string raw = std::to_string(v);
    std::string out;
    int run = 0;
    for (auto it = raw.rbegin(); it != raw.rend(); ++it) {
        if (run == 3 && std::isdigit(static_cast<unsigned char>(*it))) {
            out += ',';
            run = 0;
        }
        out += *it;
        ++run;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

int resolve_workers(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("SALFORGE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

// Runs fn(i) for i in [0, n) on `workers` threads; first exception rethrown.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (pool == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errs(n);
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

Config load_config(const std::string& path) {
    Config cfg = path.empty() ? Config{} : Config::parse_file(path);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::string mesh_dir, out_dir, config, split = "train";
    std::uint64_t seed = 1;
    int workers = 0;
};

int cmd_preprocess(const PreprocessArgs& a) {
    const Config cfg = load_config(a.config);
    if (a.split != "train" && a.split != "test")
        throw ConfigError("--split must be 'train' or 'test', got '" + a.split + "'");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.mesh_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext != ".obj" && ext != ".ply") continue;
        // our own normalized ground-truth meshes are outputs, not inputs
        if (entry.path().stem().string().ends_with("_norm")) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("preprocess: no OBJ/PLY meshes in " + a.mesh_dir);
    fs::create_directories(a.out_dir);

    // A stamp ties the archive to the exact source bytes + generation knobs;
    // matching stamp with outputs present means the work would be identical.
    char params[256];
    std::snprintf(params, sizeof(params),
                  "n_input=%lld n_near=%lld n_uniform=%lld sigma_small=%.17g "
                  "sigma_large=%.17g seed=%llu",
                  static_cast<long long>(cfg.data.n_input), static_cast<long long>(cfg.data.n_near),
                  static_cast<long long>(cfg.data.n_uniform), cfg.data.sigma_small,
                  cfg.data.sigma_large, static_cast<unsigned long long>(a.seed));
    const std::uint32_t params_crc =
        io::crc32(params, std::char_traits<char>::length(params));

    enum class Outcome { kProcessed, kSkipped, kFailed };
    std::vector<Outcome> outcome(files.size(), Outcome::kFailed);
    std::vector<std::string> errors(files.size());
    std::vector<data::ManifestEntry> produced(files.size());

    auto run_one = [&](std::size_t i) {
        const fs::path& mesh_path = files[i];
        const std::string id = mesh_path.stem().string();
        const fs::path archive = fs::path(a.out_dir) / (id + ".salf");
        const fs::path gt_mesh = fs::path(a.out_dir) / (id + "_norm.obj");
        const fs::path stamp = fs::path(a.out_dir) / (id + ".stamp");
        try {
            const auto bytes = io::read_file_bytes(mesh_path);
            const std::uint32_t mesh_crc = io::crc32(bytes.data(), bytes.size());
            char stamp_line[64];
            std::snprintf(stamp_line, sizeof(stamp_line), "%08x %08x\n", mesh_crc, params_crc);

            bool fresh = fs::exists(archive) && fs::exists(gt_mesh) && fs::exists(stamp);
            if (fresh) {
                const auto old = io::read_file_bytes(stamp);
                fresh = std::string(old.begin(), old.end()) == stamp_line;
            }
            if (fresh) {
                outcome[i] = Outcome::kSkipped;
            } else {
                geom::TriangleSoup soup = geom::load_mesh(mesh_path);
                if (soup.triangles.empty())
                    throw Error("mesh has no faces; cannot sample a surface");
                const geom::NormalizeTransform t = geom::normalize(soup);
                char c0[96], c1[64], c2[48];
                std::snprintf(c0, sizeof(c0), "center %.17g %.17g %.17g", t.center.x, t.center.y,
                              t.center.z);
                std::snprintf(c1, sizeof(c1), "scale %.17g", t.scale);
                std::snprintf(c2, sizeof(c2), "seed %llu",
                              static_cast<unsigned long long>(a.seed));
                geom::save_obj(gt_mesh, soup, {c0, c1, c2});
                Rng rng = Rng::substream(a.seed, "data", fnv1a64(id));
                const data::SampleSet set = data::generate_samples(soup, id, cfg.data, rng);
                data::write_archive(set, archive);
                io::write_file_bytes(
                    stamp, std::vector<char>(stamp_line,
                                             stamp_line + std::char_traits<char>::length(stamp_line)));
                outcome[i] = Outcome::kProcessed;
            }
            produced[i] = {a.split, id, archive};
        } catch (const std::exception& e) {
            outcome[i] = Outcome::kFailed;
            errors[i] = e.what();
        }
    };
    parallel_for(files.size(), resolve_workers(a.workers), run_one);

    // Merge into any existing manifest: rows for ids from this run are
    // replaced, everything else is kept.
    const fs::path manifest_path = fs::path(a.out_dir) / "manifest.tsv";
    std::vector<data::ManifestEntry> manifest;
    if (fs::exists(manifest_path)) manifest = data::load_manifest(manifest_path);
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (outcome[i] == Outcome::kFailed) continue;
        auto dup = std::find_if(manifest.begin(), manifest.end(),
                                [&](const auto& e) { return e.id == produced[i].id; });
        if (dup != manifest.end()) manifest.erase(dup);
    }
    for (std::size_t i = 0; i < files.size(); ++i)
        if (outcome[i] != Outcome::kFailed) manifest.push_back(produced[i]);
    data::save_manifest(manifest_path, manifest);

    int processed = 0, skipped = 0, failed = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        switch (outcome[i]) {
            case Outcome::kProcessed:
                ++processed;
                break;
            case Outcome::kSkipped:
                ++skipped;
                break;
            case Outcome::kFailed:
                ++failed;
                std::cerr << "failed: " << files[i].string() << ": " << errors[i] << "\n";
                break;
        }
    }
    std::cout << "seed: " << a.seed << "\n"
              << "processed: " << processed << "\n"
              << "skipped: " << skipped << "\n"
              << "failed: " << failed << "\n"
              << "manifest: " << manifest_path.string() << " (" << manifest.size()
              << " entries)\n";
    return failed == 0 ? 0 : 1;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
    std::string manifest, config, out, resume;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_train(const TrainArgs& a) {
    Config cfg = load_config(a.config);
    if (a.seed_set) cfg.train.seed = a.seed;

    const auto manifest = data::load_manifest(a.manifest);
    auto probe = nn::init_params<float>(cfg.train.arch, cfg.train.init, cfg.train.seed);
    const std::int64_t enc = probe.param_count_prefix("encoder.");
    const std::int64_t dec = probe.param_count_prefix("decoder.");
    std::cout << "salforge train\n"
              << "arch: " << cfg.train.arch << " (mode " << cfg.train.mode << ", init "
              << cfg.train.init << ")\n";
    if (enc > 0) std::cout << "encoder params: " << with_commas(enc) << "\n";
    std::cout << "decoder params: " << with_commas(dec) << "\n"
              << "total params: " << with_commas(probe.param_count()) << "\n"
              << "seed: " << cfg.train.seed << "\n"
              << "config:\n"
              << cfg.dump() << std::flush;

    const train::TrainResult res = train::train(manifest, cfg.train, a.out, a.resume);
    std::printf("steps: %lld\n", static_cast<long long>(res.steps));
    std::printf("sal loss: first %.9g final %.9g\n", res.first_sal, res.final_sal);
    std::cout << "checkpoint: " << res.final_checkpoint.string() << "\n"
              << "metrics: " << res.metrics_csv.string() << "\n";
    return 0;
}

// --------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string checkpoint, input, out;
    int resolution = 100;
    std::uint64_t seed = 1;
    bool keep_frame = false;
};

int cmd_reconstruct(const ReconstructArgs& a) {
    std::string out_ext = fs::path(a.out).extension().string();
    std::transform(out_ext.begin(), out_ext.end(), out_ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (out_ext != ".obj" && out_ext != ".ply")
        throw ConfigError("--out must end in .obj or .ply, got '" + a.out + "'");

    train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
    recon::ReconstructOptions opt;
    opt.resolution = a.resolution;
    opt.renormalize = !a.keep_frame;

    const geom::TriangleSoup scan = geom::load_mesh(a.input);
    Rng rng = Rng::substream(a.seed, "inference");
    recon::Reconstruction rec;
    if (scan.triangles.empty()) {
        if (scan.vertices.empty()) throw Error("reconstruct: input has no vertices");
        rec = recon::reconstruct(ckpt, scan.vertices, opt, rng);
    } else {
        rec = recon::reconstruct(ckpt, scan, opt, rng);
    }

    char c0[96], c1[64], c2[48], c3[48];
    std::snprintf(c0, sizeof(c0), "center %.17g %.17g %.17g", rec.transform.center.x,
                  rec.transform.center.y, rec.transform.center.z);
    std::snprintf(c1, sizeof(c1), "scale %.17g", rec.transform.scale);
    std::snprintf(c2, sizeof(c2), "seed %llu", static_cast<unsigned long long>(a.seed));
    std::snprintf(c3, sizeof(c3), "resolution %d", a.resolution);
    const std::vector<std::string> comments = {c0, c1, c2, c3,
                                               "source " + fs::path(a.input).filename().string()};
    if (out_ext == ".obj")
        geom::save_obj(a.out, rec.mesh, comments);
    else
        geom::save_ply(a.out, rec.mesh, /*binary=*/false, comments);

    if (rec.mesh.empty())
        std::cerr << "warning: empty reconstruction (field has no zero crossing in the grid)\n";
    std::cout << "seed: " << a.seed << "\n"
              << "vertices: " << rec.mesh.vertices.size()
              << " triangles: " << rec.mesh.triangles.size() << "\n"
              << "out: " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint, manifest, split = "test", out;
    int resolution = 100;
    std::uint64_t seed = 1;
    int workers = 0;
};

int cmd_eval(const EvalArgs& a) {
    train::Checkpoint ckpt = train::load_checkpoint(a.checkpoint);
    const auto manifest = data::load_manifest(a.manifest);
    recon::ReconstructOptions opt;
    opt.resolution = a.resolution;
    const recon::EvalReport report =
        recon::evaluate(ckpt, manifest, a.split, opt, a.seed, resolve_workers(a.workers));
    const std::string csv = report.to_csv();
    io::write_file_bytes(a.out, std::vector<char>(csv.begin(), csv.end()));
    std::cout << "seed: " << a.seed << "\n";
    std::printf("chamfer x1e3 percentiles (%s, %zu shapes): p5 %.6g  p50 %.6g  p95 %.6g\n",
                a.split.c_str(), report.rows.size(), report.p5, report.p50, report.p95);
    std::cout << "report: " << a.out << "\n";
    return 0;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckArgs {
    std::string module = "all";
    std::uint64_t seed = 1;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    if (a.module != "all" && a.module != "nn" && a.module != "training")
        throw ConfigError("--module must be all, nn, or training");
    constexpr double kTol = 1e-3;

    struct Check {
        std::string name;
        double err;
    };
    std::vector<Check> checks;

    // Inputs bounded away from relu/abs kinks so central differences are
    // two-sided on one branch.
    auto away_from_zero = [](Rng& r) {
        const double v = r.uniform(0.1, 1.0);
        return r.uniform() < 0.5 ? -v : v;
    };

    if (a.module == "all" || a.module == "nn") {
        Rng r = Rng::substream(a.seed, "gradcheck-nn");
        auto fill = [&](ad::Shape shape) {
            ad::Tensor<double> t(std::move(shape));
            for (auto& v : t.data) v = away_from_zero(r);
            return t;
        };
        using G = ad::Graph<double>;
        using V = ad::Value<double>;
        const auto scalarize = [](G& g, const V& v) { return g.mean_all(v); };
        checks.push_back({"relu", ad::gradcheck([&](G& g, const V& x) { return g.mean_all(g.relu(x)); }, fill({4, 5}))});
        checks.push_back({"abs", ad::gradcheck([&](G& g, const V& x) { return g.mean_all(g.abs(x)); }, fill({4, 5}))});
        checks.push_back({"square", ad::gradcheck([&](G& g, const V& x) { return g.mean_all(g.square(x)); }, fill({4, 5}))});
        checks.push_back({"exp", ad::gradcheck([&](G& g, const V& x) { return g.mean_all(g.exp(x)); }, fill({4, 5}))});
        checks.push_back({"scale", ad::gradcheck([&](G& g, const V& x) { return g.mean_all(g.scale(x, -1.7)); }, fill({4, 5}))});
        checks.push_back({"mul", ad::gradcheck([&](G& g, const V& x) {
            return g.mean_all(g.mul(x, g.scale(x, 0.5)));
        }, fill({3, 4}))});
        checks.push_back({"affine", ad::gradcheck([&](G& g, const V& x) {
            Rng rr = Rng::substream(a.seed, "gradcheck-affine");
            std::vector<double> wv(6 * 3), bv(6);
            for (auto& v : wv) v = rr.uniform(-1, 1);
            for (auto& v : bv) v = rr.uniform(-1, 1);
            return scalarize(g, g.affine_pointwise(x, g.constant({6, 3}, wv), g.constant({6}, bv)));
        }, fill({3, 7}))});
        checks.push_back({"maxpool_pairs", ad::gradcheck([&](G& g, const V& x) {
            return g.mean_all(g.maxpool_pairs(x));
        }, fill({3, 8}))});
        checks.push_back({"global_maxpool", ad::gradcheck([&](G& g, const V& x) {
            return g.mean_all(g.global_maxpool(x));
        }, fill({3, 8}))});
        checks.push_back({"concat+slice", ad::gradcheck([&](G& g, const V& x) {
            auto c = g.concat_rows(x, g.scale(x, 2.0));
            return g.mean_all(g.slice_rows(c, 1, 5));
        }, fill({3, 4}))});
        checks.push_back({"broadcast_col", ad::gradcheck([&](G& g, const V& x) {
            return g.mean_all(g.broadcast_col(x, 6));
        }, fill({5}))});

        // composite: total_loss through encoder + reparameterized latent + decoder
        auto params = nn::init_params<double>(nn::kArchLightSal, nn::kInitScaledUniform, a.seed);
        Rng rc = Rng::substream(a.seed, "gradcheck-composite");
        const int N = 24, M = 16;
        std::vector<double> cloud(3 * N), qpts(3 * M), hv(M);
        for (auto& v : cloud) v = rc.uniform(-1, 1);
        for (auto& v : qpts) v = rc.uniform(-1, 1);
        for (auto& v : hv) v = rc.uniform(0.05, 0.5);
        {
            ad::Graph<double> g;
            auto c = g.constant({3, N}, cloud);
            auto [mu, eta] = nn::encoder_forward(g, params, c);
            Rng lat = Rng::substream(a.seed, "gradcheck-latent");
            auto z = nn::sample_latent(g, mu, eta, &lat);
            auto f = nn::decoder_forward(g, params, z, g.constant({3, M}, qpts));
            auto loss = train::total_loss(g, f, g.constant({M}, hv), mu, eta, 1e-3);
            for (std::size_t i = 0; i < params.size(); ++i) params.tensor(i).zero_grad();
            g.backward(loss);
        }
        auto eval_loss = [&]() {
            ad::Graph<double> g;
            auto c = g.constant({3, N}, cloud);
            auto [mu, eta] = nn::encoder_forward(g, params, c);
            Rng lat = Rng::substream(a.seed, "gradcheck-latent");
            auto z = nn::sample_latent(g, mu, eta, &lat);
            auto f = nn::decoder_forward(g, params, z, g.constant({3, M}, qpts));
            return train::total_loss(g, f, g.constant({M}, hv), mu, eta, 1e-3).item();
        };
        double worst = 0;
        std::string worst_tensor;
        for (std::size_t ti = 0; ti < params.size(); ++ti) {
            auto& t = params.tensor(ti);
            const std::vector<std::int64_t> picks = {
                0, static_cast<std::int64_t>(t.data.size()) / 2,
                static_cast<std::int64_t>(t.data.size()) - 1};
            const double e = ad::fd_max_rel_err(eval_loss, t, 1e-6, picks);
            if (e > worst) {
                worst = e;
                worst_tensor = params.name(ti);
            }
        }
        checks.push_back({"encoder+decoder total_loss (worst tensor " + worst_tensor + ")", worst});
    }

    if (a.module == "all" || a.module == "training") {
        Rng r = Rng::substream(a.seed, "gradcheck-training");
        const int M = 12;
        std::vector<double> hv(M);
        for (auto& v : hv) v = r.uniform(0.05, 0.5);
        ad::Tensor<double> f0({M});
        for (auto& v : f0.data) v = away_from_zero(r);
        checks.push_back({"sal_loss wrt f", ad::gradcheck([&](ad::Graph<double>& g, const ad::Value<double>& f) {
            return train::sal_loss(g, f, g.constant({M}, hv));
        }, f0)});
        ad::Tensor<double> mu0({8});
        for (auto& v : mu0.data) v = r.uniform(-1, 1);
        std::vector<double> eta_fixed(8);
        for (auto& v : eta_fixed) v = r.uniform(-1, 1);
        checks.push_back({"kl_loss wrt mu", ad::gradcheck([&](ad::Graph<double>& g, const ad::Value<double>& mu) {
            return train::kl_loss(g, mu, g.constant({8}, eta_fixed));
        }, mu0)});
        ad::Tensor<double> eta0({8});
        for (auto& v : eta0.data) v = r.uniform(-1, 1);
        std::vector<double> mu_fixed(8);
        for (auto& v : mu_fixed) v = r.uniform(-1, 1);
        checks.push_back({"kl_loss wrt eta", ad::gradcheck([&](ad::Graph<double>& g, const ad::Value<double>& eta) {
            return train::kl_loss(g, g.constant({8}, mu_fixed), eta);
        }, eta0)});
        checks.push_back({"total_loss wrt f", ad::gradcheck([&](ad::Graph<double>& g, const ad::Value<double>& f) {
            return train::total_loss(g, f, g.constant({M}, hv), g.constant({8}, mu_fixed),
                                     g.constant({8}, eta_fixed), 1e-3);
        }, f0)});
    }

    const Check* worst = &checks.front();
    for (const Check& c : checks) {
        std::printf("  %-48s %.3e\n", c.name.c_str(), c.err);
        if (c.err > worst->err) worst = &c;
    }
    std::cout << "seed: " << a.seed << "\n";
    std::printf("worst: %s at %.3e (threshold %.0e)\n", worst->name.c_str(), worst->err, kTol);
    if (worst->err < kTol) {
        std::cout << "gradcheck: OK\n";
        return 0;
    }
    std::cout << "gradcheck: FAIL\n";
    return 1;
}

// ---------------------------------------------------------------------- info

int cmd_info(const std::string& arch) {
    auto light = nn::init_params<float>(nn::kArchLightSal, nn::kInitScaledUniform, 1);
    auto base = nn::init_params<float>(nn::kArchSalBaseline, nn::kInitScaledUniform, 1);
    const std::int64_t light_total = light.param_count();
    const std::int64_t base_total = base.param_count() + nn::kBaselineEncoderReferenceParams;

    std::cout << "arch: " << arch << "\n";
    if (arch == nn::kArchLightSal) {
        std::cout << "encoder: " << with_commas(light.param_count_prefix("encoder.")) << "\n"
                  << "decoder: " << with_commas(light.param_count_prefix("decoder.")) << "\n"
                  << "total: " << with_commas(light_total) << "\n";
    } else {
        std::cout << "decoder: " << with_commas(base.param_count()) << "\n"
                  << "encoder (reference, not constructed): "
                  << with_commas(nn::kBaselineEncoderReferenceParams) << "\n"
                  << "total: " << with_commas(base_total) << "\n";
    }
    char line[128];
    std::snprintf(line, sizeof(line), "size ratio lightsal/sal-baseline: %.4f (%s 0.25)\n",
                  static_cast<double>(light_total) / static_cast<double>(base_total),
                  light_total * 4 < base_total ? "<" : ">=");
    std::cout << line;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sign-agnostic implicit-surface toolkit"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    auto* c_pre = app.add_subcommand("preprocess", "sample meshes into training archives");
    c_pre->add_option("--mesh-dir", pre.mesh_dir, "directory of OBJ/PLY meshes")->required();
    c_pre->add_option("--out-dir", pre.out_dir, "archive output directory")->required();
    c_pre->add_option("--config", pre.config, "config file");
    c_pre->add_option("--split", pre.split, "manifest split tag (train|test)");
    c_pre->add_option("--seed", pre.seed, "base RNG seed");
    c_pre->add_option("--workers", pre.workers, "worker threads (default SALFORGE_THREADS or 1)");

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "train a model on preprocessed archives");
    c_tr->add_option("--manifest", tr.manifest, "manifest.tsv from preprocess")->required();
    c_tr->add_option("--config", tr.config, "config file");
    c_tr->add_option("--out", tr.out, "output directory")->required();
    c_tr->add_option("--resume", tr.resume, "checkpoint to resume from");
    auto* seed_opt = c_tr->add_option("--seed", tr.seed, "overrides [train] seed");

    ReconstructArgs rc;
    auto* c_rc = app.add_subcommand("reconstruct", "extract a mesh from a trained model");
    c_rc->add_option("--checkpoint", rc.checkpoint, "trained .salc checkpoint")->required();
    c_rc->add_option("--input", rc.input, "scan mesh or point cloud (OBJ/PLY)")->required();
    c_rc->add_option("--out", rc.out, "output mesh (.obj or .ply)")->required();
    c_rc->add_option("--resolution", rc.resolution, "grid resolution per axis");
    c_rc->add_option("--seed", rc.seed, "base RNG seed");
    c_rc->add_flag("--keep-frame", rc.keep_frame, "input is already normalized; skip renormalizing");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "Chamfer-percentile report over a manifest split");
    c_ev->add_option("--checkpoint", ev.checkpoint, "trained .salc checkpoint")->required();
    c_ev->add_option("--manifest", ev.manifest, "manifest.tsv")->required();
    c_ev->add_option("--split", ev.split, "split to evaluate");
    c_ev->add_option("--out", ev.out, "report CSV path")->required();
    c_ev->add_option("--resolution", ev.resolution, "grid resolution per axis");
    c_ev->add_option("--seed", ev.seed, "base RNG seed");
    c_ev->add_option("--workers", ev.workers, "worker threads (default SALFORGE_THREADS or 1)");

    GradcheckArgs gc;
    auto* c_gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    c_gc->add_option("--module", gc.module, "all | nn | training");
    c_gc->add_option("--seed", gc.seed, "base RNG seed");

    std::string info_arch = std::string(nn::kArchLightSal);
    auto* c_in = app.add_subcommand("info", "parameter counts for an architecture");
    c_in->add_option("--arch", info_arch, "lightsal | sal-baseline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (c_pre->parsed()) return cmd_preprocess(pre);
        if (c_tr->parsed()) {
            tr.seed_set = seed_opt->count() > 0;
            return cmd_train(tr);
        }
        if (c_rc->parsed()) return cmd_reconstruct(rc);
        if (c_ev->parsed()) return cmd_eval(ev);
        if (c_gc->parsed()) return cmd_gradcheck(gc);
        if (c_in->parsed()) {
            if (info_arch != nn::kArchLightSal && info_arch != nn::kArchSalBaseline)
                throw ConfigError("--arch must be lightsal or sal-baseline");
            return cmd_info(info_arch);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
