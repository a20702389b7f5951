#include "salforge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "salforge/losses.hpp"

namespace salforge::train {

namespace {

using Clock = std::chrono::steady_clock;

struct LoadedShape {
    std::string id;
    data::SampleSet set;
};

// Query subsample for one (epoch, shape) visit: indices with replacement.
std::vector<std::int64_t> draw_queries(const TrainConfig& cfg, std::int64_t epoch,
                                       const std::string& shape_id, std::int64_t n_queries) {
    Rng rng = Rng::substream(cfg.seed, "query", static_cast<std::uint64_t>(epoch),
                             fnv1a64(shape_id));
    std::vector<std::int64_t> idx(static_cast<std::size_t>(cfg.points_per_shape));
    for (auto& i : idx) i = rng.uniform_int(n_queries);
    return idx;
}

}  // namespace

TrainResult train(const std::vector<data::ManifestEntry>& manifest, const TrainConfig& config,
                  const std::filesystem::path& out_dir,
                  const std::filesystem::path& resume_from) {
    Config full;
    full.train = config;
    full.validate();

    std::vector<LoadedShape> shapes;
    for (const auto& e : manifest) {
        if (e.split != "train") continue;
        try {
            shapes.push_back({e.id, data::read_archive(e.path)});
        } catch (const Error& err) {
            throw Error("shape '" + e.id + "': " + err.what());
        }
    }
    if (shapes.empty()) throw ContractError("train: manifest has no train shapes");

    std::filesystem::create_directories(out_dir);

    nn::ModelParams<float> params;
    AdamState<float> adam;
    std::int64_t start_epoch = 0;
    std::int64_t global_step = 0;
    if (!resume_from.empty()) {
        Checkpoint ck = load_checkpoint(resume_from);
        if (!(ck.meta.config == config))
            throw ConfigError("resume: checkpoint config differs from the requested config");
        params = std::move(ck.params);
        adam = std::move(ck.adam);
        start_epoch = ck.meta.epoch;
        global_step = ck.meta.global_step;
    } else {
        params = nn::init_params<float>(config.arch, config.init, config.seed);
        adam.init_like(params);
    }
    const bool decoder_only = config.mode == "decoder-only";

    const std::filesystem::path metrics_path = out_dir / "metrics.csv";
    std::ofstream metrics;
    if (start_epoch == 0) {
        metrics.open(metrics_path, std::ios::trunc);
        metrics << "epoch,step,loss,sal,kl,lr,seconds\n";
    } else {
        metrics.open(metrics_path, std::ios::app);
    }
    if (!metrics) throw Error("cannot open metrics file: " + metrics_path.string());

    const auto t0 = Clock::now();
    TrainResult result;
    result.metrics_csv = metrics_path;
    bool first_recorded = start_epoch != 0;

    std::vector<float> zeros_z(nn::kLatentDim, 0.0f);

    for (std::int64_t epoch = start_epoch; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(epoch, config);

        std::vector<std::size_t> order(shapes.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng order_rng = Rng::substream(config.seed, "order", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(
                                        order_rng.uniform_int(static_cast<std::int64_t>(i)))]);

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t batch_end =
                std::min(order.size(), batch_start + static_cast<std::size_t>(config.batch_size));
            const float inv_batch = 1.0f / static_cast<float>(batch_end - batch_start);

            params.zero_grad();
            double batch_loss = 0, batch_sal = 0, batch_kl = 0;

            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                LoadedShape& shape = shapes[order[bi]];
                const data::SampleSet& set = shape.set;

                const auto qidx = draw_queries(config, epoch, shape.id, set.n_queries());
                std::vector<float> q(3 * qidx.size());
                std::vector<float> hv(qidx.size());
                for (std::size_t i = 0; i < qidx.size(); ++i) {
                    // queries live column-major in the graph: [3, M]
                    q[i] = set.queries[3 * qidx[i]];
                    q[qidx.size() + i] = set.queries[3 * qidx[i] + 1];
                    q[2 * qidx.size() + i] = set.queries[3 * qidx[i] + 2];
                    hv[i] = set.h[qidx[i]];
                }

                ad::Graph<float> g;
                const auto points =
                    g.constant({3, static_cast<int>(qidx.size())}, std::move(q));
                const auto h = g.constant({static_cast<int>(qidx.size())}, std::move(hv));

                ad::Value<float> loss;
                double sal_v = 0, kl_v = 0;
                if (decoder_only) {
                    const auto z = g.constant({nn::kLatentDim}, zeros_z);
                    const auto f = nn::decoder_forward(g, params, z, points);
                    loss = sal_loss(g, f, h);
                    sal_v = loss.item();
                } else {
                    std::vector<float> in(set.input_cloud.size());
                    const std::size_t n = static_cast<std::size_t>(set.n_input());
                    for (std::size_t i = 0; i < n; ++i) {
                        in[i] = set.input_cloud[3 * i];
                        in[n + i] = set.input_cloud[3 * i + 1];
                        in[2 * n + i] = set.input_cloud[3 * i + 2];
                    }
                    const auto cloud = g.constant({3, static_cast<int>(n)}, std::move(in));
                    const auto [mu, eta] = nn::encoder_forward(g, params, cloud);
                    Rng zrng = Rng::substream(config.seed, "latent",
                                              static_cast<std::uint64_t>(epoch),
                                              fnv1a64(shape.id));
                    const auto z = nn::sample_latent(g, mu, eta, &zrng);
                    const auto f = nn::decoder_forward(g, params, z, points);
                    const auto sal = sal_loss(g, f, h);
                    const auto kl = kl_loss(g, mu, eta);
                    loss = g.add(sal, g.scale(kl, static_cast<float>(config.kl_weight)));
                    sal_v = sal.item();
                    kl_v = kl.item();
                }
                batch_loss += loss.item();
                batch_sal += sal_v;
                batch_kl += kl_v;
                // average over the batch: scale the loss, then one backward
                g.backward(g.scale(loss, inv_batch));
            }

            batch_loss *= inv_batch;
            batch_sal *= inv_batch;
            batch_kl *= inv_batch;
            if (!std::isfinite(batch_loss))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(global_step));

            adam_step(params, adam, static_cast<float>(lr));
            ++global_step;

            const double secs =
                std::chrono::duration<double>(Clock::now() - t0).count();
            char row[192];
            std::snprintf(row, sizeof(row), "%lld,%lld,%.9g,%.9g,%.9g,%.9g,%.3f\n",
                          static_cast<long long>(epoch), static_cast<long long>(global_step),
                          batch_loss, batch_sal, batch_kl, lr, secs);
            metrics << row;
            if (!first_recorded) {
                result.first_sal = batch_sal;
                first_recorded = true;
            }
            result.final_sal = batch_sal;
            ++result.steps;
        }
        metrics.flush();

        const bool last = epoch + 1 == config.epochs;
        if ((epoch + 1) % config.checkpoint_every == 0 && !last) {
            const auto path = out_dir / ("checkpoint_e" + std::to_string(epoch + 1) + ".salc");
            save_checkpoint(path, params, adam, {config, epoch + 1, global_step});
        }
    }

    result.final_checkpoint = out_dir / "checkpoint_final.salc";
    save_checkpoint(result.final_checkpoint, params, adam,
                    {config, config.epochs, global_step});
    return result;
}

}  // namespace salforge::train
