#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "salforge/checkpoint.hpp"
#include "salforge/config.hpp"
#include "salforge/sample_set.hpp"

namespace salforge::train {

struct TrainResult {
    std::filesystem::path final_checkpoint;
    std::filesystem::path metrics_csv;
    std::int64_t steps = 0;
    double first_sal = 0;  // batch-mean sal loss at the first optimizer step
    double final_sal = 0;  // and at the last
};

// Epoch loop over the train split. Per shape in a batch: draw
// points_per_shape queries with replacement, forward (encoder + stochastic z
// in autoencoder mode, z = 0 in decoder-only mode), decode, add
// total_loss / batch_count to the batch loss; one adam_step per batch.
// Metrics CSV rows "epoch,step,loss,sal,kl,lr,seconds" per step. Checkpoints
// every config.checkpoint_every epochs and at the end. Deterministic given
// config.seed; resuming from a periodic checkpoint reproduces the
// uninterrupted run bit-exactly. Non-finite loss aborts, naming the step.
TrainResult train(const std::vector<data::ManifestEntry>& manifest, const TrainConfig& config,
                  const std::filesystem::path& out_dir,
                  const std::filesystem::path& resume_from = {});

}  // namespace salforge::train
