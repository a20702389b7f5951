#pragma once

#include <cstdint>
#include <filesystem>

#include "salforge/config.hpp"
#include "salforge/nn.hpp"
#include "salforge/optimizer.hpp"

namespace salforge::train {

// SALC checkpoint: magic "SALC", u32 version, TrainConfig snapshot, epoch,
// global step, Adam step counter, then one CRC-guarded block per tensor
// (name, dims, f32 params, f32 adam m, f32 adam v), then a whole-file CRC.
// Per-block CRCs let a corruption report name the tensor it hit. The config
// seed plus the epoch are the complete RNG state: every random stream is
// derived from (seed, purpose, epoch, shape), never from a running engine.
struct CheckpointMeta {
    TrainConfig config;
    std::int64_t epoch = 0;        // epochs fully completed; resume starts here
    std::int64_t global_step = 0;  // optimizer steps taken
};

struct Checkpoint {
    nn::ModelParams<float> params;
    AdamState<float> adam;
    CheckpointMeta meta;
};

void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams<float>& params,
                     const AdamState<float>& adam, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace salforge::train
