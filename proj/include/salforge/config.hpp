#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace salforge {

// Training-sample generation knobs ([data] section).
struct DataConfig {
    std::int64_t n_input = 16384;   // encoder input points (128^2)
    std::int64_t n_near = 8192;     // near-surface queries per sigma group
    std::int64_t n_uniform = 4096;  // ambient queries in [-1.1, 1.1]^3
    double sigma_small = 0.01;
    double sigma_large = 0.1;
};

// Everything the trainer needs; snapshotted verbatim into checkpoints.
struct TrainConfig {
    double lr0 = 0.0005;
    std::int64_t batch_size = 16;        // shapes per optimizer step
    std::int64_t points_per_shape = 2048;  // queries drawn per shape per step
    std::int64_t epochs = 500;
    std::int64_t schedule_period = 200;
    double schedule_factor = 0.5;
    double kl_weight = 1e-3;
    std::uint64_t seed = 1;
    std::string arch = "lightsal";       // lightsal | sal-baseline
    std::string init = "scaled-uniform";  // scaled-uniform | geometric-sphere
    std::string mode = "autoencoder";    // autoencoder | decoder-only (z fixed to 0)
    std::int64_t checkpoint_every = 100;  // epochs between periodic checkpoints

    bool operator==(const TrainConfig&) const = default;
};

struct ReconstructConfig {
    std::int64_t resolution = 100;
    double bound = 1.1;  // grid spans [-bound, bound]^3
};

// INI-style "key = value" under [data] / [model] / [train] / [reconstruct]
// sections. Every key has a default; unknown sections or keys are rejected.
struct Config {
    DataConfig data;
    TrainConfig train;  // [model] arch/init land here too
    ReconstructConfig reconstruct;

    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<config>");

    // Canonical echo: stable section/key order, re-parseable.
    std::string dump() const;

    // ConfigError on any out-of-range value.
    void validate() const;
};

}  // namespace salforge
