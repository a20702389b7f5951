#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "salforge/checkpoint.hpp"
#include "salforge/geometry.hpp"
#include "salforge/grid.hpp"
#include "salforge/sample_set.hpp"

namespace salforge::recon {

struct ReconstructOptions {
    int resolution = 100;
    double bound = 1.1;
    // Move the scan into the model's unit frame first. Turn off for inputs
    // that are already normalized (preprocessed archives).
    bool renormalize = true;
    std::int64_t encode_points = 16384;  // 128^2, the training cloud size
    std::size_t max_slab_points = 16384;
};

struct Reconstruction {
    geom::TriangleSoup mesh;             // in the normalized frame
    geom::NormalizeTransform transform;  // original = vertex * scale + center
};

// Mean of the encoder posterior for a normalized xyz-interleaved f32 cloud;
// decoder-only checkpoints have no encoder and use z = 0.
std::vector<float> encode_mean(train::Checkpoint& ckpt, const std::vector<float>& cloud);

// Field evaluator over the decoder at a fixed latent. Keeps a reference to
// params, which must outlive the returned callable.
FieldFn decoder_field(nn::ModelParams<float>& params, std::vector<float> z);

// Cloud path: (optionally) normalize, subsample encode_points for the encoder,
// z = posterior mean, sample the decoder on a grid, extract the zero set.
Reconstruction reconstruct(train::Checkpoint& ckpt, const geom::PointCloud& scan,
                           const ReconstructOptions& opt, Rng& rng);
// Mesh path: normalize the soup, then draw encode_points surface samples.
Reconstruction reconstruct(train::Checkpoint& ckpt, const geom::TriangleSoup& scan,
                           const ReconstructOptions& opt, Rng& rng);

struct EvalRow {
    std::string split;
    std::string shape;
    double chamfer_x1e3 = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;          // one per shape, manifest order
    double p5 = 0, p50 = 0, p95 = 0;    // x1e3
    std::string to_csv() const;         // rows + percentile summary rows
};

// Percentile in [0, 100] with linear interpolation between order statistics.
double percentile(std::vector<double> values, double p);

// Reconstructs every entry of `split`, sampling 30k surface points from each
// reconstruction and from the shape's ground-truth mesh (the *_norm mesh
// preprocessing stores next to the archive), and aggregates Chamfer
// percentiles. Identical meshes sample identically, so self-evaluation is 0.
EvalReport evaluate(train::Checkpoint& ckpt, const std::vector<data::ManifestEntry>& manifest,
                    const std::string& split, const ReconstructOptions& opt, std::uint64_t seed,
                    int workers = 1);

}  // namespace salforge::recon
