#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "salforge/config.hpp"
#include "salforge/geometry.hpp"
#include "salforge/rng.hpp"

namespace salforge::data {

// One shape's training supervision: the encoder input cloud plus query points
// labeled with exact unsigned distances. Coordinates and distances are kept at
// f32 so archive round trips are bit-exact.
struct SampleSet {
    std::string shape_id;
    std::vector<float> input_cloud;  // 3*N, xyz interleaved, on-surface
    std::vector<float> queries;      // 3*M
    std::vector<float> h;            // M, unsigned distances

    std::int64_t n_input() const { return static_cast<std::int64_t>(input_cloud.size()) / 3; }
    std::int64_t n_queries() const { return static_cast<std::int64_t>(h.size()); }
    geom::Vec3 query(std::int64_t i) const {
        return {queries[3 * i], queries[3 * i + 1], queries[3 * i + 2]};
    }
    geom::Vec3 input_point(std::int64_t i) const {
        return {input_cloud[3 * i], input_cloud[3 * i + 1], input_cloud[3 * i + 2]};
    }
};

// Draws the input cloud from the surface and builds the query mixture:
// n_near surface points + N(0, sigma_small^2) noise, n_near more with
// sigma_large, and n_uniform uniform in [-1.1, 1.1]^3. Query coordinates are
// rounded to f32 before the distance is computed, so stored h matches the
// stored query exactly (up to its own f32 rounding). Expects a normalized soup.
SampleSet generate_samples(const geom::TriangleSoup& soup, const std::string& shape_id,
                           const DataConfig& config, Rng& rng);

// SALF binary archive. Layout: magic "SALF", u32 version, shape id
// (u32 length + utf-8), u64 N, u64 M, f32 input_cloud, f32 queries, f32 h,
// trailing CRC-32 over everything after the magic.
void write_archive(const SampleSet& set, const std::filesystem::path& path);
SampleSet read_archive(const std::filesystem::path& path);

struct ManifestEntry {
    std::string split;  // "train" or "test"
    std::string id;
    std::filesystem::path path;  // resolved against the manifest's directory
};

// Lines of "<split>\t<shape-id>\t<archive-path>"; '#' comments and blank
// lines skipped; duplicate ids rejected; order preserved.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

}  // namespace salforge::data
