#include "salforge/sample_set.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "salforge/errors.hpp"
#include "salforge/io_util.hpp"

namespace salforge::data {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;

void push_point_f32(std::vector<float>& out, const geom::Vec3& p) {
    out.push_back(static_cast<float>(p.x));
    out.push_back(static_cast<float>(p.y));
    out.push_back(static_cast<float>(p.z));
}

}  // namespace

SampleSet generate_samples(const geom::TriangleSoup& soup, const std::string& shape_id,
                           const DataConfig& config, Rng& rng) {
    const geom::TriangleBvh bvh(soup);
    SampleSet set;
    set.shape_id = shape_id;

    const geom::PointCloud input = geom::sample_surface(soup, config.n_input, rng);
    set.input_cloud.reserve(input.size() * 3);
    for (const geom::Vec3& p : input) push_point_f32(set.input_cloud, p);

    const std::int64_t m = 2 * config.n_near + config.n_uniform;
    set.queries.reserve(3 * m);
    set.h.reserve(m);
    // Queries are snapped to f32 before labeling so the stored coordinates are
    // exactly the ones the distance was computed for. The snap goes through
    // volatile floats: gcc 11 -O3 -march=native otherwise fuses the x/y
    // narrowing into the vector store and hands the unrounded doubles to the
    // distance call, silently breaking the invariant.
    auto add_query = [&](const geom::Vec3& q) {
        volatile float vx = static_cast<float>(q.x);
        volatile float vy = static_cast<float>(q.y);
        volatile float vz = static_cast<float>(q.z);
        const float fx = vx, fy = vy, fz = vz;
        set.queries.insert(set.queries.end(), {fx, fy, fz});
        const geom::Vec3 snapped{fx, fy, fz};
        set.h.push_back(static_cast<float>(bvh.unsigned_distance(snapped).dist));
    };

    const geom::PointCloud near = geom::sample_surface(soup, 2 * config.n_near, rng);
    for (std::int64_t i = 0; i < config.n_near; ++i) {
        const geom::Vec3& p = near[i];
        add_query({p.x + rng.normal(0, config.sigma_small),
                   p.y + rng.normal(0, config.sigma_small),
                   p.z + rng.normal(0, config.sigma_small)});
    }
    for (std::int64_t i = config.n_near; i < 2 * config.n_near; ++i) {
        const geom::Vec3& p = near[i];
        add_query({p.x + rng.normal(0, config.sigma_large),
                   p.y + rng.normal(0, config.sigma_large),
                   p.z + rng.normal(0, config.sigma_large)});
    }
    for (std::int64_t i = 0; i < config.n_uniform; ++i)
        add_query({rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1)});

    return set;
}

void write_archive(const SampleSet& set, const std::filesystem::path& path) {
    io::ByteWriter w;
    w.put_bytes(kMagic, 4);
    w.put_u32(kVersion);
    w.put_str(set.shape_id);
    w.put_u64(static_cast<std::uint64_t>(set.n_input()));
    w.put_u64(static_cast<std::uint64_t>(set.n_queries()));
    w.put_f32s(set.input_cloud.data(), set.input_cloud.size());
    w.put_f32s(set.queries.data(), set.queries.size());
    w.put_f32s(set.h.data(), set.h.size());
    w.put_u32(w.crc_from(4));
    io::write_file_bytes(path, w.bytes());
}

SampleSet read_archive(const std::filesystem::path& path) {
    const std::vector<char> bytes = io::read_file_bytes(path);
    io::ByteReader r(bytes);
    char magic[4];
    r.get_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IntegrityError(path.string() + ": bad magic (field 'magic', not a SALF archive)");
    const std::uint32_t version = r.get_u32("version");
    if (version != kVersion)
        throw IntegrityError(path.string() + ": unsupported version " + std::to_string(version) +
                             " (field 'version', want " + std::to_string(kVersion) + ")");
    SampleSet set;
    set.shape_id = r.get_str("shape_id");
    const std::uint64_t n = r.get_u64("n_input");
    const std::uint64_t m = r.get_u64("n_queries");
    set.input_cloud.resize(3 * n);
    set.queries.resize(3 * m);
    set.h.resize(m);
    r.get_f32s(set.input_cloud.data(), set.input_cloud.size(), "input_cloud");
    r.get_f32s(set.queries.data(), set.queries.size(), "queries");
    r.get_f32s(set.h.data(), set.h.size(), "h");
    const std::size_t payload_end = r.offset();
    const std::uint32_t stored = r.get_u32("crc");
    const std::uint32_t actual = r.crc_range(4, payload_end);
    if (stored != actual)
        throw IntegrityError(path.string() + ": CRC mismatch (field 'crc', stored " +
                             std::to_string(stored) + ", computed " + std::to_string(actual) + ")");
    if (r.remaining() != 0)
        throw IntegrityError(path.string() + ": " + std::to_string(r.remaining()) +
                             " trailing bytes after CRC");
    return set;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open manifest: " + path.string());
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    std::vector<ManifestEntry> entries;
    std::unordered_set<std::string> seen;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(f, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty() || raw[0] == '#') continue;
        const std::size_t t1 = raw.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? std::string::npos : raw.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected '<split>\\t<id>\\t<path>'");
        ManifestEntry e;
        e.split = raw.substr(0, t1);
        e.id = raw.substr(t1 + 1, t2 - t1 - 1);
        const std::string rel = raw.substr(t2 + 1);
        if (e.split != "train" && e.split != "test")
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown split '" +
                             e.split + "'");
        if (e.id.empty() || rel.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty id or path");
        if (!seen.insert(e.id).second)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" +
                             e.id + "'");
        std::filesystem::path p(rel);
        e.path = p.is_absolute() ? p : base / p;
        if (!std::filesystem::exists(e.path))
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": archive not found: " + e.path.string());
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open manifest for writing: " + path.string());
    f << "# <split>\t<shape-id>\t<archive-path>\n";
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    for (const ManifestEntry& e : entries) {
        std::filesystem::path rel = e.path.lexically_proximate(base);
        f << e.split << "\t" << e.id << "\t" << rel.generic_string() << "\n";
    }
    if (!f) throw Error("write failed: " + path.string());
}

}  // namespace salforge::data
