#include "salforge/checkpoint.hpp"

#include <cstring>

#include "salforge/io_util.hpp"

namespace salforge::train {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_config(io::ByteWriter& w, const TrainConfig& c) {
    w.put_f64(c.lr0);
    w.put_u64(static_cast<std::uint64_t>(c.batch_size));
    w.put_u64(static_cast<std::uint64_t>(c.points_per_shape));
    w.put_u64(static_cast<std::uint64_t>(c.epochs));
    w.put_u64(static_cast<std::uint64_t>(c.schedule_period));
    w.put_f64(c.schedule_factor);
    w.put_f64(c.kl_weight);
    w.put_u64(c.seed);
    w.put_str(c.arch);
    w.put_str(c.init);
    w.put_str(c.mode);
    w.put_u64(static_cast<std::uint64_t>(c.checkpoint_every));
}

TrainConfig get_config(io::ByteReader& r) {
    TrainConfig c;
    c.lr0 = r.get_f64("config.lr0");
    c.batch_size = static_cast<std::int64_t>(r.get_u64("config.batch_size"));
    c.points_per_shape = static_cast<std::int64_t>(r.get_u64("config.points_per_shape"));
    c.epochs = static_cast<std::int64_t>(r.get_u64("config.epochs"));
    c.schedule_period = static_cast<std::int64_t>(r.get_u64("config.schedule_period"));
    c.schedule_factor = r.get_f64("config.schedule_factor");
    c.kl_weight = r.get_f64("config.kl_weight");
    c.seed = r.get_u64("config.seed");
    c.arch = r.get_str("config.arch");
    c.init = r.get_str("config.init");
    c.mode = r.get_str("config.mode");
    c.checkpoint_every = static_cast<std::int64_t>(r.get_u64("config.checkpoint_every"));
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nn::ModelParams<float>& params,
                     const AdamState<float>& adam, const CheckpointMeta& meta) {
    if (adam.m.size() != params.size())
        throw ContractError("save_checkpoint: Adam state does not match params");
    io::ByteWriter w;
    w.put_bytes(kMagic, 4);
    w.put_u32(kVersion);
    put_config(w, meta.config);
    w.put_u64(static_cast<std::uint64_t>(meta.epoch));
    w.put_u64(static_cast<std::uint64_t>(meta.global_step));
    w.put_u64(static_cast<std::uint64_t>(adam.t));
    w.put_u32(static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& t = params.tensor(i);
        const std::size_t block_start = w.size();
        w.put_str(params.name(i));
        w.put_u32(static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) w.put_u64(static_cast<std::uint64_t>(d));
        w.put_f32s(t.data.data(), t.data.size());
        w.put_f32s(adam.m[i].data(), adam.m[i].size());
        w.put_f32s(adam.v[i].data(), adam.v[i].size());
        w.put_u32(w.crc_from(block_start));
    }
    w.put_u32(w.crc_from(4));
    io::write_file_bytes(path, w.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::vector<char> bytes = io::read_file_bytes(path);
    io::ByteReader r(bytes);
    char magic[4];
    r.get_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IntegrityError(path.string() + ": bad magic (field 'magic', not a SALC checkpoint)");
    const std::uint32_t version = r.get_u32("version");
    if (version != kVersion)
        throw IntegrityError(path.string() + ": unsupported checkpoint version " +
                             std::to_string(version) + " (want " + std::to_string(kVersion) + ")");

    Checkpoint ck;
    ck.meta.config = get_config(r);
    ck.meta.epoch = static_cast<std::int64_t>(r.get_u64("epoch"));
    ck.meta.global_step = static_cast<std::int64_t>(r.get_u64("global_step"));
    const std::int64_t adam_t = static_cast<std::int64_t>(r.get_u64("adam_t"));
    const std::uint32_t n_tensors = r.get_u32("tensor_count");

    // Rebuild the architecture to get canonical tensor names/shapes, then fill
    // from the file, verifying block CRCs as we go.
    ck.params = nn::init_params<float>(ck.meta.config.arch, ck.meta.config.init,
                                       ck.meta.config.seed);
    if (n_tensors != ck.params.size())
        throw IntegrityError(path.string() + ": tensor count " + std::to_string(n_tensors) +
                             " does not match arch '" + ck.meta.config.arch + "' (" +
                             std::to_string(ck.params.size()) + ")");
    ck.adam.init_like(ck.params);
    ck.adam.t = adam_t;

    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        const std::size_t block_start = r.offset();
        const std::string name = r.get_str("tensor.name");
        auto& t = ck.params.tensor(i);
        if (name != ck.params.name(i))
            throw IntegrityError(path.string() + ": tensor " + std::to_string(i) + " is '" + name +
                                 "', expected '" + ck.params.name(i) + "'");
        const std::uint32_t ndim = r.get_u32(name + ".ndim");
        ad::Shape shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d)
            shape[d] = static_cast<int>(r.get_u64(name + ".dim"));
        if (shape != t.shape)
            throw IntegrityError(path.string() + ": tensor '" + name + "' has shape " +
                                 ad::shape_str(shape) + ", expected " + ad::shape_str(t.shape));
        r.get_f32s(t.data.data(), t.data.size(), name + ".data");
        r.get_f32s(ck.adam.m[i].data(), ck.adam.m[i].size(), name + ".adam_m");
        r.get_f32s(ck.adam.v[i].data(), ck.adam.v[i].size(), name + ".adam_v");
        const std::size_t block_end = r.offset();
        const std::uint32_t stored = r.get_u32(name + ".crc");
        const std::uint32_t actual = r.crc_range(block_start, block_end);
        if (stored != actual)
            throw IntegrityError(path.string() + ": CRC mismatch in tensor block '" + name + "'");
    }
    const std::size_t payload_end = r.offset();
    const std::uint32_t stored = r.get_u32("file_crc");
    const std::uint32_t actual = r.crc_range(4, payload_end);
    if (stored != actual)
        throw IntegrityError(path.string() + ": file CRC mismatch (field 'file_crc')");
    if (r.remaining() != 0)
        throw IntegrityError(path.string() + ": " + std::to_string(r.remaining()) +
                             " trailing bytes after file CRC");
    return ck;
}

}  // namespace salforge::train
