#ifndef FAN_CHECKPOINT_HPP
#define FAN_CHECKPOINT_HPP

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fan/errors.hpp"
#include "fan/model.hpp"
#include "fan/params.hpp"

namespace fan {

/// Checkpoint container (see docs/formats.md): ASCII magic "FANCKPT1",
/// little-endian u32 format version, architecture header (variant string,
/// split sizes, init seed), then one record per parameter and per buffer in
/// name order: name, trainable flag, shape, raw little-endian f32 payload.
/// Save/load round-trips are bit-exact.

namespace ckpt {

constexpr char kMagic[8] = {'F', 'A', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

inline void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline uint32_t read_u32(std::istream& in, const std::string& path) {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return v;
}
inline uint64_t read_u64(std::istream& in, const std::string& path) {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return v;
}
inline std::string read_string(std::istream& in, const std::string& path) {
    uint32_t n = read_u32(in, path);
    if (n > (1u << 20)) throw FormatError("implausible string length in checkpoint: " + path);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw FormatError("truncated checkpoint: " + path);
    return s;
}

inline void write_tensor_record(std::ostream& out, const std::string& name, const Tensor& t,
                                bool trainable) {
    write_string(out, name);
    out.put(trainable ? 1 : 0);
    write_u32(out, static_cast<uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) write_u32(out, static_cast<uint32_t>(t.dim(i)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(float) * t.size()));
}

struct TensorRecord {
    std::string name;
    bool trainable = false;
    Tensor tensor;
};

inline TensorRecord read_tensor_record(std::istream& in, const std::string& path) {
    TensorRecord r;
    r.name = read_string(in, path);
    int flag = in.get();
    if (flag != 0 && flag != 1) throw FormatError("bad trainable flag in checkpoint: " + path);
    r.trainable = flag == 1;
    uint32_t ndim = read_u32(in, path);
    if (ndim > 8) throw FormatError("implausible tensor rank in checkpoint: " + path);
    Shape shape;
    for (uint32_t i = 0; i < ndim; ++i)
        shape.push_back(static_cast<int>(read_u32(in, path)));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(float) * t.size()));
    if (!in) throw FormatError("truncated tensor payload in checkpoint: " + path);
    r.tensor = std::move(t);
    return r;
}

struct Header {
    std::string kind; // "fan-model" | "discriminator"
    std::string variant;
    uint32_t d_dss = 0, d_tss = 0;
    uint64_t seed = 0;
    uint32_t param_count = 0, buffer_count = 0;
};

inline void write_header(std::ostream& out, const Header& h) {
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    write_string(out, h.kind);
    write_string(out, h.variant);
    write_u32(out, h.d_dss);
    write_u32(out, h.d_tss);
    write_u64(out, h.seed);
    write_u32(out, h.param_count);
    write_u32(out, h.buffer_count);
}

inline Header read_header(std::istream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("not a FAN checkpoint: " + path);
    uint32_t version = read_u32(in, path);
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " +
                          path);
    Header h;
    h.kind = read_string(in, path);
    h.variant = read_string(in, path);
    h.d_dss = read_u32(in, path);
    h.d_tss = read_u32(in, path);
    h.seed = read_u64(in, path);
    h.param_count = read_u32(in, path);
    h.buffer_count = read_u32(in, path);
    return h;
}

inline void write_store(std::ostream& out, const ParamStore& store) {
    for (const auto& [name, e] : store.params())
        write_tensor_record(out, name, e.node->value, e.trainable);
    for (const auto& [name, t] : store.buffers()) write_tensor_record(out, name, t, false);
}

inline void read_store_into(std::istream& in, const std::string& path, const Header& h,
                            ParamStore& store) {
    if (h.param_count != store.param_count() ||
        h.buffer_count != store.buffers().size())
        throw FormatError("checkpoint entry counts do not match architecture: " + path);
    for (uint32_t i = 0; i < h.param_count; ++i) {
        TensorRecord r = read_tensor_record(in, path);
        auto& e = store.at(r.name);
        if (!e.node->value.same_shape(r.tensor))
            throw FormatError("shape mismatch for " + r.name + " in " + path);
        e.node->value = std::move(r.tensor);
    }
    for (uint32_t i = 0; i < h.buffer_count; ++i) {
        TensorRecord r = read_tensor_record(in, path);
        Tensor& b = store.buffer(r.name);
        if (!b.same_shape(r.tensor))
            throw FormatError("shape mismatch for buffer " + r.name + " in " + path);
        b = std::move(r.tensor);
    }
}

} // namespace ckpt

inline void save_checkpoint(const std::string& path, const FanModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create checkpoint file: " + path);
    ckpt::Header h;
    h.kind = "fan-model";
    h.variant = variant_name(model.variant());
    h.d_dss = static_cast<uint32_t>(model.d_dss());
    h.d_tss = static_cast<uint32_t>(model.d_tss());
    h.seed = model.seed();
    h.param_count = static_cast<uint32_t>(model.params().param_count());
    h.buffer_count = static_cast<uint32_t>(model.params().buffers().size());
    ckpt::write_header(out, h);
    ckpt::write_store(out, model.params());
    if (!out) throw FormatError("failed writing checkpoint: " + path);
}

inline void save_checkpoint(const std::string& path, const Discriminator& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create checkpoint file: " + path);
    ckpt::Header h;
    h.kind = "discriminator";
    h.variant = "-";
    h.param_count = static_cast<uint32_t>(d.params().param_count());
    h.buffer_count = static_cast<uint32_t>(d.params().buffers().size());
    ckpt::write_header(out, h);
    ckpt::write_store(out, d.params());
    if (!out) throw FormatError("failed writing checkpoint: " + path);
}

inline FanModel load_fan_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    ckpt::Header h = ckpt::read_header(in, path);
    if (h.kind != "fan-model")
        throw FormatError("checkpoint " + path + " holds a " + h.kind + ", not a fan-model");
    Variant v = variant_from_string(h.variant);
    int d_dss = static_cast<int>(h.d_dss), d_tss = static_cast<int>(h.d_tss);
    if (v == Variant::Joint) d_dss = d_tss = 50; // constructor overrides for joint
    FanModel model(v, d_dss, d_tss, h.seed);
    ckpt::read_store_into(in, path, h, model.params());
    return model;
}

inline Discriminator load_discriminator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    ckpt::Header h = ckpt::read_header(in, path);
    if (h.kind != "discriminator")
        throw FormatError("checkpoint " + path + " holds a " + h.kind + ", not a discriminator");
    Discriminator d(0);
    ckpt::read_store_into(in, path, h, d.params());
    return d;
}

} // namespace fan

#endif
