#ifndef FAN_IDX_HPP
#define FAN_IDX_HPP

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fan/errors.hpp"

namespace fan {

/// IDX container (the digits datasets' native format), bit-exact:
/// 4-byte big-endian magic (0x00000801 labels / 0x00000803 images), then one
/// big-endian uint32 per dimension, then the unsigned-byte payload.

namespace idx {

constexpr uint32_t kImagesMagic = 0x00000803u;
constexpr uint32_t kLabelsMagic = 0x00000801u;

inline uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated IDX header in " + path);
    return (static_cast<uint32_t>(b[0]) << 24) | (static_cast<uint32_t>(b[1]) << 16) |
           (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

inline void write_be32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(b), 4);
}

struct Images {
    int count = 0, rows = 0, cols = 0;
    std::vector<uint8_t> pixels; // count*rows*cols
};

inline Images read_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open IDX image file: " + path);
    uint32_t magic = read_be32(in, path);
    if (magic != kImagesMagic)
        throw FormatError("bad IDX image magic in " + path + " (expected 0x00000803)");
    Images img;
    img.count = static_cast<int>(read_be32(in, path));
    img.rows = static_cast<int>(read_be32(in, path));
    img.cols = static_cast<int>(read_be32(in, path));
    if (img.count <= 0 || img.rows <= 0 || img.cols <= 0)
        throw FormatError("non-positive IDX dimensions in " + path);
    size_t n = static_cast<size_t>(img.count) * img.rows * img.cols;
    img.pixels.resize(n);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError("truncated IDX image payload in " + path + " (header claims " +
                          std::to_string(n) + " bytes)");
    return img;
}

inline std::vector<uint8_t> read_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open IDX label file: " + path);
    uint32_t magic = read_be32(in, path);
    if (magic != kLabelsMagic)
        throw FormatError("bad IDX label magic in " + path + " (expected 0x00000801)");
    size_t n = read_be32(in, path);
    std::vector<uint8_t> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError("truncated IDX label payload in " + path);
    return labels;
}

inline void write_images(const std::string& path, const std::vector<uint8_t>& pixels, int count,
                         int rows, int cols) {
    if (static_cast<size_t>(count) * rows * cols != pixels.size())
        throw ArgumentError("IDX image payload size does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create IDX file: " + path);
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<uint32_t>(count));
    write_be32(out, static_cast<uint32_t>(rows));
    write_be32(out, static_cast<uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

inline void write_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot create IDX file: " + path);
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

} // namespace idx

} // namespace fan

#endif
