#ifndef FAN_DATASET_HPP
#define FAN_DATASET_HPP

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fan/errors.hpp"
#include "fan/idx.hpp"
#include "fan/random.hpp"
#include "fan/tensor.hpp"

namespace fan {

enum class DomainTag { Source, Target };

/// A labeled or unlabeled image set. Images are [N,1,H,W] with values in
/// [0,1]; labels, when present, are class indices 0..9. Synthetic target sets
/// keep their ground truth in eval_labels, withheld from training but
/// available to evaluation code.
struct DomainDataset {
    Tensor images;
    std::vector<int> labels;
    DomainTag domain = DomainTag::Source;
    std::string provenance;
    std::vector<int> eval_labels;

    int size() const { return images.empty() ? 0 : images.dim(0); }
    bool labeled() const { return !labels.empty(); }
    int height() const { return images.dim(2); }
    int width() const { return images.dim(3); }

    void validate() const {
        if (images.ndim() != 4 || images.dim(1) != 1)
            throw DimensionError("dataset images must be [N,1,H,W], got " +
                                 shape_str(images.shape()));
        for (int64_t i = 0; i < images.size(); ++i)
            if (images[i] < 0.0f || images[i] > 1.0f)
                throw ArgumentError("pixel value outside [0,1] in dataset " + provenance);
        if (labeled() && static_cast<int>(labels.size()) != size())
            throw ArgumentError("label count " + std::to_string(labels.size()) +
                                " does not match image count " + std::to_string(size()));
        for (int l : labels)
            if (l < 0 || l > 9) throw ArgumentError("label outside 0..9 in " + provenance);
    }
};

/// One-hot rows for a label batch.
inline Tensor one_hot(const std::vector<int>& labels, int classes = 10) {
    Tensor t({static_cast<int>(labels.size()), classes});
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw ArgumentError("label " + std::to_string(labels[i]) + " outside 0.." +
                                std::to_string(classes - 1));
        t[static_cast<int64_t>(i) * classes + labels[i]] = 1.0f;
    }
    return t;
}

// ---------------------------------------------------------------------------
// IDX ingestion
// ---------------------------------------------------------------------------

/// Load an IDX image file (and optional label file) into a dataset. Pixels
/// are scaled from [0,255] bytes to [0,1]. Image/label counts must agree.
inline DomainDataset load_idx(const std::string& images_path,
                              const std::optional<std::string>& labels_path = std::nullopt) {
    idx::Images raw = idx::read_images(images_path);
    DomainDataset ds;
    ds.images = Tensor({raw.count, 1, raw.rows, raw.cols});
    for (size_t i = 0; i < raw.pixels.size(); ++i)
        ds.images[static_cast<int64_t>(i)] = static_cast<float>(raw.pixels[i]) / 255.0f;
    ds.provenance = images_path;
    if (labels_path) {
        std::vector<uint8_t> raw_labels = idx::read_labels(*labels_path);
        if (static_cast<int>(raw_labels.size()) != raw.count)
            throw FormatError("IDX count mismatch: " + std::to_string(raw.count) + " images vs " +
                              std::to_string(raw_labels.size()) + " labels");
        ds.labels.assign(raw_labels.begin(), raw_labels.end());
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Corner-aligned bilinear resize of a single [1,h,w] image; output clamped
/// to [0,1].
inline Tensor resize_bilinear(const Tensor& img, int out_h = 28, int out_w = 28) {
    if (img.ndim() != 3 || img.dim(0) != 1)
        throw DimensionError("resize_bilinear expects [1,h,w], got " + shape_str(img.shape()));
    int h = img.dim(1), w = img.dim(2);
    Tensor out({1, out_h, out_w});
    float sy = out_h > 1 ? static_cast<float>(h - 1) / static_cast<float>(out_h - 1) : 0.0f;
    float sx = out_w > 1 ? static_cast<float>(w - 1) / static_cast<float>(out_w - 1) : 0.0f;
    for (int i = 0; i < out_h; ++i) {
        float fy = i * sy;
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, h - 1);
        float wy = fy - y0;
        for (int j = 0; j < out_w; ++j) {
            float fx = j * sx;
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, w - 1);
            float wx = fx - x0;
            float v = (1 - wy) * ((1 - wx) * img[y0 * w + x0] + wx * img[y0 * w + x1]) +
                      wy * ((1 - wx) * img[y1 * w + x0] + wx * img[y1 * w + x1]);
            out[i * out_w + j] = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return out;
}

/// ITU-R 601 luminance: [3,h,w] -> [1,h,w].
inline Tensor rgb_to_gray(const Tensor& img) {
    if (img.ndim() != 3 || img.dim(0) != 3)
        throw DimensionError("rgb_to_gray expects [3,h,w], got " + shape_str(img.shape()));
    int h = img.dim(1), w = img.dim(2);
    int64_t plane = static_cast<int64_t>(h) * w;
    Tensor out({1, h, w});
    for (int64_t i = 0; i < plane; ++i)
        out[i] = std::clamp(
            0.299f * img[i] + 0.587f * img[plane + i] + 0.114f * img[2 * plane + i], 0.0f, 1.0f);
    return out;
}

/// Resize every image in a dataset to 28x28 (no-op when already 28x28).
inline DomainDataset to_28x28(const DomainDataset& ds) {
    if (ds.height() == 28 && ds.width() == 28) return ds;
    DomainDataset out = ds;
    out.images = Tensor({ds.size(), 1, 28, 28});
    int64_t in_plane = static_cast<int64_t>(ds.height()) * ds.width();
    for (int n = 0; n < ds.size(); ++n) {
        Tensor img({1, ds.height(), ds.width()});
        std::copy_n(ds.images.data() + n * in_plane, in_plane, img.data());
        Tensor r = resize_bilinear(img, 28, 28);
        std::copy_n(r.data(), 28 * 28, out.images.data() + static_cast<int64_t>(n) * 28 * 28);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Uniform sample of n items without replacement, deterministic under seed.
inline DomainDataset sample_protocol(const DomainDataset& ds, int n, uint64_t seed) {
    if (n > ds.size())
        throw ArgumentError("sample size " + std::to_string(n) + " exceeds dataset size " +
                            std::to_string(ds.size()));
    std::vector<int> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(Rng::derive(seed, "sample_protocol"));
    rng.shuffle(idx);
    idx.resize(n);

    int64_t plane = static_cast<int64_t>(ds.height()) * ds.width();
    DomainDataset out;
    out.images = Tensor({n, 1, ds.height(), ds.width()});
    out.domain = ds.domain;
    out.provenance = ds.provenance + "#sample" + std::to_string(n);
    for (int i = 0; i < n; ++i) {
        std::copy_n(ds.images.data() + idx[i] * plane, plane, out.images.data() + i * plane);
        if (ds.labeled()) out.labels.push_back(ds.labels[idx[i]]);
        if (!ds.eval_labels.empty()) out.eval_labels.push_back(ds.eval_labels[idx[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic domain pairs
// ---------------------------------------------------------------------------

enum class Shift { Invert, Noise, Brightness };

inline Shift shift_from_string(const std::string& s) {
    if (s == "invert") return Shift::Invert;
    if (s == "noise") return Shift::Noise;
    if (s == "brightness") return Shift::Brightness;
    throw ArgumentError("unknown shift kind: " + s + " (invert|noise|brightness)");
}

/// Build a (source, target) pair from a base set: source keeps its labels,
/// target is a shifted copy with labels withheld (kept in eval_labels).
/// invert: p -> 1-p; noise: + clipped N(0, 0.2); brightness: 0.6*p.
inline std::pair<DomainDataset, DomainDataset> synth_domain_pair(const DomainDataset& base,
                                                                 Shift shift, uint64_t seed) {
    DomainDataset source = base;
    source.domain = DomainTag::Source;

    DomainDataset target;
    target.images = base.images;
    target.domain = DomainTag::Target;
    target.eval_labels = base.labels;
    Rng rng(Rng::derive(seed, "synth_shift"));
    for (int64_t i = 0; i < target.images.size(); ++i) {
        float p = target.images[i];
        switch (shift) {
            case Shift::Invert: p = 1.0f - p; break;
            case Shift::Noise: p = std::clamp(p + rng.normal(0.0f, 0.2f), 0.0f, 1.0f); break;
            case Shift::Brightness: p = std::clamp(0.6f * p, 0.0f, 1.0f); break;
        }
        target.images[i] = p;
    }
    source.provenance = base.provenance + "#src";
    target.provenance = base.provenance + "#shifted";
    return {std::move(source), std::move(target)};
}

// ---------------------------------------------------------------------------
// Procedural glyph digits (self-contained base set for the synthetic recipes)
// ---------------------------------------------------------------------------

namespace detail {

// Seven-segment layout: A top, G middle, D bottom; F/B upper left/right;
// E/C lower left/right.
inline const std::array<uint8_t, 10>& segment_table() {
    // bit order: A=1, B=2, C=4, D=8, E=16, F=32, G=64
    static const std::array<uint8_t, 10> table = {
        1 | 2 | 4 | 8 | 16 | 32,     // 0
        2 | 4,                       // 1
        1 | 2 | 64 | 16 | 8,         // 2
        1 | 2 | 64 | 4 | 8,          // 3
        32 | 64 | 2 | 4,             // 4
        1 | 32 | 64 | 4 | 8,         // 5
        1 | 32 | 64 | 16 | 8 | 4,    // 6
        1 | 2 | 4,                   // 7
        1 | 2 | 4 | 8 | 16 | 32 | 64,// 8
        1 | 2 | 4 | 8 | 32 | 64      // 9
    };
    return table;
}

inline void fill_rect(Tensor& img, int w, int r0, int r1, int c0, int c1, float v) {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, img.dim(1) - 1);
    c1 = std::min(c1, w - 1);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) img[r * w + c] = std::max(img[r * w + c], v);
}

} // namespace detail

/// Deterministic 10-class seven-segment digit images with jittered position,
/// scale, stroke width, intensity and additive noise. Classes are balanced
/// round-robin.
inline DomainDataset make_glyph_dataset(int n, uint64_t seed) {
    DomainDataset ds;
    ds.images = Tensor({n, 1, 28, 28});
    ds.labels.resize(n);
    ds.provenance = "glyphs(seed=" + std::to_string(seed) + ")";
    Rng rng(Rng::derive(seed, "glyphs"));
    for (int i = 0; i < n; ++i) {
        int digit = i % 10;
        ds.labels[i] = digit;
        Tensor img({1, 28, 28});
        float s = rng.uniform(0.85f, 1.15f);
        int gw = static_cast<int>(12 * s), gh = static_cast<int>(18 * s);
        int x0 = 8 + static_cast<int>(rng.uniform(-3.0f, 3.0f));
        int y0 = 5 + static_cast<int>(rng.uniform(-3.0f, 3.0f));
        int t = rng.next_u64() % 2 == 0 ? 2 : 3; // stroke
        float v = rng.uniform(0.7f, 1.0f);
        int ym = y0 + gh / 2;
        uint8_t seg = detail::segment_table()[digit];
        if (seg & 1) detail::fill_rect(img, 28, y0, y0 + t - 1, x0, x0 + gw, v);          // A
        if (seg & 8) detail::fill_rect(img, 28, y0 + gh - t + 1, y0 + gh, x0, x0 + gw, v); // D
        if (seg & 64) detail::fill_rect(img, 28, ym - t / 2, ym + t / 2, x0, x0 + gw, v);  // G
        if (seg & 32) detail::fill_rect(img, 28, y0, ym, x0, x0 + t - 1, v);               // F
        if (seg & 2) detail::fill_rect(img, 28, y0, ym, x0 + gw - t + 1, x0 + gw, v);      // B
        if (seg & 16) detail::fill_rect(img, 28, ym, y0 + gh, x0, x0 + t - 1, v);          // E
        if (seg & 4) detail::fill_rect(img, 28, ym, y0 + gh, x0 + gw - t + 1, x0 + gw, v); // C
        for (int64_t p = 0; p < img.size(); ++p)
            img[p] = std::clamp(img[p] + rng.normal(0.0f, 0.05f), 0.0f, 1.0f);
        std::copy_n(img.data(), 28 * 28, ds.images.data() + static_cast<int64_t>(i) * 28 * 28);
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Batch gathering
// ---------------------------------------------------------------------------

inline Tensor gather_images(const DomainDataset& ds, const std::vector<int>& index) {
    int64_t plane = static_cast<int64_t>(ds.height()) * ds.width();
    Tensor out({static_cast<int>(index.size()), 1, ds.height(), ds.width()});
    for (size_t i = 0; i < index.size(); ++i)
        std::copy_n(ds.images.data() + index[i] * plane, plane, out.data() + i * plane);
    return out;
}

inline std::vector<int> gather_labels(const DomainDataset& ds, const std::vector<int>& index) {
    std::vector<int> out;
    out.reserve(index.size());
    for (int i : index) out.push_back(ds.labels[i]);
    return out;
}

} // namespace fan

#endif
