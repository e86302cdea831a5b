#ifndef FAN_MODEL_HPP
#define FAN_MODEL_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fan/adam.hpp"
#include "fan/ops.hpp"
#include "fan/params.hpp"
#include "fan/sha256.hpp"

namespace fan {

// ---------------------------------------------------------------------------
// Architecture variants (the ablation family)
// ---------------------------------------------------------------------------

/// Joint: one 100-d latent serves both reconstruction and classification.
/// Separation: disjoint halves, decoder sees h_d only.
/// Concatenation: like separation but the decoder input is [h_d, h_l].
/// FullFactorization: concatenation plus the orthogonality loss in stage 1.
enum class Variant { Joint, Separation, Concatenation, FullFactorization };

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Joint: return "joint";
        case Variant::Separation: return "separation";
        case Variant::Concatenation: return "concatenation";
        case Variant::FullFactorization: return "full-factorization";
    }
    return "?";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "joint") return Variant::Joint;
    if (s == "separation") return Variant::Separation;
    if (s == "concatenation") return Variant::Concatenation;
    if (s == "full-factorization" || s == "full") return Variant::FullFactorization;
    throw ConfigError("unknown architecture variant: " + s);
}

// ---------------------------------------------------------------------------
// Layer helpers (parameters registered into a ParamStore)
// ---------------------------------------------------------------------------

namespace layers {

struct Conv2d {
    Var w, b;
    int stride = 1, pad = 0;
    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, const std::string& group, int in_ch,
           int out_ch, int k, int stride_, int pad_, Rng& rng)
        : stride(stride_), pad(pad_) {
        w = ps.add(name + ".w", group, he_normal({out_ch, in_ch, k, k}, in_ch * k * k, rng));
        b = ps.add(name + ".b", group, Tensor({out_ch}));
    }
    Var operator()(const Var& x) const { return conv2d(x, w, b, stride, pad); }
};

struct Linear {
    Var w, b;
    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, const std::string& group, int in, int out,
           Rng& rng) {
        w = ps.add(name + ".w", group, he_normal({in, out}, in, rng));
        b = ps.add(name + ".b", group, Tensor({out}));
    }
    Var operator()(const Var& x) const { return linear(x, w, b); }
};

struct BatchNorm {
    Var gamma, beta;
    Tensor* running_mean = nullptr;
    Tensor* running_var = nullptr;
    BatchNorm() = default;
    BatchNorm(ParamStore& ps, const std::string& name, const std::string& group, int c) {
        gamma = ps.add(name + ".gamma", group, Tensor({c}, 1.0f));
        beta = ps.add(name + ".beta", group, Tensor({c}));
        running_mean = &ps.add_buffer(name + ".running_mean", Tensor({c}));
        running_var = &ps.add_buffer(name + ".running_var", Tensor({c}, 1.0f));
    }
    Var operator()(const Var& x, bool train) const {
        return batch_norm(x, gamma, beta, *running_mean, *running_var, train);
    }
};

} // namespace layers

// ---------------------------------------------------------------------------
// Parameter hashing (frozen-source invariant)
// ---------------------------------------------------------------------------

inline std::string param_store_hash(const ParamStore& store) {
    Sha256 h;
    for (const auto& [name, e] : store.params()) {
        h.update(name.data(), name.size());
        h.update(e.node->value.data(), sizeof(float) * e.node->value.size());
    }
    for (const auto& [name, t] : store.buffers()) {
        h.update(name.data(), name.size());
        h.update(t.data(), sizeof(float) * t.size());
    }
    return h.hex();
}

// ---------------------------------------------------------------------------
// FAN model: factorized encoder + logit mapper + decoder
// ---------------------------------------------------------------------------

/// Per-batch latent factorization: domain-specific half, task-specific half,
/// and the classification logits h_l = M(h_t).
struct EncoderOutput {
    Var h_d;
    Var h_t;
    Var h_l;
};

class FanModel {
public:
    static constexpr int kLatentWidth = 100;
    static constexpr int kClasses = 10;

    FanModel(Variant variant, int d_dss, int d_tss, uint64_t seed)
        : variant_(variant), d_dss_(d_dss), d_tss_(d_tss), seed_(seed) {
        if (variant == Variant::Joint) {
            // the whole latent is shared by both roles
            d_dss_ = kLatentWidth;
            d_tss_ = kLatentWidth;
        } else {
            if (d_dss_ + d_tss_ != kLatentWidth)
                throw ConfigError("split sizes must sum to " + std::to_string(kLatentWidth) +
                                  ", got " + std::to_string(d_dss_) + "+" +
                                  std::to_string(d_tss_));
            if (variant == Variant::FullFactorization && d_dss_ != d_tss_)
                throw ConfigError("full factorization requires equal split sizes for the "
                                  "orthogonality loss");
        }
        Rng rng(Rng::derive(seed, "fan-model-init"));
        // Encoder: modified LeNet with BN, conv5x20 -> conv5x50, two FC layers.
        conv1_ = layers::Conv2d(params_, "encoder.conv1", "encoder", 1, 20, 5, 1, 0, rng);
        bn1_ = layers::BatchNorm(params_, "encoder.bn1", "encoder", 20);
        conv2_ = layers::Conv2d(params_, "encoder.conv2", "encoder", 20, 50, 5, 1, 0, rng);
        bn2_ = layers::BatchNorm(params_, "encoder.bn2", "encoder", 50);
        fc1_ = layers::Linear(params_, "encoder.fc1", "encoder", 50 * 4 * 4, 500, rng);
        bn3_ = layers::BatchNorm(params_, "encoder.bn3", "encoder", 500);
        fc2_ = layers::Linear(params_, "encoder.fc2", "encoder", 500, kLatentWidth, rng);
        // Logit mapping M
        mapper_ = layers::Linear(params_, "mapper.fc", "mapper", d_tss_, kClasses, rng);
        // Decoder: FC300 -> FC to 16x14x14 -> conv5x16 x2 -> upsample -> conv3x16 -> conv3x1
        dec_fc1_ = layers::Linear(params_, "decoder.fc1", "decoder", decoder_input_width(), 300, rng);
        dec_bn1_ = layers::BatchNorm(params_, "decoder.bn1", "decoder", 300);
        dec_fc2_ = layers::Linear(params_, "decoder.fc2", "decoder", 300, 16 * 14 * 14, rng);
        dec_bn2_ = layers::BatchNorm(params_, "decoder.bn2", "decoder", 16);
        dec_conv1_ = layers::Conv2d(params_, "decoder.conv1", "decoder", 16, 16, 5, 1, 2, rng);
        dec_bn3_ = layers::BatchNorm(params_, "decoder.bn3", "decoder", 16);
        dec_conv2_ = layers::Conv2d(params_, "decoder.conv2", "decoder", 16, 16, 5, 1, 2, rng);
        dec_bn4_ = layers::BatchNorm(params_, "decoder.bn4", "decoder", 16);
        dec_conv3_ = layers::Conv2d(params_, "decoder.conv3", "decoder", 16, 16, 3, 1, 1, rng);
        dec_bn5_ = layers::BatchNorm(params_, "decoder.bn5", "decoder", 16);
        dec_conv4_ = layers::Conv2d(params_, "decoder.conv4", "decoder", 16, 1, 3, 1, 1, rng);
    }

    FanModel(const FanModel&) = delete;
    FanModel& operator=(const FanModel&) = delete;
    FanModel(FanModel&&) = default;
    FanModel& operator=(FanModel&&) = default;

    Variant variant() const { return variant_; }
    int d_dss() const { return d_dss_; }
    int d_tss() const { return d_tss_; }
    uint64_t seed() const { return seed_; }

    int decoder_input_width() const {
        switch (variant_) {
            case Variant::Joint: return kLatentWidth;
            case Variant::Separation: return d_dss_;
            default: return d_dss_ + kClasses;
        }
    }

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    std::string param_hash() const { return param_store_hash(params_); }

    /// conv5x20 -> ReLU -> BN -> pool -> conv5x50 -> ReLU -> BN -> pool ->
    /// FC500 (+ReLU+BN) -> FC100 -> split -> h_l = M(h_t).
    EncoderOutput encode(const Var& x, bool train) {
        const Shape& s = x->value.shape();
        if (s.size() != 4 || s[1] != 1 || s[2] != 28 || s[3] != 28)
            throw DimensionError("encoder expects [B,1,28,28], got " + shape_str(s));
        Var h = maxpool2x2(bn1_(relu(conv1_(x)), train)); // [B,20,12,12]
        h = maxpool2x2(bn2_(relu(conv2_(h)), train));     // [B,50,4,4]
        h = flatten(h);                                   // [B,800]
        h = bn3_(relu(fc1_(h)), train);                   // [B,500]
        h = fc2_(h);                                      // [B,100]
        EncoderOutput out;
        if (variant_ == Variant::Joint) {
            out.h_d = h;
            out.h_t = h;
        } else {
            auto parts = split(h, {d_dss_, d_tss_}, 1);
            out.h_d = parts[0];
            out.h_t = parts[1];
        }
        out.h_l = mapper_(out.h_t);
        return out;
    }

    /// Variant-dependent input (h_d | [h_d, h_l]) -> [B,1,28,28]; every layer
    /// followed by ReLU and BN except the final linear conv.
    Var decode(const Var& h_d, const Var& h_l, bool train) {
        Var in;
        switch (variant_) {
            case Variant::Joint:
            case Variant::Separation: in = h_d; break;
            default: in = concat(h_d, h_l, 1); break;
        }
        if (in->value.dim(1) != decoder_input_width())
            throw DimensionError("decoder input width " + std::to_string(in->value.dim(1)) +
                                 " != expected " + std::to_string(decoder_input_width()));
        int B = in->value.dim(0);
        Var h = dec_bn1_(relu(dec_fc1_(in)), train);              // [B,300]
        h = reshape(dec_fc2_(h), {B, 16, 14, 14});
        h = dec_bn2_(relu(h), train);                             // [B,16,14,14]
        h = dec_bn3_(relu(dec_conv1_(h)), train);
        h = dec_bn4_(relu(dec_conv2_(h)), train);
        h = upsample_nearest(h, 28, 28);                          // [B,16,28,28]
        h = dec_bn5_(relu(dec_conv3_(h)), train);
        return dec_conv4_(h);                                     // [B,1,28,28], linear
    }

    /// Fresh model with identical architecture and bit-identical values.
    FanModel clone() const {
        FanModel copy(variant_, d_dss_, d_tss_, seed_);
        copy.params_.copy_values_from(params_);
        return copy;
    }

private:
    Variant variant_;
    int d_dss_, d_tss_;
    uint64_t seed_;
    ParamStore params_;

    layers::Conv2d conv1_, conv2_;
    layers::BatchNorm bn1_, bn2_, bn3_;
    layers::Linear fc1_, fc2_, mapper_;
    layers::Linear dec_fc1_, dec_fc2_;
    layers::BatchNorm dec_bn1_, dec_bn2_, dec_bn3_, dec_bn4_, dec_bn5_;
    layers::Conv2d dec_conv1_, dec_conv2_, dec_conv3_, dec_conv4_;
};

// ---------------------------------------------------------------------------
// Discriminator on the logit space
// ---------------------------------------------------------------------------

/// Three FC layers (10 -> 500 -> 500 -> 1), ReLU+BN after the first two.
/// Output is a single pre-sigmoid score; sigmoid(score) = P(source).
class Discriminator {
public:
    explicit Discriminator(uint64_t seed) {
        Rng rng(Rng::derive(seed, "discriminator-init"));
        fc1_ = layers::Linear(params_, "discriminator.fc1", "discriminator", 10, 500, rng);
        bn1_ = layers::BatchNorm(params_, "discriminator.bn1", "discriminator", 500);
        fc2_ = layers::Linear(params_, "discriminator.fc2", "discriminator", 500, 500, rng);
        bn2_ = layers::BatchNorm(params_, "discriminator.bn2", "discriminator", 500);
        fc3_ = layers::Linear(params_, "discriminator.fc3", "discriminator", 500, 1, rng);
    }

    Discriminator(const Discriminator&) = delete;
    Discriminator& operator=(const Discriminator&) = delete;
    Discriminator(Discriminator&&) = default;
    Discriminator& operator=(Discriminator&&) = default;

    /// Pre-sigmoid score [B,1]. With freeze_params the weights enter the
    /// graph as constants, so gradients flow through to the logits but never
    /// into the discriminator itself (generator-step contract).
    Var score(const Var& h_l, bool train, bool freeze_params = false) {
        if (h_l->value.ndim() != 2 || h_l->value.dim(1) != 10)
            throw DimensionError("discriminator expects [B,10] logits, got " +
                                 shape_str(h_l->value.shape()));
        auto P = [&](const Var& p) { return freeze_params ? constant(p->value) : p; };
        Var h = add_bias(matmul(h_l, P(fc1_.w)), P(fc1_.b));
        h = batch_norm(relu(h), P(bn1_.gamma), P(bn1_.beta), *bn1_.running_mean,
                       *bn1_.running_var, train);
        h = add_bias(matmul(h, P(fc2_.w)), P(fc2_.b));
        h = batch_norm(relu(h), P(bn2_.gamma), P(bn2_.beta), *bn2_.running_mean,
                       *bn2_.running_var, train);
        return add_bias(matmul(h, P(fc3_.w)), P(fc3_.b));
    }

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::string param_hash() const { return param_store_hash(params_); }

private:
    ParamStore params_;
    layers::Linear fc1_, fc2_, fc3_;
    layers::BatchNorm bn1_, bn2_;
};

} // namespace fan

#endif
