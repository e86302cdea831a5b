#ifndef FAN_LOSSES_HPP
#define FAN_LOSSES_HPP

#include <string>

#include "fan/dataset.hpp"
#include "fan/model.hpp"
#include "fan/ops.hpp"

namespace fan {

/// Stage-1 weights (alpha, beta) and stage-2 weights (mu, nu).
/// Defaults follow the digits experiments: alpha=2, beta=1, mu=2, nu=1.
struct LossWeights {
    float alpha = 2.0f;
    float beta = 1.0f;
    float mu = 2.0f;
    float nu = 1.0f;

    void validate() const {
        if (alpha < 0 || beta < 0 || mu < 0 || nu < 0)
            throw ConfigError("loss weights must be nonnegative");
    }
};

/// Classification loss: mean cross-entropy of softmax(h_l) against one-hot
/// targets, log-sum-exp stabilized.
inline Var loss_classification(const Var& h_l, const Tensor& y_onehot) {
    return cross_entropy_mean(h_l, y_onehot);
}

/// Orthogonality penalty between the two subspaces: mean over the batch of
/// the squared per-sample inner product (h_t . h_d)^2.
inline Var loss_mutual(const Var& h_t, const Var& h_d) {
    if (h_t->value.dim(1) != h_d->value.dim(1))
        throw DimensionError("loss_mutual requires equal subspace widths, got " +
                             std::to_string(h_t->value.dim(1)) + " and " +
                             std::to_string(h_d->value.dim(1)));
    return mean_all(square(row_dot(h_t, h_d)));
}

/// Reconstruction loss: mean squared error between input and reconstruction.
inline Var loss_reconstruction(const Tensor& x, const Var& x_hat) {
    return mse_mean(x_hat, constant(x));
}

/// Stage-1 total with per-term breakdown. The orthogonality term is active
/// only under full factorization; all variants train classification and
/// reconstruction.
struct SourceLoss {
    Var total;
    double classification = 0.0;
    double mutual = 0.0;
    double reconstruction = 0.0;
    double value = 0.0;
    bool mutual_active = false;
};

inline SourceLoss loss_source_total(const Tensor& x, const Tensor& y_onehot, FanModel& model,
                                    const LossWeights& w, bool train = true) {
    w.validate();
    Var xv = constant(x);
    EncoderOutput enc = model.encode(xv, train);
    Var x_hat = model.decode(enc.h_d, enc.h_l, train);

    SourceLoss out;
    Var l_c = loss_classification(enc.h_l, y_onehot);
    Var l_r = loss_reconstruction(x, x_hat);
    out.classification = l_c->value.scalar_value();
    out.reconstruction = l_r->value.scalar_value();
    out.total = add(scale(l_c, w.alpha), l_r);
    if (model.variant() == Variant::FullFactorization) {
        Var l_m = loss_mutual(enc.h_t, enc.h_d);
        out.mutual = l_m->value.scalar_value();
        out.mutual_active = true;
        out.total = add(out.total, scale(l_m, w.beta));
    }
    out.value = out.total->value.scalar_value();
    return out;
}

/// Discriminator objective: -E_s log D(h_l^s) - E_t log(1 - D(h_l^t)), with
/// both logit batches detached so no gradient reaches either encoder.
/// Computed as logit-space binary cross-entropy.
inline Var loss_adversarial_d(Discriminator& d, const Var& source_logits,
                              const Var& target_logits, bool train = true) {
    Var s_src = d.score(detach(source_logits), train);
    Var s_tgt = d.score(detach(target_logits), train);
    return add(bce_with_logits_mean(s_src, 1.0f), bce_with_logits_mean(s_tgt, 0.0f));
}

/// Generator-side adversarial term: -E_t log D(h_l^t) (non-saturating,
/// inverted labels). Discriminator parameters enter as constants, so the
/// gradient flows only through the target encoder and mapper.
inline Var loss_adversarial_m(Discriminator& d, const Var& target_logits, bool train = true) {
    Var s_tgt = d.score(target_logits, train, /*freeze_params=*/true);
    return bce_with_logits_mean(s_tgt, 1.0f);
}

/// Fraction of correct source/target calls at threshold 0.5; monitoring only.
inline double discriminator_accuracy(const Tensor& source_scores, const Tensor& target_scores) {
    int64_t correct = 0;
    for (int64_t i = 0; i < source_scores.size(); ++i)
        if (source_scores[i] > 0.0f) ++correct;
    for (int64_t i = 0; i < target_scores.size(); ++i)
        if (target_scores[i] <= 0.0f) ++correct;
    return static_cast<double>(correct) /
           static_cast<double>(source_scores.size() + target_scores.size());
}

} // namespace fan

#endif
