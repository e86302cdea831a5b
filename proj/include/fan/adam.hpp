#ifndef FAN_ADAM_HPP
#define FAN_ADAM_HPP

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fan/params.hpp"

namespace fan {

/// Adam with bias correction. Moment buffers are keyed by parameter name and
/// created on first step; only parameters flagged trainable at construction
/// time are updated.
class Adam {
public:
    Adam(ParamStore& store, float lr, float beta1 = 0.9f, float beta2 = 0.999f,
         float eps = 1e-8f)
        : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& [name, e] : store.params())
            if (e.trainable) {
                m_[name] = Tensor(e.node->value.shape());
                v_[name] = Tensor(e.node->value.shape());
            }
    }

    void step() {
        ++t_;
        float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
        float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
        for (auto& [name, m] : m_) {
            auto& e = store_->at(name);
            if (e.node->grad.empty()) continue; // no gradient reached this param
            Tensor& v = v_[name];
            Tensor& val = e.node->value;
            const Tensor& g = e.node->grad;
            for (int64_t i = 0, n = val.size(); i < n; ++i) {
                m[i] = beta1_ * m[i] + (1.0f - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0f - beta2_) * g[i] * g[i];
                float mhat = m[i] / bc1;
                float vhat = v[i] / bc2;
                val[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
            check_finite(val, "adam_step");
        }
    }

    void zero_grad() { store_->zero_grad(); }

    float lr() const { return lr_; }
    int64_t steps() const { return t_; }

private:
    ParamStore* store_;
    float lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

} // namespace fan

#endif
