#ifndef FAN_PARAMS_HPP
#define FAN_PARAMS_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fan/autodiff.hpp"
#include "fan/errors.hpp"
#include "fan/random.hpp"
#include "fan/tensor.hpp"

namespace fan {

/// Named trainable parameters plus non-trainable buffers (BN running stats).
/// Parameters are persistent graph leaves: their gradients accumulate across
/// backward passes until zero_grad(). Iteration order is the lexicographic
/// name order of std::map, which makes hashing and serialization stable.
class ParamStore {
public:
    struct Entry {
        Var node;
        std::string group; // encoder | mapper | decoder | discriminator
        bool trainable;
    };

    Var add(const std::string& name, const std::string& group, Tensor init, bool trainable = true) {
        if (params_.count(name) || buffers_.count(name))
            throw ArgumentError("duplicate parameter name: " + name);
        Var v = make_leaf(std::move(init), trainable, name);
        params_[name] = Entry{v, group, trainable};
        return v;
    }

    /// Non-trainable state updated outside the graph (running stats).
    Tensor& add_buffer(const std::string& name, Tensor init) {
        if (params_.count(name) || buffers_.count(name))
            throw ArgumentError("duplicate buffer name: " + name);
        return buffers_.emplace(name, std::move(init)).first->second;
    }

    bool has(const std::string& name) const {
        return params_.count(name) || buffers_.count(name);
    }

    Entry& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw ArgumentError("unknown parameter: " + name);
        return it->second;
    }

    Tensor& buffer(const std::string& name) {
        auto it = buffers_.find(name);
        if (it == buffers_.end()) throw ArgumentError("unknown buffer: " + name);
        return it->second;
    }

    const std::map<std::string, Entry>& params() const { return params_; }
    const std::map<std::string, Tensor>& buffers() const { return buffers_; }
    std::map<std::string, Tensor>& buffers() { return buffers_; }

    size_t param_count() const { return params_.size(); }

    int64_t value_count() const {
        int64_t n = 0;
        for (const auto& [name, e] : params_) n += e.node->value.size();
        for (const auto& [name, t] : buffers_) n += t.size();
        return n;
    }

    void zero_grad() {
        for (auto& [name, e] : params_)
            if (!e.node->grad.empty()) e.node->grad.fill(0.0f);
    }

    /// Toggle gradient accumulation for a group ("" = all). Used to freeze
    /// the discriminator during generator updates and the whole source model
    /// during stage 2.
    void set_trainable(bool trainable, const std::string& group = "") {
        for (auto& [name, e] : params_)
            if (group.empty() || e.group == group) e.node->requires_grad = trainable;
    }

    /// Whether gradient flow is enabled for every parameter of a group.
    bool trainable(const std::string& group = "") const {
        for (const auto& [name, e] : params_)
            if (group.empty() || e.group == group)
                if (!e.node->requires_grad) return false;
        return true;
    }

    /// Bit-exact copy of all values and buffers from another store with the
    /// same layout. Gradients and Adam state are not copied.
    void copy_values_from(const ParamStore& other) {
        if (other.params_.size() != params_.size() || other.buffers_.size() != buffers_.size())
            throw ArgumentError("ParamStore layout mismatch in copy_values_from");
        auto it = other.params_.begin();
        for (auto& [name, e] : params_) {
            if (it->first != name || !it->second.node->value.same_shape(e.node->value))
                throw ArgumentError("parameter mismatch at " + name);
            e.node->value = it->second.node->value;
            ++it;
        }
        auto bt = other.buffers_.begin();
        for (auto& [name, t] : buffers_) {
            if (bt->first != name || !bt->second.same_shape(t))
                throw ArgumentError("buffer mismatch at " + name);
            t = bt->second;
            ++bt;
        }
    }

private:
    std::map<std::string, Entry> params_;
    std::map<std::string, Tensor> buffers_;
};

// ---------------------------------------------------------------------------
// Weight initializers
// ---------------------------------------------------------------------------

inline Tensor he_normal(Shape shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (int64_t i = 0, n = t.size(); i < n; ++i) t[i] = rng.normal(0.0f, stddev);
    return t;
}

} // namespace fan

#endif
