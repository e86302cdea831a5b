#ifndef FAN_TENSOR_HPP
#define FAN_TENSOR_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fan/errors.hpp"

namespace fan {

using Shape = std::vector<int>;

inline int64_t shape_size(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

/// Dense row-major float32 tensor. data length == product(shape) always.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<size_t>(shape_size(shape_)), 0.0f);
    }

    Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(static_cast<size_t>(shape_size(shape_)), fill);
    }

    Tensor(Shape shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (static_cast<int64_t>(data_.size()) != shape_size(shape_))
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_str(shape_));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0f); }
    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const Shape& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const {
        if (i < 0 || i >= ndim())
            throw DimensionError("dim index " + std::to_string(i) + " out of range for " +
                                 shape_str(shape_));
        return shape_[i];
    }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (float v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// Same data, new shape (sizes must agree).
    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != size())
            throw DimensionError("cannot reshape " + shape_str(shape_) + " to " +
                                 shape_str(shape));
        return Tensor(std::move(shape), data_);
    }

    float scalar_value() const {
        if (size() != 1) throw DimensionError("scalar_value on tensor " + shape_str(shape_));
        return data_[0];
    }

private:
    void validate_shape() const {
        for (int d : shape_)
            if (d <= 0)
                throw DimensionError("non-positive dimension in shape " + shape_str(shape_));
    }

    Shape shape_;
    std::vector<float> data_;
};

/// Global toggle for per-op non-finite output detection.
inline std::atomic<bool>& finite_checks_flag() {
    static std::atomic<bool> on{true};
    return on;
}
inline void set_finite_checks(bool on) { finite_checks_flag().store(on); }

inline void check_finite(const Tensor& t, const char* op) {
    if (!finite_checks_flag().load(std::memory_order_relaxed)) return;
    if (!t.all_finite())
        throw NumericError(std::string("non-finite values in output of ") + op);
}

} // namespace fan

#endif
