#ifndef FAN_GRADCHECK_HPP
#define FAN_GRADCHECK_HPP

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fan/ops.hpp"
#include "fan/params.hpp"
#include "fan/random.hpp"

namespace fan {

/// Central finite-difference verification of every differentiable op.
///
/// The oracle evaluates a double-precision *reference* forward (naive loops,
/// written independently of the im2col/GEMM production path) and never calls
/// any backward code, so it is independent of the implementations it checks.
/// Step 1e-3, relative tolerance 1e-3 (1e-2 for batch norm); inputs are
/// sampled away from ReLU kinks and pooling ties.

struct OpCheck {
    std::string op;
    int points = 0;
    int failures = 0;
    double max_rel_err = 0.0;
    double tol = 1e-3;
    bool passed() const { return failures == 0; }
};

struct GradSuiteReport {
    std::vector<OpCheck> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed()) return false;
        return !checks.empty();
    }
    int total_points() const {
        int n = 0;
        for (const auto& c : checks) n += c.points;
        return n;
    }
    int total_failures() const {
        int n = 0;
        for (const auto& c : checks) n += c.failures;
        return n;
    }
};

// ---------------------------------------------------------------------------
// Double-precision reference forwards (brute-force loops)
// ---------------------------------------------------------------------------

namespace ref64 {

using V = std::vector<double>;

inline V matmul(const V& a, const V& b, int m, int k, int n) {
    V c(static_cast<size_t>(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double av = a[i * k + p];
            for (int j = 0; j < n; ++j) c[i * n + j] += av * b[p * n + j];
        }
    return c;
}

inline V conv2d(const V& x, const V& w, const V& bias, int N, int C, int H, int W, int F, int K,
                int stride, int pad) {
    int OH = (H + 2 * pad - K) / stride + 1;
    int OW = (W + 2 * pad - K) / stride + 1;
    V y(static_cast<size_t>(N) * F * OH * OW, 0.0);
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f)
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow) {
                    double s = bias.empty() ? 0.0 : bias[f];
                    for (int c = 0; c < C; ++c)
                        for (int ki = 0; ki < K; ++ki)
                            for (int kj = 0; kj < K; ++kj) {
                                int ih = oh * stride - pad + ki;
                                int iw = ow * stride - pad + kj;
                                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                                s += x[((n * C + c) * H + ih) * W + iw] *
                                     w[((f * C + c) * K + ki) * K + kj];
                            }
                    y[((n * F + f) * OH + oh) * OW + ow] = s;
                }
    return y;
}

inline V conv2d_transpose(const V& x, const V& w, const V& bias, int N, int Cin, int H, int W,
                          int Cout, int K, int stride, int pad) {
    int OH = (H - 1) * stride - 2 * pad + K;
    int OW = (W - 1) * stride - 2 * pad + K;
    V y(static_cast<size_t>(N) * Cout * OH * OW, 0.0);
    if (!bias.empty())
        for (int n = 0; n < N; ++n)
            for (int f = 0; f < Cout; ++f)
                for (int i = 0; i < OH * OW; ++i) y[(n * Cout + f) * OH * OW + i] = bias[f];
    for (int n = 0; n < N; ++n)
        for (int ci = 0; ci < Cin; ++ci)
            for (int h = 0; h < H; ++h)
                for (int ww = 0; ww < W; ++ww) {
                    double xv = x[((n * Cin + ci) * H + h) * W + ww];
                    for (int co = 0; co < Cout; ++co)
                        for (int ki = 0; ki < K; ++ki)
                            for (int kj = 0; kj < K; ++kj) {
                                int oh = h * stride - pad + ki;
                                int ow = ww * stride - pad + kj;
                                if (oh < 0 || oh >= OH || ow < 0 || ow >= OW) continue;
                                y[((n * Cout + co) * OH + oh) * OW + ow] +=
                                    xv * w[((ci * Cout + co) * K + ki) * K + kj];
                            }
                }
    return y;
}

inline V maxpool2x2(const V& x, int N, int C, int H, int W) {
    int OH = (H + 1) / 2, OW = (W + 1) / 2;
    V y(static_cast<size_t>(N) * C * OH * OW);
    size_t o = 0;
    for (int nc = 0; nc < N * C; ++nc)
        for (int oh = 0; oh < OH; ++oh)
            for (int ow = 0; ow < OW; ++ow, ++o) {
                int i0 = 2 * oh, j0 = 2 * ow;
                int i1 = std::min(i0 + 1, H - 1), j1 = std::min(j0 + 1, W - 1);
                double m = x[nc * H * W + i0 * W + j0];
                m = std::max(m, x[nc * H * W + i0 * W + j1]);
                m = std::max(m, x[nc * H * W + i1 * W + j0]);
                m = std::max(m, x[nc * H * W + i1 * W + j1]);
                y[o] = m;
            }
    return y;
}

inline V upsample_nearest(const V& x, int N, int C, int H, int W, int th, int tw) {
    int sh = th / H, sw = tw / W;
    V y(static_cast<size_t>(N) * C * th * tw);
    for (int nc = 0; nc < N * C; ++nc)
        for (int i = 0; i < th; ++i)
            for (int j = 0; j < tw; ++j)
                y[nc * th * tw + i * tw + j] = x[nc * H * W + (i / sh) * W + j / sw];
    return y;
}

inline V batch_norm(const V& x, const V& gamma, const V& beta, const V& rm, const V& rv, int N,
                    int C, int spatial, bool train, double eps = 1e-5) {
    V y(x.size());
    int64_t m = static_cast<int64_t>(N) * spatial;
    for (int c = 0; c < C; ++c) {
        double mean, var;
        if (train) {
            mean = 0.0;
            for (int n = 0; n < N; ++n)
                for (int s = 0; s < spatial; ++s) mean += x[(n * C + c) * spatial + s];
            mean /= static_cast<double>(m);
            var = 0.0;
            for (int n = 0; n < N; ++n)
                for (int s = 0; s < spatial; ++s) {
                    double d = x[(n * C + c) * spatial + s] - mean;
                    var += d * d;
                }
            var /= static_cast<double>(m);
        } else {
            mean = rm[c];
            var = rv[c];
        }
        double istd = 1.0 / std::sqrt(var + eps);
        for (int n = 0; n < N; ++n)
            for (int s = 0; s < spatial; ++s) {
                size_t i = (n * C + c) * spatial + s;
                y[i] = gamma[c] * (x[i] - mean) * istd + beta[c];
            }
    }
    return y;
}

inline V softmax(const V& x, int B, int K) {
    V y(x.size());
    for (int i = 0; i < B; ++i) {
        double mx = x[i * K];
        for (int j = 1; j < K; ++j) mx = std::max(mx, x[i * K + j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(x[i * K + j] - mx);
        for (int j = 0; j < K; ++j) y[i * K + j] = std::exp(x[i * K + j] - mx) / sum;
    }
    return y;
}

inline double cross_entropy(const V& logits, const V& onehot, int B, int K) {
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        double mx = logits[i * K];
        for (int j = 1; j < K; ++j) mx = std::max(mx, logits[i * K + j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(logits[i * K + j] - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < K; ++j) loss += onehot[i * K + j] * (lse - logits[i * K + j]);
    }
    return loss / B;
}

inline double bce_with_logits(const V& s, double target) {
    double loss = 0.0;
    for (double v : s) loss += std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))) - target * v;
    return loss / static_cast<double>(s.size());
}

inline double mse(const V& a, const V& b) {
    double loss = 0.0;
    for (size_t i = 0; i < a.size(); ++i) loss += (a[i] - b[i]) * (a[i] - b[i]);
    return loss / static_cast<double>(a.size());
}

} // namespace ref64

namespace gradcheck_detail {

using F64Inputs = std::vector<std::vector<double>>;
// Reference forward: double inputs -> flat double outputs.
using RefForward = std::function<std::vector<double>(const F64Inputs&)>;

struct Check {
    std::function<Var(const std::vector<Var>&)> graph;
    RefForward reference;
    std::vector<Tensor> inputs;

    void run(OpCheck& out, double tol, Rng& rng, float step = 1e-3f) const {
        std::vector<Var> vars;
        for (const Tensor& t : inputs) vars.push_back(make_leaf(t, true, "gc_input"));
        Var y = graph(vars);

        // Scalar readout L = sum(R ⊙ y); same R on both paths.
        std::vector<float> r(y->value.size());
        for (auto& v : r) v = rng.uniform(0.5f, 1.5f) * (rng.next_u64() & 1 ? 1.0f : -1.0f);
        Var loss = sum_all(mul(y, make_leaf(Tensor(y->value.shape(), r))));
        backward(loss);

        F64Inputs probe;
        for (const Tensor& t : inputs)
            probe.emplace_back(t.vec().begin(), t.vec().end());
        auto readout = [&](const F64Inputs& p) {
            std::vector<double> out = reference(p);
            if (out.size() != r.size())
                throw DimensionError("reference output size mismatch in gradcheck");
            double s = 0.0;
            for (size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
            return s;
        };

        // sanity: the reference and the production forward must agree
        {
            double lref = readout(probe);
            double lgraph = loss->value.scalar_value();
            double denom = std::max({std::abs(lref), std::abs(lgraph), 1.0});
            if (std::abs(lref - lgraph) / denom > 1e-4)
                throw NumericError("gradcheck reference forward diverges from production (" +
                                   std::to_string(lref) + " vs " + std::to_string(lgraph) + ")");
        }

        for (size_t t = 0; t < inputs.size(); ++t) {
            double gmax = 1e-4;
            if (!vars[t]->grad.empty())
                for (int64_t i = 0; i < vars[t]->grad.size(); ++i)
                    gmax = std::max(gmax, std::abs(static_cast<double>(vars[t]->grad[i])));
            for (int64_t i = 0; i < inputs[t].size(); ++i) {
                double orig = probe[t][i];
                probe[t][i] = orig + step;
                double lp = readout(probe);
                probe[t][i] = orig - step;
                double lm = readout(probe);
                probe[t][i] = orig;
                double fd = (lp - lm) / (2.0 * static_cast<double>(step));
                double an = vars[t]->grad.empty() ? 0.0 : static_cast<double>(vars[t]->grad[i]);
                double denom = std::max({std::abs(an), std::abs(fd), 0.01 * gmax, 1e-4});
                double rel = std::abs(an - fd) / denom;
                out.points++;
                out.max_rel_err = std::max(out.max_rel_err, rel);
                if (rel > tol) out.failures++;
            }
        }
    }
};

inline Tensor random_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (int64_t i = 0, n = t.size(); i < n; ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Random values bounded away from zero (ReLU kink exclusion).
inline Tensor random_tensor_no_kink(Shape shape, Rng& rng, float margin = 0.05f) {
    Tensor t(std::move(shape));
    for (int64_t i = 0, n = t.size(); i < n; ++i) {
        float v;
        do {
            v = rng.uniform(-1.0f, 1.0f);
        } while (std::abs(v) < margin);
        t[i] = v;
    }
    return t;
}

/// Distinct values with pairwise gaps well above the FD step (tie exclusion).
inline Tensor random_tensor_distinct(Shape shape, Rng& rng, float margin = 0.02f) {
    Tensor t(std::move(shape));
    std::vector<int64_t> idx(t.size());
    for (int64_t i = 0; i < t.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    for (int64_t i = 0; i < t.size(); ++i)
        t[idx[i]] = static_cast<float>(i) * 2.0f * margin + rng.uniform(0.0f, margin * 0.5f);
    return t;
}

} // namespace gradcheck_detail

inline GradSuiteReport run_gradient_suite(uint64_t seed = 42) {
    using namespace gradcheck_detail;
    Rng rng(Rng::derive(seed, "gradcheck"));
    GradSuiteReport report;

    auto run_cases = [&](const std::string& op, double tol, const std::vector<Check>& cases) {
        OpCheck oc;
        oc.op = op;
        oc.tol = tol;
        for (const Check& c : cases) c.run(oc, tol, rng);
        report.checks.push_back(oc);
    };

    // matmul
    {
        std::vector<Check> cases;
        for (auto [m, k, n] : {std::array{3, 4, 2}, std::array{1, 5, 1}, std::array{2, 2, 3},
                               std::array{4, 3, 4}, std::array{5, 2, 5}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return matmul(v[0], v[1]); };
            c.reference = [m, k, n](const F64Inputs& p) { return ref64::matmul(p[0], p[1], m, k, n); };
            c.inputs = {random_tensor({m, k}, rng), random_tensor({k, n}, rng)};
            cases.push_back(c);
        }
        run_cases("matmul", 1e-3, cases);
    }

    // conv2d: {N,C,H,W,F,K,stride,pad}
    {
        std::vector<Check> cases;
        for (auto p : {std::array{2, 3, 8, 8, 4, 3, 1, 0}, std::array{1, 1, 6, 6, 2, 5, 1, 2},
                       std::array{2, 2, 7, 7, 3, 3, 2, 1}, std::array{1, 4, 5, 5, 2, 1, 1, 0},
                       std::array{3, 1, 9, 9, 2, 3, 2, 0}}) {
            Check c;
            c.graph = [stride = p[6], pad = p[7]](const std::vector<Var>& v) {
                return conv2d(v[0], v[1], v[2], stride, pad);
            };
            c.reference = [p](const F64Inputs& in) {
                return ref64::conv2d(in[0], in[1], in[2], p[0], p[1], p[2], p[3], p[4], p[5],
                                     p[6], p[7]);
            };
            c.inputs = {random_tensor({p[0], p[1], p[2], p[3]}, rng),
                        random_tensor({p[4], p[1], p[5], p[5]}, rng),
                        random_tensor({p[4]}, rng)};
            cases.push_back(c);
        }
        run_cases("conv2d", 1e-3, cases);
    }

    // conv2d_transpose: {N,Cin,H,W,Cout,K,stride,pad}
    {
        std::vector<Check> cases;
        for (auto p : {std::array{2, 2, 4, 4, 3, 3, 1, 0}, std::array{1, 3, 3, 3, 2, 5, 1, 2},
                       std::array{2, 1, 4, 4, 2, 3, 2, 1}, std::array{1, 2, 5, 5, 1, 2, 2, 0},
                       std::array{3, 2, 3, 3, 2, 4, 1, 1}}) {
            Check c;
            c.graph = [stride = p[6], pad = p[7]](const std::vector<Var>& v) {
                return conv2d_transpose(v[0], v[1], v[2], stride, pad);
            };
            c.reference = [p](const F64Inputs& in) {
                return ref64::conv2d_transpose(in[0], in[1], in[2], p[0], p[1], p[2], p[3], p[4],
                                               p[5], p[6], p[7]);
            };
            c.inputs = {random_tensor({p[0], p[1], p[2], p[3]}, rng),
                        random_tensor({p[1], p[4], p[5], p[5]}, rng),
                        random_tensor({p[4]}, rng)};
            cases.push_back(c);
        }
        run_cases("conv2d_transpose", 1e-3, cases);
    }

    // maxpool2x2 (tie-free inputs)
    {
        std::vector<Check> cases;
        for (auto p : {std::array{1, 1, 6, 6}, std::array{2, 2, 4, 4}, std::array{1, 3, 8, 8},
                       std::array{2, 1, 5, 5}, std::array{1, 2, 7, 6}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return maxpool2x2(v[0]); };
            c.reference = [p](const F64Inputs& in) {
                return ref64::maxpool2x2(in[0], p[0], p[1], p[2], p[3]);
            };
            c.inputs = {random_tensor_distinct({p[0], p[1], p[2], p[3]}, rng)};
            cases.push_back(c);
        }
        run_cases("maxpool2x2", 1e-3, cases);
    }

    // upsample_nearest
    {
        std::vector<Check> cases;
        for (auto p : {std::array{1, 1, 2, 2, 4, 4}, std::array{2, 2, 3, 3, 6, 6},
                       std::array{1, 3, 2, 3, 6, 9}, std::array{2, 1, 4, 4, 8, 8},
                       std::array{1, 2, 2, 2, 6, 6}}) {
            Check c;
            c.graph = [th = p[4], tw = p[5]](const std::vector<Var>& v) {
                return upsample_nearest(v[0], th, tw);
            };
            c.reference = [p](const F64Inputs& in) {
                return ref64::upsample_nearest(in[0], p[0], p[1], p[2], p[3], p[4], p[5]);
            };
            c.inputs = {random_tensor({p[0], p[1], p[2], p[3]}, rng)};
            cases.push_back(c);
        }
        run_cases("upsample_nearest", 1e-3, cases);
    }

    // batch_norm, train and eval mode (wider tolerance per contract)
    for (bool train : {true, false}) {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            bool conv_style = i % 2 == 0;
            int C = 2 + i % 3;
            Shape xs = conv_style ? Shape{3, C, 3, 3} : Shape{6, C};
            int N = xs[0];
            int spatial = conv_style ? 9 : 1;
            std::vector<double> rm(C), rv(C);
            for (int j = 0; j < C; ++j) {
                rm[j] = 0.1 * j;
                rv[j] = 1.0 + 0.2 * j;
            }
            c.graph = [C, train, rm, rv](const std::vector<Var>& v) {
                Tensor rmt({C}), rvt({C});
                for (int j = 0; j < C; ++j) {
                    rmt[j] = static_cast<float>(rm[j]);
                    rvt[j] = static_cast<float>(rv[j]);
                }
                return batch_norm(v[0], v[1], v[2], rmt, rvt, train);
            };
            c.reference = [N, C, spatial, train, rm, rv](const F64Inputs& in) {
                return ref64::batch_norm(in[0], in[1], in[2], rm, rv, N, C, spatial, train);
            };
            c.inputs = {random_tensor(xs, rng), random_tensor({C}, rng, 0.5f, 1.5f),
                        random_tensor({C}, rng)};
            cases.push_back(c);
        }
        run_cases(train ? "batch_norm(train)" : "batch_norm(eval)", 1e-2, cases);
    }

    // relu (inputs away from the kink)
    {
        std::vector<Check> cases;
        for (auto s : {Shape{7}, Shape{3, 5}, Shape{2, 2, 3}, Shape{4, 4}, Shape{1, 9}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return relu(v[0]); };
            c.reference = [](const F64Inputs& in) {
                std::vector<double> y(in[0]);
                for (auto& v : y) v = v > 0 ? v : 0.0;
                return y;
            };
            c.inputs = {random_tensor_no_kink(s, rng)};
            cases.push_back(c);
        }
        run_cases("relu", 1e-3, cases);
    }

    // sigmoid
    {
        std::vector<Check> cases;
        for (auto s : {Shape{6}, Shape{2, 4}, Shape{3, 3}, Shape{5, 2}, Shape{1, 8}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return sigmoid(v[0]); };
            c.reference = [](const F64Inputs& in) {
                std::vector<double> y(in[0]);
                for (auto& v : y) v = 1.0 / (1.0 + std::exp(-v));
                return y;
            };
            c.inputs = {random_tensor(s, rng, -2.0f, 2.0f)};
            cases.push_back(c);
        }
        run_cases("sigmoid", 1e-3, cases);
    }

    // softmax
    {
        std::vector<Check> cases;
        for (auto [B, K] : {std::array{2, 5}, std::array{1, 10}, std::array{4, 3},
                            std::array{3, 7}, std::array{5, 4}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return softmax(v[0]); };
            c.reference = [B, K](const F64Inputs& in) { return ref64::softmax(in[0], B, K); };
            c.inputs = {random_tensor({B, K}, rng, -2.0f, 2.0f)};
            cases.push_back(c);
        }
        run_cases("softmax", 1e-3, cases);
    }

    // concat / split (gradient flows independently to each branch)
    {
        std::vector<Check> cases;
        for (auto p : {std::array{2, 3, 4}, std::array{3, 2, 2}, std::array{1, 4, 4},
                       std::array{2, 2, 5}, std::array{4, 3, 3}}) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return concat(v[0], v[1], 1); };
            c.reference = [p](const F64Inputs& in) {
                std::vector<double> y;
                for (int i = 0; i < p[0]; ++i) {
                    for (int j = 0; j < p[1]; ++j) y.push_back(in[0][i * p[1] + j]);
                    for (int j = 0; j < p[2]; ++j) y.push_back(in[1][i * p[2] + j]);
                }
                return y;
            };
            c.inputs = {random_tensor({p[0], p[1]}, rng), random_tensor({p[0], p[2]}, rng)};
            cases.push_back(c);
        }
        run_cases("concat", 1e-3, cases);
    }
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            int d0 = 2 + i, d1 = 4 + 2 * i;
            int cut = 1 + i;
            c.graph = [cut, d1](const std::vector<Var>& v) {
                auto parts = split(v[0], {cut, d1 - cut}, 1);
                return concat(parts[1], parts[0], 1); // read both halves
            };
            c.reference = [cut, d0, d1](const F64Inputs& in) {
                std::vector<double> y;
                for (int r = 0; r < d0; ++r) {
                    for (int j = cut; j < d1; ++j) y.push_back(in[0][r * d1 + j]);
                    for (int j = 0; j < cut; ++j) y.push_back(in[0][r * d1 + j]);
                }
                return y;
            };
            c.inputs = {random_tensor({d0, d1}, rng)};
            cases.push_back(c);
        }
        run_cases("split", 1e-3, cases);
    }

    // add_bias
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            int B = 2 + i, D = 3 + i;
            c.graph = [](const std::vector<Var>& v) { return add_bias(v[0], v[1]); };
            c.reference = [B, D](const F64Inputs& in) {
                std::vector<double> y(static_cast<size_t>(B) * D);
                for (int r = 0; r < B; ++r)
                    for (int j = 0; j < D; ++j) y[r * D + j] = in[0][r * D + j] + in[1][j];
                return y;
            };
            c.inputs = {random_tensor({B, D}, rng), random_tensor({D}, rng)};
            cases.push_back(c);
        }
        run_cases("add_bias", 1e-3, cases);
    }

    // row_dot
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            int B = 2 + i, D = 2 + 2 * i;
            c.graph = [](const std::vector<Var>& v) { return row_dot(v[0], v[1]); };
            c.reference = [B, D](const F64Inputs& in) {
                std::vector<double> y(B, 0.0);
                for (int r = 0; r < B; ++r)
                    for (int j = 0; j < D; ++j) y[r] += in[0][r * D + j] * in[1][r * D + j];
                return y;
            };
            c.inputs = {random_tensor({B, D}, rng), random_tensor({B, D}, rng)};
            cases.push_back(c);
        }
        run_cases("row_dot", 1e-3, cases);
    }

    // mul / square / mean_all composition
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            int B = 2 + i, D = 3;
            c.graph = [](const std::vector<Var>& v) { return mean_all(square(mul(v[0], v[1]))); };
            c.reference = [](const F64Inputs& in) {
                double s = 0.0;
                for (size_t j = 0; j < in[0].size(); ++j) {
                    double p = in[0][j] * in[1][j];
                    s += p * p;
                }
                return std::vector<double>{s / static_cast<double>(in[0].size())};
            };
            c.inputs = {random_tensor({B, D}, rng), random_tensor({B, D}, rng)};
            cases.push_back(c);
        }
        run_cases("mul/square/mean_all", 1e-3, cases);
    }

    // fused losses
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            int B = 2 + i, K = 4 + i;
            Tensor onehot({B, K});
            for (int b = 0; b < B; ++b) onehot[b * K + rng.uniform_int(K)] = 1.0f;
            std::vector<double> oh64(onehot.vec().begin(), onehot.vec().end());
            c.graph = [onehot](const std::vector<Var>& v) {
                return cross_entropy_mean(v[0], onehot);
            };
            c.reference = [B, K, oh64](const F64Inputs& in) {
                return std::vector<double>{ref64::cross_entropy(in[0], oh64, B, K)};
            };
            c.inputs = {random_tensor({B, K}, rng, -2.0f, 2.0f)};
            cases.push_back(c);
        }
        run_cases("cross_entropy", 1e-3, cases);
    }
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            float target = i % 2 ? 1.0f : 0.0f;
            c.graph = [target](const std::vector<Var>& v) {
                return bce_with_logits_mean(v[0], target);
            };
            c.reference = [target](const F64Inputs& in) {
                return std::vector<double>{ref64::bce_with_logits(in[0], target)};
            };
            c.inputs = {random_tensor({3 + i, 1}, rng, -2.0f, 2.0f)};
            cases.push_back(c);
        }
        run_cases("bce_with_logits", 1e-3, cases);
    }
    {
        std::vector<Check> cases;
        for (int i = 0; i < 5; ++i) {
            Check c;
            c.graph = [](const std::vector<Var>& v) { return mse_mean(v[0], v[1]); };
            c.reference = [](const F64Inputs& in) {
                return std::vector<double>{ref64::mse(in[0], in[1])};
            };
            Shape s{2 + i, 4};
            c.inputs = {random_tensor(s, rng), random_tensor(s, rng)};
            cases.push_back(c);
        }
        run_cases("mse", 1e-3, cases);
    }

    return report;
}

} // namespace fan

#endif
