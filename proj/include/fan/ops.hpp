#ifndef FAN_OPS_HPP
#define FAN_OPS_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "fan/autodiff.hpp"
#include "fan/blas.hpp"
#include "fan/tensor.hpp"

namespace fan {

// ---------------------------------------------------------------------------
// im2col / col2im kernels shared by conv2d and conv2d_transpose
// ---------------------------------------------------------------------------

namespace detail {

struct ConvGeom {
    int N, C, H, W; // input
    int K, stride, pad;
    int OH, OW; // output grid
    int64_t ckk() const { return static_cast<int64_t>(C) * K * K; }
    int64_t cols() const { return static_cast<int64_t>(N) * OH * OW; }
};

inline ConvGeom conv_geom(const Shape& xs, int C, int K, int stride, int pad) {
    if (xs.size() != 4) throw DimensionError("conv input must be 4-d, got " + shape_str(xs));
    if (xs[1] != C)
        throw DimensionError("conv input channels " + std::to_string(xs[1]) +
                             " != kernel channels " + std::to_string(C));
    if (stride < 1 || pad < 0) throw DimensionError("invalid conv stride/padding");
    ConvGeom g{xs[0], C, xs[2], xs[3], K, stride, pad, 0, 0};
    int eh = g.H + 2 * pad - K, ew = g.W + 2 * pad - K;
    if (eh < 0 || ew < 0)
        throw DimensionError("kernel " + std::to_string(K) + " exceeds padded input " +
                             shape_str(xs));
    g.OH = eh / stride + 1;
    g.OW = ew / stride + 1;
    return g;
}

// col is [C*K*K, N*OH*OW]; col[(c*K+ki)*K+kj, (n*OH+oh)*OW+ow] = x[n,c,ih,iw]
// with ih = oh*stride-pad+ki, iw = ow*stride-pad+kj, zero outside.
inline void im2col(const float* x, const ConvGeom& g, float* col) {
    const int64_t plane = static_cast<int64_t>(g.H) * g.W;
    const int64_t ncols = g.cols();
    for (int c = 0; c < g.C; ++c)
        for (int ki = 0; ki < g.K; ++ki)
            for (int kj = 0; kj < g.K; ++kj) {
                float* row = col + (static_cast<int64_t>((c * g.K + ki) * g.K + kj)) * ncols;
                for (int n = 0; n < g.N; ++n) {
                    const float* xn = x + (static_cast<int64_t>(n) * g.C + c) * plane;
                    for (int oh = 0; oh < g.OH; ++oh) {
                        float* dst = row + (static_cast<int64_t>(n) * g.OH + oh) * g.OW;
                        int ih = oh * g.stride - g.pad + ki;
                        if (ih < 0 || ih >= g.H) {
                            std::memset(dst, 0, sizeof(float) * g.OW);
                            continue;
                        }
                        const float* xrow = xn + static_cast<int64_t>(ih) * g.W;
                        for (int ow = 0; ow < g.OW; ++ow) {
                            int iw = ow * g.stride - g.pad + kj;
                            dst[ow] = (iw >= 0 && iw < g.W) ? xrow[iw] : 0.0f;
                        }
                    }
                }
            }
}

// Adjoint of im2col: scatter-add columns back into the (pre-zeroed) image.
inline void col2im(const float* col, const ConvGeom& g, float* x) {
    const int64_t plane = static_cast<int64_t>(g.H) * g.W;
    const int64_t ncols = g.cols();
    for (int c = 0; c < g.C; ++c)
        for (int ki = 0; ki < g.K; ++ki)
            for (int kj = 0; kj < g.K; ++kj) {
                const float* row = col + (static_cast<int64_t>((c * g.K + ki) * g.K + kj)) * ncols;
                for (int n = 0; n < g.N; ++n) {
                    float* xn = x + (static_cast<int64_t>(n) * g.C + c) * plane;
                    for (int oh = 0; oh < g.OH; ++oh) {
                        const float* src = row + (static_cast<int64_t>(n) * g.OH + oh) * g.OW;
                        int ih = oh * g.stride - g.pad + ki;
                        if (ih < 0 || ih >= g.H) continue;
                        float* xrow = xn + static_cast<int64_t>(ih) * g.W;
                        for (int ow = 0; ow < g.OW; ++ow) {
                            int iw = ow * g.stride - g.pad + kj;
                            if (iw >= 0 && iw < g.W) xrow[iw] += src[ow];
                        }
                    }
                }
            }
}

// [N,F,S] row-major <-> [F, N*S] (S = spatial size). GEMM wants F-major.
inline void gather_fmajor(const float* y, int N, int F, int64_t S, float* yr) {
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f)
            std::memcpy(yr + (static_cast<int64_t>(f) * N + n) * S,
                        y + (static_cast<int64_t>(n) * F + f) * S, sizeof(float) * S);
}

inline void scatter_fmajor(const float* yr, int N, int F, int64_t S, float* y) {
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f)
            std::memcpy(y + (static_cast<int64_t>(n) * F + f) * S,
                        yr + (static_cast<int64_t>(f) * N + n) * S, sizeof(float) * S);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dense algebra
// ---------------------------------------------------------------------------

/// C[m,n] = A[m,k] * B[k,n]; backward dA = dC*B^T, dB = A^T*dC.
inline Var matmul(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(0))
        throw DimensionError("matmul shapes " + shape_str(av.shape()) + " x " +
                             shape_str(bv.shape()));
    int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor c({m, n});
    sgemm(false, false, m, n, k, 1.0f, av.data(), bv.data(), 0.0f, c.data());
    return make_op(std::move(c), {a, b}, "matmul", [m, k, n](Node& node) {
        const Var& a = node.inputs[0];
        const Var& b = node.inputs[1];
        if (a->requires_grad) {
            Tensor da({m, k});
            sgemm(false, true, m, k, n, 1.0f, node.grad.data(), b->value.data(), 0.0f, da.data());
            a->accumulate(da);
        }
        if (b->requires_grad) {
            Tensor db({k, n});
            sgemm(true, false, k, n, m, 1.0f, a->value.data(), node.grad.data(), 0.0f, db.data());
            b->accumulate(db);
        }
    });
}

/// Rowwise bias: x[B,D] + b[D].
inline Var add_bias(const Var& x, const Var& b) {
    const Tensor& xv = x->value;
    const Tensor& bv = b->value;
    if (xv.ndim() != 2 || bv.ndim() != 1 || xv.dim(1) != bv.dim(0))
        throw DimensionError("add_bias shapes " + shape_str(xv.shape()) + " + " +
                             shape_str(bv.shape()));
    int B = xv.dim(0), D = xv.dim(1);
    Tensor y(xv.shape());
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < D; ++j) y[i * D + j] = xv[i * D + j] + bv[j];
    return make_op(std::move(y), {x, b}, "add_bias", [B, D](Node& node) {
        if (node.inputs[0]->requires_grad) node.inputs[0]->accumulate(node.grad);
        if (node.inputs[1]->requires_grad) {
            Tensor db({D});
            for (int i = 0; i < B; ++i)
                for (int j = 0; j < D; ++j) db[j] += node.grad[i * D + j];
            node.inputs[1]->accumulate(db);
        }
    });
}

inline Var linear(const Var& x, const Var& w, const Var& b) {
    Var y = matmul(x, w);
    return b ? add_bias(y, b) : y;
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

/// Cross-correlation conv: x[N,C,H,W], w[F,C,K,K] -> [N,F,OH,OW],
/// OH = (H+2p-K)/stride+1. Optional bias[F]. im2col+GEMM.
inline Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (wv.ndim() != 4 || wv.dim(2) != wv.dim(3))
        throw DimensionError("conv2d kernel must be [F,C,K,K], got " + shape_str(wv.shape()));
    int F = wv.dim(0), K = wv.dim(2);
    auto g = detail::conv_geom(xv.shape(), wv.dim(1), K, stride, pad);
    if (bias && (bias->value.ndim() != 1 || bias->value.dim(0) != F))
        throw DimensionError("conv2d bias must be [F]");

    auto col = std::make_shared<std::vector<float>>(g.ckk() * g.cols());
    detail::im2col(xv.data(), g, col->data());

    int64_t S = static_cast<int64_t>(g.OH) * g.OW;
    std::vector<float> yr(static_cast<int64_t>(F) * g.cols());
    sgemm(false, false, F, static_cast<int>(g.cols()), static_cast<int>(g.ckk()), 1.0f,
          wv.data(), col->data(), 0.0f, yr.data());

    Tensor y({g.N, F, g.OH, g.OW});
    detail::scatter_fmajor(yr.data(), g.N, F, S, y.data());
    if (bias) {
        const float* bp = bias->value.data();
        float* yp = y.data();
        for (int n = 0; n < g.N; ++n)
            for (int f = 0; f < F; ++f) {
                float bf = bp[f];
                float* p = yp + (static_cast<int64_t>(n) * F + f) * S;
                for (int64_t i = 0; i < S; ++i) p[i] += bf;
            }
    }

    std::vector<Var> inputs = bias ? std::vector<Var>{x, w, bias} : std::vector<Var>{x, w};
    return make_op(std::move(y), std::move(inputs), "conv2d", [g, F, S, col](Node& node) {
        const Var& x = node.inputs[0];
        const Var& w = node.inputs[1];
        std::vector<float> dyr(static_cast<int64_t>(F) * g.cols());
        detail::gather_fmajor(node.grad.data(), g.N, F, S, dyr.data());
        if (w->requires_grad) {
            Tensor dw(w->value.shape());
            sgemm(false, true, F, static_cast<int>(g.ckk()), static_cast<int>(g.cols()), 1.0f,
                  dyr.data(), col->data(), 0.0f, dw.data());
            w->accumulate(dw);
        }
        if (x->requires_grad) {
            std::vector<float> dcol(g.ckk() * g.cols());
            sgemm(true, false, static_cast<int>(g.ckk()), static_cast<int>(g.cols()), F, 1.0f,
                  w->value.data(), dyr.data(), 0.0f, dcol.data());
            Tensor dx(x->value.shape());
            detail::col2im(dcol.data(), g, dx.data());
            x->accumulate(dx);
        }
        if (node.inputs.size() == 3 && node.inputs[2]->requires_grad) {
            Tensor db({F});
            const float* gp = node.grad.data();
            for (int n = 0; n < g.N; ++n)
                for (int f = 0; f < F; ++f) {
                    const float* p = gp + (static_cast<int64_t>(n) * F + f) * S;
                    double s = 0.0;
                    for (int64_t i = 0; i < S; ++i) s += p[i];
                    db[f] += static_cast<float>(s);
                }
            node.inputs[2]->accumulate(db);
        }
    });
}

/// Adjoint of conv2d: x[N,Cin,H,W], w[Cin,Cout,K,K] -> [N,Cout,OH,OW],
/// OH = (H-1)*stride - 2p + K.
inline Var conv2d_transpose(const Var& x, const Var& w, const Var& bias, int stride, int pad) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (xv.ndim() != 4 || wv.ndim() != 4 || wv.dim(2) != wv.dim(3))
        throw DimensionError("conv2d_transpose expects x[N,Cin,H,W], w[Cin,Cout,K,K]");
    if (xv.dim(1) != wv.dim(0))
        throw DimensionError("conv2d_transpose channel mismatch: " + shape_str(xv.shape()) +
                             " vs " + shape_str(wv.shape()));
    int N = xv.dim(0), Cin = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    int Cout = wv.dim(1), K = wv.dim(2);
    int OH = (H - 1) * stride - 2 * pad + K;
    int OW = (W - 1) * stride - 2 * pad + K;
    if (OH <= 0 || OW <= 0) throw DimensionError("conv2d_transpose output collapses to zero");
    // The output plays the role of the conv input in the shared geometry.
    detail::ConvGeom g{N, Cout, OH, OW, K, stride, pad, H, W};
    if (bias && (bias->value.ndim() != 1 || bias->value.dim(0) != Cout))
        throw DimensionError("conv2d_transpose bias must be [Cout]");

    int64_t NHW = static_cast<int64_t>(N) * H * W;
    auto xr = std::make_shared<std::vector<float>>(static_cast<int64_t>(Cin) * NHW);
    detail::gather_fmajor(xv.data(), N, Cin, static_cast<int64_t>(H) * W, xr->data());

    std::vector<float> col(g.ckk() * g.cols());
    // col[CoutKK, N*H*W] = Wr^T[CoutKK, Cin] * xr[Cin, N*H*W]
    sgemm(true, false, static_cast<int>(g.ckk()), static_cast<int>(NHW), Cin, 1.0f, wv.data(),
          xr->data(), 0.0f, col.data());

    Tensor y({N, Cout, OH, OW});
    detail::col2im(col.data(), g, y.data());
    if (bias) {
        int64_t S = static_cast<int64_t>(OH) * OW;
        const float* bp = bias->value.data();
        for (int n = 0; n < N; ++n)
            for (int f = 0; f < Cout; ++f) {
                float bf = bp[f];
                float* p = y.data() + (static_cast<int64_t>(n) * Cout + f) * S;
                for (int64_t i = 0; i < S; ++i) p[i] += bf;
            }
    }

    std::vector<Var> inputs = bias ? std::vector<Var>{x, w, bias} : std::vector<Var>{x, w};
    return make_op(std::move(y), std::move(inputs), "conv2d_transpose",
                   [g, N, Cin, Cout, H, W, NHW, xr](Node& node) {
        const Var& x = node.inputs[0];
        const Var& w = node.inputs[1];
        std::vector<float> dycol(g.ckk() * g.cols());
        detail::im2col(node.grad.data(), g, dycol.data());
        if (x->requires_grad) {
            std::vector<float> dxr(static_cast<int64_t>(Cin) * NHW);
            sgemm(false, false, Cin, static_cast<int>(NHW), static_cast<int>(g.ckk()), 1.0f,
                  w->value.data(), dycol.data(), 0.0f, dxr.data());
            Tensor dx(x->value.shape());
            detail::scatter_fmajor(dxr.data(), N, Cin, static_cast<int64_t>(H) * W, dx.data());
            x->accumulate(dx);
        }
        if (w->requires_grad) {
            Tensor dw(w->value.shape());
            sgemm(false, true, Cin, static_cast<int>(g.ckk()), static_cast<int>(NHW), 1.0f,
                  xr->data(), dycol.data(), 0.0f, dw.data());
            w->accumulate(dw);
        }
        if (node.inputs.size() == 3 && node.inputs[2]->requires_grad) {
            int64_t S = static_cast<int64_t>(g.H) * g.W;
            Tensor db({Cout});
            for (int n = 0; n < N; ++n)
                for (int f = 0; f < Cout; ++f) {
                    const float* p = node.grad.data() + (static_cast<int64_t>(n) * Cout + f) * S;
                    double s = 0.0;
                    for (int64_t i = 0; i < S; ++i) s += p[i];
                    db[f] += static_cast<float>(s);
                }
            node.inputs[2]->accumulate(db);
        }
    });
}

// ---------------------------------------------------------------------------
// Pooling / resampling
// ---------------------------------------------------------------------------

/// 2x2 max pooling, stride 2. Odd edges are replication-padded. Gradient
/// routes to the first maximal element in window scan order.
inline Var maxpool2x2(const Var& x) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 4) throw DimensionError("maxpool2x2 expects [N,C,H,W]");
    int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    int OH = (H + 1) / 2, OW = (W + 1) / 2;
    Tensor y({N, C, OH, OW});
    auto argmax = std::make_shared<std::vector<int64_t>>(y.size());
    const float* xp = xv.data();
    float* yp = y.data();
    int64_t o = 0;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            int64_t base = (static_cast<int64_t>(n) * C + c) * H * W;
            for (int oh = 0; oh < OH; ++oh)
                for (int ow = 0; ow < OW; ++ow, ++o) {
                    int i0 = 2 * oh, j0 = 2 * ow;
                    int i1 = std::min(i0 + 1, H - 1), j1 = std::min(j0 + 1, W - 1);
                    int64_t idx[4] = {base + static_cast<int64_t>(i0) * W + j0,
                                      base + static_cast<int64_t>(i0) * W + j1,
                                      base + static_cast<int64_t>(i1) * W + j0,
                                      base + static_cast<int64_t>(i1) * W + j1};
                    int64_t best = idx[0];
                    float bv = xp[idx[0]];
                    for (int t = 1; t < 4; ++t)
                        if (xp[idx[t]] > bv) {
                            bv = xp[idx[t]];
                            best = idx[t];
                        }
                    yp[o] = bv;
                    (*argmax)[o] = best;
                }
        }
    return make_op(std::move(y), {x}, "maxpool2x2", [argmax](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        const Var& x = node.inputs[0];
        x->ensure_grad();
        float* gx = x->grad.data();
        const float* gy = node.grad.data();
        for (int64_t i = 0, n = node.grad.size(); i < n; ++i) gx[(*argmax)[i]] += gy[i];
    });
}

/// Nearest-neighbor upsample to (th, tw); integer scale required.
inline Var upsample_nearest(const Var& x, int th, int tw) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 4) throw DimensionError("upsample_nearest expects [N,C,H,W]");
    int N = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    if (th < H || tw < W || th % H != 0 || tw % W != 0)
        throw DimensionError("upsample_nearest target " + std::to_string(th) + "x" +
                             std::to_string(tw) + " is not an integer upscale of " +
                             std::to_string(H) + "x" + std::to_string(W));
    int sh = th / H, sw = tw / W;
    Tensor y({N, C, th, tw});
    const float* xp = xv.data();
    float* yp = y.data();
    for (int nc = 0; nc < N * C; ++nc) {
        const float* xpl = xp + static_cast<int64_t>(nc) * H * W;
        float* ypl = yp + static_cast<int64_t>(nc) * th * tw;
        for (int i = 0; i < th; ++i)
            for (int j = 0; j < tw; ++j) ypl[i * tw + j] = xpl[(i / sh) * W + j / sw];
    }
    return make_op(std::move(y), {x}, "upsample_nearest", [N, C, H, W, th, tw, sh, sw](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor dx(node.inputs[0]->value.shape());
        const float* gy = node.grad.data();
        for (int nc = 0; nc < N * C; ++nc) {
            float* dpl = dx.data() + static_cast<int64_t>(nc) * H * W;
            const float* gpl = gy + static_cast<int64_t>(nc) * th * tw;
            for (int i = 0; i < th; ++i)
                for (int j = 0; j < tw; ++j) dpl[(i / sh) * W + j / sw] += gpl[i * tw + j];
        }
        node.inputs[0]->accumulate(dx);
    });
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

/// Per-channel batch norm for [N,C,H,W] (channel axis 1) or [B,D] (feature
/// axis). Train mode normalizes with batch statistics and updates the running
/// stats in place (retention `momentum`, unbiased running variance); eval mode
/// uses the running stats.
inline Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                      Tensor& running_var, bool train, float momentum = 0.9f,
                      float eps = 1e-5f) {
    const Tensor& xv = x->value;
    int C, spatial, N;
    if (xv.ndim() == 4) {
        N = xv.dim(0);
        C = xv.dim(1);
        spatial = xv.dim(2) * xv.dim(3);
    } else if (xv.ndim() == 2) {
        N = xv.dim(0);
        C = xv.dim(1);
        spatial = 1;
    } else {
        throw DimensionError("batch_norm expects 2-d or 4-d input, got " + shape_str(xv.shape()));
    }
    if (gamma->value.size() != C || beta->value.size() != C || running_mean.size() != C ||
        running_var.size() != C)
        throw DimensionError("batch_norm parameter size mismatch for C=" + std::to_string(C));
    if (train && N < 2) throw ConfigError("batch_norm requires batch size >= 2 in train mode");

    const int64_t m = static_cast<int64_t>(N) * spatial; // elements per channel
    auto xhat = std::make_shared<Tensor>(xv.shape());
    auto inv_std = std::make_shared<std::vector<float>>(C);
    Tensor y(xv.shape());

    auto channel_loop = [&](auto&& fn) {
        // fn(channel, flat element index)
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                int64_t base = (static_cast<int64_t>(n) * C + c) * spatial;
                for (int s = 0; s < spatial; ++s) fn(c, base + s);
            }
    };

    std::vector<double> mean(C, 0.0), var(C, 0.0);
    if (train) {
        channel_loop([&](int c, int64_t i) { mean[c] += xv[i]; });
        for (int c = 0; c < C; ++c) mean[c] /= static_cast<double>(m);
        channel_loop([&](int c, int64_t i) {
            double d = xv[i] - mean[c];
            var[c] += d * d;
        });
        for (int c = 0; c < C; ++c) var[c] /= static_cast<double>(m);
        // EMA update; running_var stores the unbiased estimate.
        double bessel = m > 1 ? static_cast<double>(m) / (m - 1) : 1.0;
        for (int c = 0; c < C; ++c) {
            running_mean[c] = momentum * running_mean[c] + (1 - momentum) * static_cast<float>(mean[c]);
            running_var[c] =
                momentum * running_var[c] + (1 - momentum) * static_cast<float>(var[c] * bessel);
        }
    } else {
        for (int c = 0; c < C; ++c) {
            mean[c] = running_mean[c];
            var[c] = running_var[c];
        }
    }
    for (int c = 0; c < C; ++c)
        (*inv_std)[c] = static_cast<float>(1.0 / std::sqrt(var[c] + eps));

    const float* gp = gamma->value.data();
    const float* bp = beta->value.data();
    channel_loop([&](int c, int64_t i) {
        float xh = (xv[i] - static_cast<float>(mean[c])) * (*inv_std)[c];
        (*xhat)[i] = xh;
        y[i] = gp[c] * xh + bp[c];
    });

    return make_op(std::move(y), {x, gamma, beta}, "batch_norm",
                   [N, C, spatial, m, train, xhat, inv_std](Node& node) {
        const Var& x = node.inputs[0];
        const Var& gamma = node.inputs[1];
        const Var& beta = node.inputs[2];
        const Tensor& dy = node.grad;
        std::vector<double> dg(C, 0.0), db(C, 0.0);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                int64_t base = (static_cast<int64_t>(n) * C + c) * spatial;
                for (int s = 0; s < spatial; ++s) {
                    dg[c] += dy[base + s] * (*xhat)[base + s];
                    db[c] += dy[base + s];
                }
            }
        if (gamma->requires_grad) {
            Tensor t({C});
            for (int c = 0; c < C; ++c) t[c] = static_cast<float>(dg[c]);
            gamma->accumulate(t);
        }
        if (beta->requires_grad) {
            Tensor t({C});
            for (int c = 0; c < C; ++c) t[c] = static_cast<float>(db[c]);
            beta->accumulate(t);
        }
        if (!x->requires_grad) return;
        Tensor dx(x->value.shape());
        const float* gp = gamma->value.data();
        if (train) {
            // dx = g*istd * (dy - mean(dy) - xhat*mean(dy*xhat)) per channel
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    int64_t base = (static_cast<int64_t>(n) * C + c) * spatial;
                    float k = gp[c] * (*inv_std)[c];
                    float mdy = static_cast<float>(db[c] / static_cast<double>(m));
                    float mdyx = static_cast<float>(dg[c] / static_cast<double>(m));
                    for (int s = 0; s < spatial; ++s)
                        dx[base + s] =
                            k * (dy[base + s] - mdy - (*xhat)[base + s] * mdyx);
                }
        } else {
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    int64_t base = (static_cast<int64_t>(n) * C + c) * spatial;
                    float k = gp[c] * (*inv_std)[c];
                    for (int s = 0; s < spatial; ++s) dx[base + s] = k * dy[base + s];
                }
        }
        x->accumulate(dx);
    });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

inline Var relu(const Var& x) {
    Tensor y(x->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = x->value[i] > 0 ? x->value[i] : 0.0f;
    return make_op(std::move(y), {x}, "relu", [](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor dx(node.inputs[0]->value.shape());
        for (int64_t i = 0, n = dx.size(); i < n; ++i)
            dx[i] = node.inputs[0]->value[i] > 0 ? node.grad[i] : 0.0f;
        node.inputs[0]->accumulate(dx);
    });
}

inline Var sigmoid(const Var& x) {
    auto y = std::make_shared<Tensor>(x->value.shape());
    for (int64_t i = 0, n = y->size(); i < n; ++i)
        (*y)[i] = 1.0f / (1.0f + std::exp(-x->value[i]));
    Tensor out = *y;
    return make_op(std::move(out), {x}, "sigmoid", [y](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor dx(node.inputs[0]->value.shape());
        for (int64_t i = 0, n = dx.size(); i < n; ++i)
            dx[i] = node.grad[i] * (*y)[i] * (1.0f - (*y)[i]);
        node.inputs[0]->accumulate(dx);
    });
}

/// Rowwise softmax on [B,K], max-subtraction stabilized.
inline Var softmax(const Var& x) {
    const Tensor& xv = x->value;
    if (xv.ndim() != 2) throw DimensionError("softmax expects [B,K]");
    int B = xv.dim(0), K = xv.dim(1);
    auto y = std::make_shared<Tensor>(xv.shape());
    for (int i = 0; i < B; ++i) {
        const float* row = xv.data() + static_cast<int64_t>(i) * K;
        float mx = row[0];
        for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
        for (int j = 0; j < K; ++j)
            (*y)[static_cast<int64_t>(i) * K + j] =
                static_cast<float>(std::exp(static_cast<double>(row[j] - mx)) / sum);
    }
    Tensor out = *y;
    return make_op(std::move(out), {x}, "softmax", [B, K, y](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor dx(node.inputs[0]->value.shape());
        for (int i = 0; i < B; ++i) {
            int64_t base = static_cast<int64_t>(i) * K;
            double dot = 0.0;
            for (int j = 0; j < K; ++j) dot += node.grad[base + j] * (*y)[base + j];
            for (int j = 0; j < K; ++j)
                dx[base + j] = (*y)[base + j] * (node.grad[base + j] - static_cast<float>(dot));
        }
        node.inputs[0]->accumulate(dx);
    });
}

// ---------------------------------------------------------------------------
// Structure: reshape / concat / split
// ---------------------------------------------------------------------------

inline Var reshape(const Var& x, Shape shape) {
    Tensor y = x->value.reshaped(std::move(shape));
    return make_op(std::move(y), {x}, "reshape", [](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        node.inputs[0]->accumulate(node.grad.reshaped(node.inputs[0]->value.shape()));
    });
}

inline Var flatten(const Var& x) {
    int64_t rest = x->value.size() / x->value.dim(0);
    return reshape(x, {x->value.dim(0), static_cast<int>(rest)});
}

namespace detail {

struct AxisBlocks {
    int64_t outer, inner;
};

inline AxisBlocks axis_blocks(const Shape& s, int axis) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[i];
    for (int i = axis + 1; i < static_cast<int>(s.size()); ++i) inner *= s[i];
    return {outer, inner};
}

} // namespace detail

inline Var concat(const Var& a, const Var& b, int axis) {
    const Shape& sa = a->value.shape();
    const Shape& sb = b->value.shape();
    if (sa.size() != sb.size()) throw DimensionError("concat rank mismatch");
    for (size_t i = 0; i < sa.size(); ++i)
        if (static_cast<int>(i) != axis && sa[i] != sb[i])
            throw DimensionError("concat shapes " + shape_str(sa) + " and " + shape_str(sb) +
                                 " differ off axis " + std::to_string(axis));
    auto [outer, inner] = detail::axis_blocks(sa, axis);
    int64_t wa = sa[axis] * inner, wb = sb[axis] * inner;
    Shape so = sa;
    so[axis] += sb[axis];
    Tensor y(so);
    for (int64_t o = 0; o < outer; ++o) {
        std::memcpy(y.data() + o * (wa + wb), a->value.data() + o * wa, sizeof(float) * wa);
        std::memcpy(y.data() + o * (wa + wb) + wa, b->value.data() + o * wb, sizeof(float) * wb);
    }
    return make_op(std::move(y), {a, b}, "concat", [outer, wa, wb](Node& node) {
        for (int side = 0; side < 2; ++side) {
            const Var& v = node.inputs[side];
            if (!v->requires_grad) continue;
            int64_t w = side == 0 ? wa : wb;
            int64_t off = side == 0 ? 0 : wa;
            Tensor d(v->value.shape());
            for (int64_t o = 0; o < outer; ++o)
                std::memcpy(d.data() + o * w, node.grad.data() + o * (wa + wb) + off,
                            sizeof(float) * w);
            v->accumulate(d);
        }
    });
}

inline std::vector<Var> split(const Var& x, const std::vector<int>& sizes, int axis) {
    const Shape& s = x->value.shape();
    auto [outer, inner] = detail::axis_blocks(s, axis);
    int total = 0;
    for (int v : sizes) {
        if (v <= 0) throw DimensionError("split sizes must be positive");
        total += v;
    }
    if (total != s[axis])
        throw DimensionError("split sizes sum to " + std::to_string(total) + ", axis has " +
                             std::to_string(s[axis]));
    int64_t wx = s[axis] * inner;
    std::vector<Var> out;
    int64_t off = 0;
    for (int part : sizes) {
        int64_t w = static_cast<int64_t>(part) * inner;
        Shape sp = s;
        sp[axis] = part;
        Tensor y(sp);
        for (int64_t o = 0; o < outer; ++o)
            std::memcpy(y.data() + o * w, x->value.data() + o * wx + off, sizeof(float) * w);
        int64_t off_c = off;
        out.push_back(make_op(std::move(y), {x}, "split", [outer, wx, w, off_c](Node& node) {
            if (!node.inputs[0]->requires_grad) return;
            const Var& x = node.inputs[0];
            x->ensure_grad();
            for (int64_t o = 0; o < outer; ++o) {
                float* dst = x->grad.data() + o * wx + off_c;
                const float* src = node.grad.data() + o * w;
                for (int64_t i = 0; i < w; ++i) dst[i] += src[i];
            }
        }));
        off += w;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic and reductions
// ---------------------------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value))
        throw DimensionError("add shape mismatch " + shape_str(a->value.shape()) + " vs " +
                             shape_str(b->value.shape()));
    Tensor y(a->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = a->value[i] + b->value[i];
    return make_op(std::move(y), {a, b}, "add", [](Node& node) {
        for (int s = 0; s < 2; ++s)
            if (node.inputs[s]->requires_grad) node.inputs[s]->accumulate(node.grad);
    });
}

inline Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw DimensionError("sub shape mismatch");
    Tensor y(a->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = a->value[i] - b->value[i];
    return make_op(std::move(y), {a, b}, "sub", [](Node& node) {
        if (node.inputs[0]->requires_grad) node.inputs[0]->accumulate(node.grad);
        if (node.inputs[1]->requires_grad) {
            Tensor d(node.grad.shape());
            for (int64_t i = 0, n = d.size(); i < n; ++i) d[i] = -node.grad[i];
            node.inputs[1]->accumulate(d);
        }
    });
}

inline Var mul(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) throw DimensionError("mul shape mismatch");
    Tensor y(a->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = a->value[i] * b->value[i];
    return make_op(std::move(y), {a, b}, "mul", [](Node& node) {
        const Var& a = node.inputs[0];
        const Var& b = node.inputs[1];
        if (a->requires_grad) {
            Tensor d(node.grad.shape());
            for (int64_t i = 0, n = d.size(); i < n; ++i) d[i] = node.grad[i] * b->value[i];
            a->accumulate(d);
        }
        if (b->requires_grad) {
            Tensor d(node.grad.shape());
            for (int64_t i = 0, n = d.size(); i < n; ++i) d[i] = node.grad[i] * a->value[i];
            b->accumulate(d);
        }
    });
}

inline Var scale(const Var& x, float c) {
    Tensor y(x->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = c * x->value[i];
    return make_op(std::move(y), {x}, "scale", [c](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.grad.shape());
        for (int64_t i = 0, n = d.size(); i < n; ++i) d[i] = c * node.grad[i];
        node.inputs[0]->accumulate(d);
    });
}

inline Var square(const Var& x) {
    Tensor y(x->value.shape());
    for (int64_t i = 0, n = y.size(); i < n; ++i) y[i] = x->value[i] * x->value[i];
    return make_op(std::move(y), {x}, "square", [](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.grad.shape());
        for (int64_t i = 0, n = d.size(); i < n; ++i)
            d[i] = 2.0f * node.grad[i] * node.inputs[0]->value[i];
        node.inputs[0]->accumulate(d);
    });
}

inline Var sum_all(const Var& x) {
    double s = 0.0;
    for (int64_t i = 0, n = x->value.size(); i < n; ++i) s += x->value[i];
    return make_op(Tensor::scalar(static_cast<float>(s)), {x}, "sum_all", [](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.inputs[0]->value.shape(), node.grad[0]);
        node.inputs[0]->accumulate(d);
    });
}

inline Var mean_all(const Var& x) {
    double s = 0.0;
    int64_t n = x->value.size();
    for (int64_t i = 0; i < n; ++i) s += x->value[i];
    return make_op(Tensor::scalar(static_cast<float>(s / static_cast<double>(n))), {x}, "mean_all",
                   [n](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.inputs[0]->value.shape(), node.grad[0] / static_cast<float>(n));
        node.inputs[0]->accumulate(d);
    });
}

/// Per-row inner product: a[B,D], b[B,D] -> [B,1].
inline Var row_dot(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.ndim() != 2 || !av.same_shape(bv))
        throw DimensionError("row_dot expects equal [B,D] shapes, got " + shape_str(av.shape()) +
                             " and " + shape_str(bv.shape()));
    int B = av.dim(0), D = av.dim(1);
    Tensor y({B, 1});
    for (int i = 0; i < B; ++i) {
        double s = 0.0;
        const float* ra = av.data() + static_cast<int64_t>(i) * D;
        const float* rb = bv.data() + static_cast<int64_t>(i) * D;
        for (int j = 0; j < D; ++j) s += static_cast<double>(ra[j]) * rb[j];
        y[i] = static_cast<float>(s);
    }
    return make_op(std::move(y), {a, b}, "row_dot", [B, D](Node& node) {
        const Var& a = node.inputs[0];
        const Var& b = node.inputs[1];
        for (int side = 0; side < 2; ++side) {
            const Var& dst = side == 0 ? a : b;
            const Var& other = side == 0 ? b : a;
            if (!dst->requires_grad) continue;
            Tensor d(dst->value.shape());
            for (int i = 0; i < B; ++i) {
                float g = node.grad[i];
                for (int j = 0; j < D; ++j)
                    d[static_cast<int64_t>(i) * D + j] =
                        g * other->value[static_cast<int64_t>(i) * D + j];
            }
            dst->accumulate(d);
        }
    });
}

// ---------------------------------------------------------------------------
// Fused losses (stable, 64-bit accumulated values)
// ---------------------------------------------------------------------------

/// Mean cross-entropy between logits[B,K] and one-hot targets, via
/// log-sum-exp. Targets are constants.
inline Var cross_entropy_mean(const Var& logits, const Tensor& onehot) {
    const Tensor& xv = logits->value;
    if (xv.ndim() != 2 || !xv.same_shape(onehot))
        throw DimensionError("cross_entropy_mean shapes " + shape_str(xv.shape()) + " vs " +
                             shape_str(onehot.shape()));
    int B = xv.dim(0), K = xv.dim(1);
    auto probs = std::make_shared<Tensor>(xv.shape());
    auto targets = std::make_shared<Tensor>(onehot);
    double loss = 0.0;
    for (int i = 0; i < B; ++i) {
        const float* row = xv.data() + static_cast<int64_t>(i) * K;
        float mx = row[0];
        for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
        double lse = mx + std::log(sum);
        for (int j = 0; j < K; ++j) {
            double p = std::exp(static_cast<double>(row[j] - mx)) / sum;
            (*probs)[static_cast<int64_t>(i) * K + j] = static_cast<float>(p);
            loss += onehot[static_cast<int64_t>(i) * K + j] * (lse - row[j]);
        }
    }
    loss /= B;
    return make_op(Tensor::scalar(static_cast<float>(loss)), {logits}, "cross_entropy",
                   [B, K, probs, targets](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.inputs[0]->value.shape());
        float g = node.grad[0] / static_cast<float>(B);
        for (int64_t i = 0, n = d.size(); i < n; ++i) d[i] = g * ((*probs)[i] - (*targets)[i]);
        node.inputs[0]->accumulate(d);
    });
}

/// Mean binary cross-entropy on pre-sigmoid scores against a constant label
/// (1 = real/source, 0 = fake/target). loss = mean(softplus(s) - t*s).
inline Var bce_with_logits_mean(const Var& scores, float target) {
    const Tensor& sv = scores->value;
    int64_t n = sv.size();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double s = sv[i];
        double sp = std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s)));
        loss += sp - target * s;
    }
    loss /= static_cast<double>(n);
    return make_op(Tensor::scalar(static_cast<float>(loss)), {scores}, "bce_with_logits",
                   [n, target](Node& node) {
        if (!node.inputs[0]->requires_grad) return;
        Tensor d(node.inputs[0]->value.shape());
        float g = node.grad[0] / static_cast<float>(n);
        for (int64_t i = 0; i < n; ++i) {
            float sig = 1.0f / (1.0f + std::exp(-node.inputs[0]->value[i]));
            d[i] = g * (sig - target);
        }
        node.inputs[0]->accumulate(d);
    });
}

/// Mean squared error over all elements.
inline Var mse_mean(const Var& pred, const Var& target) {
    if (!pred->value.same_shape(target->value))
        throw DimensionError("mse_mean shape mismatch " + shape_str(pred->value.shape()) +
                             " vs " + shape_str(target->value.shape()));
    int64_t n = pred->value.size();
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        double d = static_cast<double>(pred->value[i]) - target->value[i];
        loss += d * d;
    }
    loss /= static_cast<double>(n);
    return make_op(Tensor::scalar(static_cast<float>(loss)), {pred, target}, "mse_mean",
                   [n](Node& node) {
        const Var& a = node.inputs[0];
        const Var& b = node.inputs[1];
        float g = 2.0f * node.grad[0] / static_cast<float>(n);
        if (a->requires_grad) {
            Tensor d(a->value.shape());
            for (int64_t i = 0; i < n; ++i) d[i] = g * (a->value[i] - b->value[i]);
            a->accumulate(d);
        }
        if (b->requires_grad) {
            Tensor d(b->value.shape());
            for (int64_t i = 0; i < n; ++i) d[i] = g * (b->value[i] - a->value[i]);
            b->accumulate(d);
        }
    });
}

} // namespace fan

#endif
