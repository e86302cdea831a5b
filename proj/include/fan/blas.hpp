#ifndef FAN_BLAS_HPP
#define FAN_BLAS_HPP

#include <cblas.h>

namespace fan {

/// Row-major C[m,n] = alpha * op(A) * op(B) + beta * C.
/// A is [m,k] (or [k,m] if ta), B is [k,n] (or [n,k] if tb).
inline void sgemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a,
                  const float* b, float beta, float* c) {
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, a, ta ? m : k, b, tb ? k : n, beta, c, n);
}

} // namespace fan

#endif
