#pragma once

#include <cstddef>

// Dense kernels behind the autodiff graph. Two implementations share one
// signature set: eden::kernels::serial is the plain reference, and
// eden::kernels (top level) is the OpenMP version the graph dispatches to.
// Both partition work over independent output rows and keep the same
// per-element accumulation order, so their results are bit-identical for
// any thread count.
//
// Layout conventions: all matrices row-major. `accumulate` selects C += ...
// instead of C = ....

namespace eden::kernels {

#define EDEN_KERNEL_DECLS                                                                                \
    /* C[M,N] = A[M,K] * B[K,N] */                                                                       \
    template <typename T>                                                                                \
    void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C,             \
                 bool accumulate);                                                                       \
    /* C[M,N] = A[M,K] * B[N,K]^T */                                                                     \
    template <typename T>                                                                                \
    void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C,             \
                 bool accumulate);                                                                       \
    /* C[M,N] = A[K,M]^T * B[K,N] */                                                                     \
    template <typename T>                                                                                \
    void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C,             \
                 bool accumulate);                                                                       \
    /* Multi-head attention over `groups` independent sequences. q: (groups*lq, dim),                    \
       k, v: (groups*lk, dim), out: (groups*lq, dim), probs: groups*heads*lq*lk softmax weights. */     \
    template <typename T>                                                                                \
    void attention_forward(const T* q, const T* k, const T* v, std::size_t groups, std::size_t lq,      \
                           std::size_t lk, std::size_t dim, std::size_t heads, T* out, T* probs);       \
    /* Accumulates into gq, gk, gv. */                                                                   \
    template <typename T>                                                                                \
    void attention_backward(const T* q, const T* k, const T* v, const T* probs, const T* gout,          \
                            std::size_t groups, std::size_t lq, std::size_t lk, std::size_t dim,        \
                            std::size_t heads, T* gq, T* gk, T* gv);                                    \
    /* Row-wise normalization without affine: y = (x - mean) * rstd. */                                 \
    template <typename T>                                                                                \
    void layer_norm_forward(const T* x, std::size_t rows, std::size_t dim, T eps, T* y, T* rstd);       \
    /* Accumulates into gx, given the normalized output y and per-row rstd. */                           \
    template <typename T>                                                                                \
    void layer_norm_backward(const T* gy, const T* y, const T* rstd, std::size_t rows, std::size_t dim, \
                             T* gx);

EDEN_KERNEL_DECLS

namespace serial {
EDEN_KERNEL_DECLS
}  // namespace serial

#undef EDEN_KERNEL_DECLS

// Number of worker threads the OpenMP kernels will use (1 without OpenMP).
int max_threads();

}  // namespace eden::kernels
