// Shared kernel bodies. Included twice: once with EDEN_PARALLEL_FOR empty
// (serial reference) and once with it expanding to an OpenMP pragma.

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C, bool accumulate) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(M);
    EDEN_PARALLEL_FOR(M * N * K)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        T* c = C + i * N;
        if (!accumulate)
            for (std::size_t j = 0; j < N; ++j) c[j] = T(0);
        const T* a = A + i * K;
        for (std::size_t p = 0; p < K; ++p) {
            const T s = a[p];
            const T* b = B + p * N;
#pragma omp simd
            for (std::size_t j = 0; j < N; ++j) c[j] += s * b[j];
        }
    }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C, bool accumulate) {
    // Transpose B once so the inner loop is a contiguous axpy.
    std::vector<T> bt(K * N);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t p = 0; p < K; ++p) bt[p * N + j] = B[j * K + p];
    gemm_nn(M, N, K, A, bt.data(), C, accumulate);
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C, bool accumulate) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(M);
    EDEN_PARALLEL_FOR(M * N * K)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        T* c = C + i * N;
        if (!accumulate)
            for (std::size_t j = 0; j < N; ++j) c[j] = T(0);
        for (std::size_t p = 0; p < K; ++p) {
            const T s = A[p * M + i];
            if (s == T(0)) continue;
            const T* b = B + p * N;
#pragma omp simd
            for (std::size_t j = 0; j < N; ++j) c[j] += s * b[j];
        }
    }
}

template <typename T>
void attention_forward(const T* q, const T* k, const T* v, std::size_t groups, std::size_t lq, std::size_t lk,
                       std::size_t dim, std::size_t heads, T* out, T* probs) {
    const std::size_t hd = dim / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    const std::ptrdiff_t jobs = static_cast<std::ptrdiff_t>(groups * heads);
    EDEN_PARALLEL_FOR(groups * heads * lq * lk * hd)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const std::size_t g = static_cast<std::size_t>(job) / heads;
        const std::size_t h = static_cast<std::size_t>(job) % heads;
        T* P = probs + static_cast<std::size_t>(job) * lq * lk;
        for (std::size_t i = 0; i < lq; ++i) {
            const T* qi = q + (g * lq + i) * dim + h * hd;
            T* pi = P + i * lk;
            T mx = -std::numeric_limits<T>::infinity();
            for (std::size_t j = 0; j < lk; ++j) {
                const T* kj = k + (g * lk + j) * dim + h * hd;
                T s = T(0);
                for (std::size_t e = 0; e < hd; ++e) s += qi[e] * kj[e];
                pi[j] = s * scale;
                mx = std::max(mx, pi[j]);
            }
            T sum = T(0);
            for (std::size_t j = 0; j < lk; ++j) {
                pi[j] = std::exp(pi[j] - mx);
                sum += pi[j];
            }
            const T inv = T(1) / sum;
            for (std::size_t j = 0; j < lk; ++j) pi[j] *= inv;
            T* oi = out + (g * lq + i) * dim + h * hd;
            for (std::size_t e = 0; e < hd; ++e) oi[e] = T(0);
            for (std::size_t j = 0; j < lk; ++j) {
                const T w = pi[j];
                const T* vj = v + (g * lk + j) * dim + h * hd;
#pragma omp simd
                for (std::size_t e = 0; e < hd; ++e) oi[e] += w * vj[e];
            }
        }
    }
}

template <typename T>
void attention_backward(const T* q, const T* k, const T* v, const T* probs, const T* gout, std::size_t groups,
                        std::size_t lq, std::size_t lk, std::size_t dim, std::size_t heads, T* gq, T* gk, T* gv) {
    const std::size_t hd = dim / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(hd));
    const std::ptrdiff_t jobs = static_cast<std::ptrdiff_t>(groups * heads);
    EDEN_PARALLEL_FOR(groups * heads * lq * lk * hd)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const std::size_t g = static_cast<std::size_t>(job) / heads;
        const std::size_t h = static_cast<std::size_t>(job) % heads;
        const T* P = probs + static_cast<std::size_t>(job) * lq * lk;
        std::vector<T> dp(lk);
        for (std::size_t i = 0; i < lq; ++i) {
            const T* go = gout + (g * lq + i) * dim + h * hd;
            const T* pi = P + i * lk;
            // dV += P^T dO ; dP = dO V^T
            T dot = T(0);
            for (std::size_t j = 0; j < lk; ++j) {
                const T* vj = v + (g * lk + j) * dim + h * hd;
                T* gvj = gv + (g * lk + j) * dim + h * hd;
                T s = T(0);
                for (std::size_t e = 0; e < hd; ++e) {
                    s += go[e] * vj[e];
                    gvj[e] += pi[j] * go[e];
                }
                dp[j] = s;
                dot += s * pi[j];
            }
            // dS = P * (dP - <dP, P>)
            const T* qi = q + (g * lq + i) * dim + h * hd;
            T* gqi = gq + (g * lq + i) * dim + h * hd;
            for (std::size_t j = 0; j < lk; ++j) {
                const T ds = pi[j] * (dp[j] - dot) * scale;
                if (ds == T(0)) continue;
                const T* kj = k + (g * lk + j) * dim + h * hd;
                T* gkj = gk + (g * lk + j) * dim + h * hd;
                for (std::size_t e = 0; e < hd; ++e) {
                    gqi[e] += ds * kj[e];
                    gkj[e] += ds * qi[e];
                }
            }
        }
    }
}

template <typename T>
void layer_norm_forward(const T* x, std::size_t rows, std::size_t dim, T eps, T* y, T* rstd) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(rows);
    EDEN_PARALLEL_FOR(rows * dim * 8)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const T* xr = x + r * dim;
        T* yr = y + r * dim;
        T mean = T(0);
        for (std::size_t j = 0; j < dim; ++j) mean += xr[j];
        mean /= static_cast<T>(dim);
        T var = T(0);
        for (std::size_t j = 0; j < dim; ++j) {
            const T d = xr[j] - mean;
            var += d * d;
        }
        var /= static_cast<T>(dim);
        const T rs = T(1) / std::sqrt(var + eps);
        rstd[r] = rs;
        for (std::size_t j = 0; j < dim; ++j) yr[j] = (xr[j] - mean) * rs;
    }
}

template <typename T>
void layer_norm_backward(const T* gy, const T* y, const T* rstd, std::size_t rows, std::size_t dim, T* gx) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(rows);
    EDEN_PARALLEL_FOR(rows * dim * 8)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        const T* g = gy + r * dim;
        const T* yr = y + r * dim;
        T mg = T(0), mgy = T(0);
        for (std::size_t j = 0; j < dim; ++j) {
            mg += g[j];
            mgy += g[j] * yr[j];
        }
        mg /= static_cast<T>(dim);
        mgy /= static_cast<T>(dim);
        T* o = gx + r * dim;
        for (std::size_t j = 0; j < dim; ++j) o[j] += rstd[r] * (g[j] - mg - yr[j] * mgy);
    }
}

#define EDEN_INSTANTIATE(T)                                                                                  \
    template void gemm_nn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);           \
    template void gemm_nt<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);           \
    template void gemm_tn<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);           \
    template void attention_forward<T>(const T*, const T*, const T*, std::size_t, std::size_t, std::size_t,  \
                                       std::size_t, std::size_t, T*, T*);                                    \
    template void attention_backward<T>(const T*, const T*, const T*, const T*, const T*, std::size_t,       \
                                        std::size_t, std::size_t, std::size_t, std::size_t, T*, T*, T*);     \
    template void layer_norm_forward<T>(const T*, std::size_t, std::size_t, T, T*, T*);                      \
    template void layer_norm_backward<T>(const T*, const T*, const T*, std::size_t, std::size_t, T*);

EDEN_INSTANTIATE(float)
EDEN_INSTANTIATE(double)

#undef EDEN_INSTANTIATE
