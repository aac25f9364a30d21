#include "eden/core/graph.hpp"

#include <cmath>

#include "eden/core/kernels.hpp"

namespace eden {

template <typename T>
Var Graph<T>::push(Tensor<T> value, bool needs_grad, std::function<void(Graph&, std::uint32_t)> backprop) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = track_ && needs_grad;
    if (n.needs_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
void Graph<T>::check(Var v) const {
    require(v.id < nodes_.size(), "shape", "graph variable does not belong to this graph");
}

template <typename T>
Tensor<T>& Graph<T>::grad_ref(std::uint32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
        const Tensor<T>& v = val(id);
        n.grad = Tensor<T>(v.rows(), v.cols());
    }
    return n.grad;
}

template <typename T>
Var Graph<T>::input(Tensor<T> value) {
    return push(std::move(value), false, nullptr);
}

template <typename T>
Var Graph<T>::param(Parameter<T>& p) {
    Node n;
    n.external = &p.value;
    n.needs_grad = track_;
    n.sink = track_ ? &p.grad : nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Graph<T>::value(Var v) const {
    check(v);
    return val(v.id);
}

template <typename T>
Tensor<T> Graph<T>::grad(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor<T>(val(v.id).rows(), val(v.id).cols());
    return n.grad;
}

template <typename T>
void Graph<T>::backward(Var loss) {
    check(loss);
    require(track_, "config", "backward() on a graph built without tracking");
    require(val(loss.id).size() == 1, "shape", "backward() needs a scalar loss");
    grad_ref(loss.id)[0] = T(1);
    for (std::int64_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs_grad || n.grad.empty() || !n.backprop) continue;
        n.backprop(*this, static_cast<std::uint32_t>(id));
    }
    for (Node& n : nodes_) {
        if (!n.sink || n.grad.empty()) continue;
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*n.sink)[i] += n.grad[i];
    }
}

// ---------------------------------------------------------------- linear algebra

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
    check(a), check(b);
    const auto& A = val(a.id);
    const auto& B = val(b.id);
    require(A.cols() == B.rows(), "shape", "matmul: inner dimensions differ " + A.shape_str() + " x " + B.shape_str());
    const std::size_t M = A.rows(), K = A.cols(), N = B.cols();
    Tensor<T> out(M, N);
    kernels::gemm_nn(M, N, K, A.data(), B.data(), out.data(), false);
    return push(std::move(out), needs(a) || needs(b), [a, b, M, N, K](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        if (g.needs(a)) kernels::gemm_nt(M, K, N, go.data(), g.val(b.id).data(), g.grad_ref(a.id).data(), true);
        if (g.needs(b)) kernels::gemm_tn(K, N, M, g.val(a.id).data(), go.data(), g.grad_ref(b.id).data(), true);
    });
}

template <typename T>
Var Graph<T>::linear(Var x, Var w, Var b) {
    check(x), check(w), check(b);
    const auto& X = val(x.id);
    const auto& W = val(w.id);
    const auto& B = val(b.id);
    require(X.cols() == W.rows(), "shape", "linear: input " + X.shape_str() + " vs weight " + W.shape_str());
    require(B.rows() == 1 && B.cols() == W.cols(), "shape", "linear: bias shape " + B.shape_str());
    const std::size_t M = X.rows(), K = X.cols(), N = W.cols();
    Tensor<T> out(M, N);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) out(i, j) = B[j];
    kernels::gemm_nn(M, N, K, X.data(), W.data(), out.data(), true);
    return push(std::move(out), needs(x) || needs(w) || needs(b), [x, w, b, M, N, K](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        if (g.needs(x)) kernels::gemm_nt(M, K, N, go.data(), g.val(w.id).data(), g.grad_ref(x.id).data(), true);
        if (g.needs(w)) kernels::gemm_tn(K, N, M, g.val(x.id).data(), go.data(), g.grad_ref(w.id).data(), true);
        if (g.needs(b)) {
            auto& gb = g.grad_ref(b.id);
            for (std::size_t i = 0; i < M; ++i)
                for (std::size_t j = 0; j < N; ++j) gb[j] += go(i, j);
        }
    });
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "add");
    Tensor<T> out = val(a.id);
    const auto& B = val(b.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        for (Var v : {a, b}) {
            if (!g.needs(v)) continue;
            auto& gv = g.grad_ref(v.id);
            for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i];
        }
    });
}

template <typename T>
Var Graph<T>::sub(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "sub");
    Tensor<T> out = val(a.id);
    const auto& B = val(b.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        if (g.needs(a)) {
            auto& ga = g.grad_ref(a.id);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (g.needs(b)) {
            auto& gb = g.grad_ref(b.id);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
        }
    });
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
    check(a), check(b);
    require_same_shape(val(a.id), val(b.id), "mul");
    Tensor<T> out = val(a.id);
    const auto& B = val(b.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        if (g.needs(a)) {
            auto& ga = g.grad_ref(a.id);
            const auto& B = g.val(b.id);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * B[i];
        }
        if (g.needs(b)) {
            auto& gb = g.grad_ref(b.id);
            const auto& A = g.val(a.id);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * A[i];
        }
    });
}

template <typename T>
Var Graph<T>::add_row(Var x, Var r) {
    check(x), check(r);
    const auto& R = val(r.id);
    Tensor<T> out = val(x.id);
    require(R.rows() == 1 && R.cols() == out.cols(), "shape", "add_row: row " + R.shape_str() + " vs " + out.shape_str());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += R[j];
    return push(std::move(out), needs(x) || needs(r), [x, r](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        if (g.needs(x)) {
            auto& gx = g.grad_ref(x.id);
            for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        }
        if (g.needs(r)) {
            auto& gr = g.grad_ref(r.id);
            for (std::size_t i = 0; i < go.rows(); ++i)
                for (std::size_t j = 0; j < go.cols(); ++j) gr[j] += go(i, j);
        }
    });
}

template <typename T>
Var Graph<T>::mul_row(Var x, Var r) {
    check(x), check(r);
    const auto& R = val(r.id);
    Tensor<T> out = val(x.id);
    require(R.rows() == 1 && R.cols() == out.cols(), "shape", "mul_row: row " + R.shape_str() + " vs " + out.shape_str());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= R[j];
    return push(std::move(out), needs(x) || needs(r), [x, r](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        const auto& X = g.val(x.id);
        const auto& R = g.val(r.id);
        if (g.needs(x)) {
            auto& gx = g.grad_ref(x.id);
            for (std::size_t i = 0; i < go.rows(); ++i)
                for (std::size_t j = 0; j < go.cols(); ++j) gx(i, j) += go(i, j) * R[j];
        }
        if (g.needs(r)) {
            auto& gr = g.grad_ref(r.id);
            for (std::size_t i = 0; i < go.rows(); ++i)
                for (std::size_t j = 0; j < go.cols(); ++j) gr[j] += go(i, j) * X(i, j);
        }
    });
}

template <typename T>
Var Graph<T>::scale(Var x, T s) {
    check(x);
    Tensor<T> out = val(x.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    return push(std::move(out), needs(x), [x, s](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * s;
    });
}

template <typename T>
Var Graph<T>::add_scalar(Var x, T s) {
    check(x);
    Tensor<T> out = val(x.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
    return push(std::move(out), needs(x), [x](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
    });
}

// ---------------------------------------------------------------- pointwise

#define EDEN_UNARY(NAME, FWD, DERIV)                                                                 \
    template <typename T>                                                                            \
    Var Graph<T>::NAME(Var x) {                                                                      \
        check(x);                                                                                    \
        const auto& X = val(x.id);                                                                   \
        Tensor<T> out(X.rows(), X.cols());                                                           \
        for (std::size_t i = 0; i < X.size(); ++i) {                                                 \
            const T v = X[i];                                                                        \
            out[i] = (FWD);                                                                          \
        }                                                                                            \
        return push(std::move(out), needs(x), [x](Graph& g, std::uint32_t self) {                   \
            const auto& go = g.out_grad(self);                                                       \
            const auto& X = g.val(x.id);                                                             \
            const auto& Y = g.val(self);                                                             \
            auto& gx = g.grad_ref(x.id);                                                             \
            for (std::size_t i = 0; i < go.size(); ++i) {                                            \
                const T v = X[i];                                                                    \
                const T y = Y[i];                                                                    \
                (void)y;                                                                             \
                (void)v;                                                                             \
                gx[i] += go[i] * (DERIV);                                                            \
            }                                                                                        \
        });                                                                                          \
    }

namespace {
template <typename T>
T gelu_fwd(T v) {
    const T c = static_cast<T>(0.7978845608028654);
    return T(0.5) * v * (T(1) + std::tanh(c * (v + T(0.044715) * v * v * v)));
}
template <typename T>
T gelu_grad(T v) {
    const T c = static_cast<T>(0.7978845608028654);
    const T th = std::tanh(c * (v + T(0.044715) * v * v * v));
    return T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * c * (T(1) + T(3) * T(0.044715) * v * v);
}
template <typename T>
T sigmoid(T v) {
    return T(1) / (T(1) + std::exp(-v));
}
}  // namespace

EDEN_UNARY(gelu, gelu_fwd(v), gelu_grad(v))
EDEN_UNARY(silu, v* sigmoid(v), sigmoid(v) * (T(1) + v * (T(1) - sigmoid(v))))
EDEN_UNARY(relu, v > T(0) ? v : T(0), v > T(0) ? T(1) : T(0))
EDEN_UNARY(exp, std::exp(v), y)
EDEN_UNARY(square, v* v, T(2) * v)
EDEN_UNARY(abs, std::abs(v), v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)))

#undef EDEN_UNARY

template <typename T>
Var Graph<T>::leaky_relu(Var x, T slope) {
    check(x);
    const auto& X = val(x.id);
    Tensor<T> out(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) out[i] = X[i] > T(0) ? X[i] : slope * X[i];
    return push(std::move(out), needs(x), [x, slope](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        const auto& X = g.val(x.id);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * (X[i] > T(0) ? T(1) : slope);
    });
}

template <typename T>
Var Graph<T>::clamp(Var x, T lo, T hi) {
    check(x);
    const auto& X = val(x.id);
    Tensor<T> out(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.size(); ++i) out[i] = std::min(std::max(X[i], lo), hi);
    return push(std::move(out), needs(x), [x, lo, hi](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        const auto& X = g.val(x.id);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.size(); ++i)
            if (X[i] >= lo && X[i] <= hi) gx[i] += go[i];
    });
}

// ---------------------------------------------------------------- reductions

template <typename T>
Var Graph<T>::sum(Var x) {
    check(x);
    const auto& X = val(x.id);
    T s = T(0);
    for (std::size_t i = 0; i < X.size(); ++i) s += X[i];
    return push(Tensor<T>(1, 1, s), needs(x), [x](Graph& g, std::uint32_t self) {
        const T go = g.out_grad(self)[0];
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
    });
}

template <typename T>
Var Graph<T>::mean(Var x) {
    check(x);
    const auto& X = val(x.id);
    require(X.size() > 0, "shape", "mean of an empty tensor");
    T s = T(0);
    for (std::size_t i = 0; i < X.size(); ++i) s += X[i];
    const T inv = T(1) / static_cast<T>(X.size());
    return push(Tensor<T>(1, 1, s * inv), needs(x), [x, inv](Graph& g, std::uint32_t self) {
        const T go = g.out_grad(self)[0] * inv;
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go;
    });
}

// ---------------------------------------------------------------- structure

template <typename T>
Var Graph<T>::layer_norm(Var x, T eps) {
    check(x);
    const auto& X = val(x.id);
    Tensor<T> out(X.rows(), X.cols());
    auto rstd = std::make_shared<std::vector<T>>(X.rows());
    kernels::layer_norm_forward(X.data(), X.rows(), X.cols(), eps, out.data(), rstd->data());
    return push(std::move(out), needs(x), [x, rstd](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        const auto& Y = g.val(self);
        kernels::layer_norm_backward(go.data(), Y.data(), rstd->data(), Y.rows(), Y.cols(), g.grad_ref(x.id).data());
    });
}

template <typename T>
Var Graph<T>::attention(Var q, Var k, Var v, std::size_t groups, std::size_t heads) {
    check(q), check(k), check(v);
    const auto& Q = val(q.id);
    const auto& K = val(k.id);
    const auto& V = val(v.id);
    require(groups > 0 && heads > 0, "shape", "attention: groups and heads must be positive");
    require(K.same_shape(V), "shape", "attention: key/value shapes differ");
    require(Q.cols() == K.cols(), "shape", "attention: query/key widths differ");
    require(Q.cols() % heads == 0, "shape", "attention: width not divisible by head count");
    require(Q.rows() % groups == 0 && K.rows() % groups == 0, "shape", "attention: rows not divisible by groups");
    const std::size_t lq = Q.rows() / groups, lk = K.rows() / groups, dim = Q.cols();
    Tensor<T> out(Q.rows(), dim);
    auto probs = std::make_shared<std::vector<T>>(groups * heads * lq * lk);
    kernels::attention_forward(Q.data(), K.data(), V.data(), groups, lq, lk, dim, heads, out.data(), probs->data());
    return push(std::move(out), needs(q) || needs(k) || needs(v),
                [q, k, v, probs, groups, lq, lk, dim, heads](Graph& g, std::uint32_t self) {
                    auto& gq = g.grad_ref(q.id);
                    auto& gk = g.grad_ref(k.id);
                    auto& gv = g.grad_ref(v.id);
                    kernels::attention_backward(g.val(q.id).data(), g.val(k.id).data(), g.val(v.id).data(),
                                                probs->data(), g.out_grad(self).data(), groups, lq, lk, dim, heads,
                                                gq.data(), gk.data(), gv.data());
                });
}

template <typename T>
Var Graph<T>::row_mix(Var x, std::shared_ptr<const RowMix> map) {
    check(x);
    const auto& X = val(x.id);
    require(X.rows() == map->in_rows, "shape",
            "row_mix: expected " + std::to_string(map->in_rows) + " rows, got " + std::to_string(X.rows()));
    const std::size_t cols = X.cols();
    Tensor<T> out(map->out_rows, cols);
    for (std::size_t i = 0; i < map->out_rows; ++i) {
        T* o = out.data() + i * cols;
        for (std::uint32_t e = map->offsets[i]; e < map->offsets[i + 1]; ++e) {
            const T w = static_cast<T>(map->weight[e]);
            const T* s = X.data() + static_cast<std::size_t>(map->src[e]) * cols;
            for (std::size_t j = 0; j < cols; ++j) o[j] += w * s[j];
        }
    }
    return push(std::move(out), needs(x), [x, map, cols](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < map->out_rows; ++i) {
            const T* o = go.data() + i * cols;
            for (std::uint32_t e = map->offsets[i]; e < map->offsets[i + 1]; ++e) {
                const T w = static_cast<T>(map->weight[e]);
                T* s = gx.data() + static_cast<std::size_t>(map->src[e]) * cols;
                for (std::size_t j = 0; j < cols; ++j) s[j] += w * o[j];
            }
        }
    });
}

template <typename T>
Var Graph<T>::gather(Var x, std::shared_ptr<const ElemMap> map) {
    check(x);
    const auto& X = val(x.id);
    require(X.rows() == map->in_rows && X.cols() == map->in_cols, "shape",
            "gather: input " + X.shape_str() + " does not match map input (" + std::to_string(map->in_rows) + ", " +
                std::to_string(map->in_cols) + ")");
    Tensor<T> out(map->out_rows, map->out_cols);
    for (std::size_t i = 0; i < map->src.size(); ++i) {
        const auto s = map->src[i];
        out[i] = s < 0 ? T(0) : X[static_cast<std::size_t>(s)];
    }
    return push(std::move(out), needs(x), [x, map](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < map->src.size(); ++i) {
            const auto s = map->src[i];
            if (s >= 0) gx[static_cast<std::size_t>(s)] += go[i];
        }
    });
}

template <typename T>
Var Graph<T>::concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "shape", "concat_rows of nothing");
    std::size_t rows = 0;
    const std::size_t cols = value(parts[0]).cols();
    bool any = false;
    for (Var p : parts) {
        require(value(p).cols() == cols, "shape", "concat_rows: column counts differ");
        rows += value(p).rows();
        any = any || needs(p);
    }
    Tensor<T> out(rows, cols);
    std::size_t at = 0;
    for (Var p : parts) {
        const auto& P = val(p.id);
        std::copy(P.data(), P.data() + P.size(), out.data() + at);
        at += P.size();
    }
    return push(std::move(out), any, [parts](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        std::size_t at = 0;
        for (Var p : parts) {
            const std::size_t n = g.val(p.id).size();
            if (g.needs(p)) {
                auto& gp = g.grad_ref(p.id);
                for (std::size_t i = 0; i < n; ++i) gp[i] += go[at + i];
            }
            at += n;
        }
    });
}

template <typename T>
Var Graph<T>::slice_rows(Var x, std::size_t begin, std::size_t end) {
    check(x);
    const auto& X = val(x.id);
    require(begin <= end && end <= X.rows(), "shape", "slice_rows out of range");
    const std::size_t cols = X.cols();
    Tensor<T> out(end - begin, cols);
    std::copy(X.data() + begin * cols, X.data() + end * cols, out.data());
    return push(std::move(out), needs(x), [x, begin, cols](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.size(); ++i) gx[begin * cols + i] += go[i];
    });
}

template <typename T>
Var Graph<T>::slice_cols(Var x, std::size_t begin, std::size_t end) {
    check(x);
    const auto& X = val(x.id);
    require(begin <= end && end <= X.cols(), "shape", "slice_cols out of range");
    Tensor<T> out(X.rows(), end - begin);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = begin; j < end; ++j) out(i, j - begin) = X(i, j);
    return push(std::move(out), needs(x), [x, begin](Graph& g, std::uint32_t self) {
        const auto& go = g.out_grad(self);
        auto& gx = g.grad_ref(x.id);
        for (std::size_t i = 0; i < go.rows(); ++i)
            for (std::size_t j = 0; j < go.cols(); ++j) gx(i, j + begin) += go(i, j);
    });
}

template class Graph<float>;
template class Graph<double>;

}  // namespace eden
