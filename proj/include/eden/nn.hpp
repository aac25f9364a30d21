#pragma once

#include <string>

#include "eden/core/graph.hpp"
#include "eden/core/params.hpp"
#include "eden/core/rng.hpp"

namespace eden::nn {

enum class Init { Xavier, Small, Zero };

template <typename T>
void apply_init(Parameter<T>& p, Rng& rng, Init init) {
    switch (init) {
        case Init::Xavier: init_xavier(p, rng); break;
        case Init::Small: init_normal(p, rng, 0.02); break;
        case Init::Zero: init_constant(p, 0.0); break;
    }
}

// y = x W + b with W stored (in, out).
template <typename T>
struct Linear {
    Parameter<T>* weight = nullptr;
    Parameter<T>* bias = nullptr;

    static Linear make(ParamStore<T>& ps, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                       Init init = Init::Xavier) {
        Linear l;
        l.weight = &ps.add(name + ".weight", in, out);
        l.bias = &ps.add(name + ".bias", 1, out);
        apply_init(*l.weight, rng, init);
        return l;
    }

    std::size_t in() const { return weight->value.rows(); }
    std::size_t out() const { return weight->value.cols(); }

    Var operator()(Graph<T>& g, Var x) const { return g.linear(x, g.param(*weight), g.param(*bias)); }
};

// Layer norm with learned per-channel scale and shift.
template <typename T>
struct Norm {
    Parameter<T>* gamma = nullptr;
    Parameter<T>* beta = nullptr;

    static Norm make(ParamStore<T>& ps, const std::string& name, std::size_t dim) {
        Norm n;
        n.gamma = &ps.add(name + ".gamma", 1, dim);
        n.beta = &ps.add(name + ".beta", 1, dim);
        init_constant(*n.gamma, 1.0);
        return n;
    }

    Var operator()(Graph<T>& g, Var x) const {
        return g.add_row(g.mul_row(g.layer_norm(x), g.param(*gamma)), g.param(*beta));
    }
};

// Multi-head attention with separate query and key/value inputs, so callers
// can attend from a subset of positions.
template <typename T>
struct Attention {
    Linear<T> q, k, v, out;
    std::size_t heads = 1;

    static Attention make(ParamStore<T>& ps, const std::string& name, std::size_t dim, std::size_t heads, Rng& rng,
                          Init out_init = Init::Xavier) {
        Attention a;
        a.q = Linear<T>::make(ps, name + ".q", dim, dim, rng);
        a.k = Linear<T>::make(ps, name + ".k", dim, dim, rng);
        a.v = Linear<T>::make(ps, name + ".v", dim, dim, rng);
        a.out = Linear<T>::make(ps, name + ".out", dim, dim, rng, out_init);
        a.heads = heads;
        return a;
    }

    // queries: (groups * lq, dim); keys: (groups * lk, dim).
    Var operator()(Graph<T>& g, Var queries, Var keys, std::size_t groups) const {
        const Var Q = q(g, queries);
        const Var K = k(g, keys);
        const Var V = v(g, keys);
        return out(g, g.attention(Q, K, V, groups, heads));
    }
};

// Two-layer MLP, expansion 4, GELU.
template <typename T>
struct FeedForward {
    Linear<T> fc1, fc2;

    static FeedForward make(ParamStore<T>& ps, const std::string& name, std::size_t dim, std::size_t expansion, Rng& rng,
                            Init out_init = Init::Xavier) {
        FeedForward f;
        f.fc1 = Linear<T>::make(ps, name + ".fc1", dim, dim * expansion, rng);
        f.fc2 = Linear<T>::make(ps, name + ".fc2", dim * expansion, dim, rng, out_init);
        return f;
    }

    Var operator()(Graph<T>& g, Var x) const { return fc2(g, g.gelu(fc1(g, x))); }
};

// Learnable (grid_h * grid_w, dim) table, bilinearly resized on demand.
template <typename T>
struct PositionEmbedding {
    Parameter<T>* table = nullptr;
    std::size_t grid_h = 0, grid_w = 0;

    static PositionEmbedding make(ParamStore<T>& ps, const std::string& name, std::size_t gh, std::size_t gw,
                                  std::size_t dim, Rng& rng) {
        PositionEmbedding pe;
        pe.table = &ps.add(name, gh * gw, dim);
        pe.grid_h = gh;
        pe.grid_w = gw;
        init_normal(*pe.table, rng, 0.02);
        return pe;
    }

    Var at(Graph<T>& g, std::size_t h, std::size_t w) const {
        const Var p = g.param(*table);
        if (h == grid_h && w == grid_w) return p;
        const std::size_t gh = grid_h, gw = grid_w;
        auto map = maps::cached("bilinear:" + std::to_string(gh) + "x" + std::to_string(gw) + "->" + std::to_string(h) +
                                    "x" + std::to_string(w),
                                [=] { return maps::resize_bilinear(gh, gw, h, w); });
        return g.row_mix(p, map);
    }
};

}  // namespace eden::nn
