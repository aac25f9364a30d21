#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "eden/core/maps.hpp"
#include "eden/core/params.hpp"
#include "eden/core/tensor.hpp"

namespace eden {

struct Var {
    std::uint32_t id = 0xFFFFFFFFu;
};

// Tape-based reverse-mode autodiff. One Graph per forward pass; nodes are
// appended in evaluation order, so backward() is a reverse sweep. Parameter
// leaves accumulate their gradient into Parameter::grad.
//
// A Graph built with track = false records no backward closures and is the
// inference path.
template <typename T>
class Graph {
public:
    explicit Graph(bool track = true) : track_(track) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var input(Tensor<T> value);
    Var param(Parameter<T>& p);

    const Tensor<T>& value(Var v) const;
    T scalar(Var v) const { return value(v)[0]; }
    std::size_t rows(Var v) const { return value(v).rows(); }
    std::size_t cols(Var v) const { return value(v).cols(); }
    bool tracking() const { return track_; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 for a 1x1 node and sweeps backward.
    void backward(Var loss);
    // Gradient reached at a node after backward() (zeros if none flowed).
    Tensor<T> grad(Var v) const;

    // Linear algebra
    Var matmul(Var a, Var b);
    Var linear(Var x, Var w, Var b);  // x * w + b, b is (1, out)
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var add_row(Var x, Var r);  // broadcast a (1, cols) row over x
    Var mul_row(Var x, Var r);
    Var scale(Var x, T s);
    Var add_scalar(Var x, T s);

    // Pointwise
    Var gelu(Var x);  // tanh approximation
    Var silu(Var x);
    Var relu(Var x);
    Var leaky_relu(Var x, T slope);
    Var exp(Var x);
    Var square(Var x);
    Var abs(Var x);
    Var clamp(Var x, T lo, T hi);  // zero gradient outside [lo, hi]

    // Reductions to (1, 1)
    Var sum(Var x);
    Var mean(Var x);

    // Structure
    Var layer_norm(Var x, T eps = T(1e-6));
    Var attention(Var q, Var k, Var v, std::size_t groups, std::size_t heads);
    Var row_mix(Var x, std::shared_ptr<const RowMix> map);
    Var gather(Var x, std::shared_ptr<const ElemMap> map);
    Var concat_rows(const std::vector<Var>& parts);
    Var slice_rows(Var x, std::size_t begin, std::size_t end);
    Var slice_cols(Var x, std::size_t begin, std::size_t end);

private:
    struct Node {
        Tensor<T> value;
        const Tensor<T>* external = nullptr;
        Tensor<T> grad;
        Tensor<T>* sink = nullptr;
        bool needs_grad = false;
        std::function<void(Graph&, std::uint32_t)> backprop;
    };

    const Tensor<T>& val(std::uint32_t id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.value;
    }
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    Tensor<T>& grad_ref(std::uint32_t id);
    const Tensor<T>& out_grad(std::uint32_t id) const { return nodes_[id].grad; }
    Var push(Tensor<T> value, bool needs_grad, std::function<void(Graph&, std::uint32_t)> backprop);
    void check(Var v) const;

    bool track_;
    std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace eden
