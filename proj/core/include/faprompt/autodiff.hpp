// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "faprompt/tensor.hpp"

namespace faprompt {

/// Handle to a node in a Graph.
struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

/// Reverse-mode autodiff tape over Tensor-valued nodes.
///
/// A Graph is built forward by calling op methods and torn down by value;
/// one Graph per optimization step is the intended usage. Scalars are
/// size-1 rank-1 tensors. Gradients are accumulated by backward() into
/// every node with requires_grad set (leaves opt in, interior nodes
/// inherit from their parents).
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var leaf(Tensor value, bool requires_grad = false);

    // Elementwise ops; binary ops require identical shapes.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    /// scale * a + shift, elementwise.
    Var affine(Var a, double scale, double shift);
    /// Elementwise product with a constant tensor.
    Var mul_const(Var a, Tensor weights);
    /// Broadcast multiply of a tensor by a scalar node.
    Var mul_scalar(Var a, Var s);
    Var tanh_op(Var a);
    Var relu(Var a);
    Var exp_op(Var a);
    Var log_op(Var a);
    /// |x|; subgradient 0 at x == 0.
    Var abs_op(Var a);
    /// Numerically stable logistic; sigmoid(b - a) is the two-way softmax of (a, b).
    Var sigmoid(Var a);
    Var sqrt_op(Var a);
    Var pow_const(Var a, double exponent);
    /// Clamp with zero gradient outside [lo, hi].
    Var clamp(Var a, double lo, double hi);

    // Shape manipulation and reductions.
    Var matvec(Var m, Var v);
    Var dot(Var a, Var b);
    Var sum(Var a);
    Var mean(Var a);
    /// Maximum entry; gradient routed to the first occurrence.
    Var max(Var a);
    /// Contiguous slice of the flat storage (rows of row-major tensors).
    Var subvector(Var a, std::size_t offset, std::size_t len);
    Var concat(std::span<const Var> parts);
    /// Mean of equally-shaped vectors. Per-component addends are summed in
    /// value order, so the result is independent of the input permutation.
    Var mean_vectors(std::span<const Var> vectors);
    Var reshape(Var a, std::vector<std::size_t> shape);

    /// Cosine similarity of each row of a constant matrix against a vector
    /// node. Throws ValidationError on any zero-norm row or vector.
    Var cosine_rows(Tensor rows, Var e);

    /// Bilinear upsampling of a flattened grid_h x grid_w field to
    /// out_h x out_w, half-pixel-center convention. Linear in the input.
    Var bilinear_resize(Var grid, std::size_t grid_h, std::size_t grid_w, std::size_t out_h,
                        std::size_t out_w);

    /// Accumulates gradients of a scalar root into all contributing nodes.
    void backward(Var root);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    /// Accumulated gradient of the last backward() root w.r.t. v; allocates
    /// (and returns) zeros when no gradient reached the node.
    const Tensor& grad(Var v);
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated lazily; empty means "no gradient seen yet"
        bool requires_grad = false;
        std::function<void(Graph&, const Tensor&)> back;  // upstream grad -> parents
    };

    Var make(Tensor value, bool requires_grad, std::function<void(Graph&, const Tensor&)> back);
    void accumulate(std::size_t id, const Tensor& g);

    template <typename Fwd, typename Bwd>
    Var elementwise(Var a, Fwd&& fwd, Bwd&& dfdx);

    std::vector<Node> nodes_;
};

}  // namespace faprompt
