#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "siphi/tensor.hpp"

// Minimal reverse-mode differentiation over rank-2 tensors.
//
// A Graph is a tape: every op appends a node holding its value and, when any
// input needs a gradient, a closure that pushes the output gradient back to
// the inputs. Nodes are created in topological order, so backward() is a
// single reverse sweep. Graphs are cheap, single-threaded and meant to be
// built per sample (or per chunk of samples) and thrown away.

namespace siphi::ad {

struct Var {
    std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
    bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

class Graph {
public:
    using Backprop = std::function<void(Graph&, const Tensor& out_grad)>;

    Var constant(Tensor value);
    Var leaf(Tensor value);

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    // Gradient of the last backward() root with respect to v (zeros if untouched).
    Tensor grad(Var v) const;

    // Seeds d(root)/d(root) = seed; root must hold exactly one element.
    void backward(Var root, double seed = 1.0);

    std::size_t size() const { return nodes_.size(); }

    Graph() { nodes_.reserve(1024); }

    // Op-construction interface. The closure is only materialised when some
    // input needs a gradient, so constant-only graphs skip the allocation.
    template <class F>
    Var record(Tensor value, std::span<const Var> inputs, F&& backprop) {
        const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return requires_grad(v); });
        nodes_.push_back(Node{std::move(value), {}, needs, needs ? Backprop(std::forward<F>(backprop)) : Backprop{}});
        return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
    }
    template <class F>
    Var record(Tensor value, std::initializer_list<Var> inputs, F&& backprop) {
        return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::forward<F>(backprop));
    }
    // Zero-initialised gradient buffer for v; callers add into it.
    Tensor& grad_buffer(Var v);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Backprop backprop;
    };
    std::vector<Node> nodes_;
};

using VarMap = std::map<std::string, Var>;

Var matmul(Graph& g, Var a, Var b);
Var transpose(Graph& g, Var a);
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double s);
// a[r x c] + b[1 x c] broadcast over rows.
Var add_bias(Graph& g, Var a, Var b);
// x[r x in] * w[in x out] + b[1 x out]
Var linear(Graph& g, Var x, Var w, Var b);
// Scaled dot-product attention over `heads` equal column groups of q, k, v
// (all [t x d]); heads are concatenated back in column order.
Var multi_head_attention(Graph& g, Var q, Var k, Var v, std::size_t heads);
Var gelu(Graph& g, Var a);
Var softmax_rows(Graph& g, Var a);
Var layer_norm_rows(Graph& g, Var x, Var gamma, Var beta, double eps = 1e-5);
// [r x c] -> [1 x c]
Var mean_rows(Graph& g, Var a);
// [T x c] -> [ceil(T/factor) x c], non-overlapping window means.
Var temporal_pool(Graph& g, Var a, std::size_t factor);
Var slice_cols(Graph& g, Var a, std::size_t begin, std::size_t count);
Var concat_cols(Graph& g, std::span<const Var> parts);
// n rows of [1 x c] -> [n x c]
Var stack_rows(Graph& g, std::span<const Var> rows);
// sum_i weights[i] * items[i]; items are [1 x d], weights is [1 x n].
Var weighted_sum(Graph& g, std::span<const Var> items, Var weights);
// Mean Huber loss of pred (any shape with target's element count) against a constant target.
Var huber_loss(Graph& g, Var pred, const Tensor& target, double delta);
Var sum_all(Graph& g, Var a);

}  // namespace siphi::ad
