#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "siphi/autodiff.hpp"
#include "siphi/params.hpp"
#include "siphi/rng.hpp"
#include "siphi/tensor.hpp"

namespace siphi::nn {

// Plain-value numerics ops. The graph versions live in siphi::ad.

// Mean Huber loss; quadratic within |e| <= delta, linear outside.
double huber_loss(std::span<const double> pred, std::span<const double> target, double delta = 1.0);

// [frames x dim] -> [ceil(frames / factor) x dim]; the trailing window is
// averaged over the frames it actually holds.
Tensor temporal_pool(const Tensor& x, std::size_t factor);

// [frames x dim] -> [1 x dim]
Tensor global_mean_pool(const Tensor& x);

// Pre-norm encoder block:
//   h = x + MHA(LN1(x));  y = h + FFN(LN2(h)),  FFN = W2 * gelu(W1 * . + b1) + b2
// No dropout. Positions are the caller's business (see sinusoidal_positions).
struct TransformerShape {
    std::size_t dim = 0;
    std::size_t heads = 4;
    std::size_t ff_mult = 4;
};

void init_transformer_block(ParamSet& params, const std::string& prefix, const TransformerShape& shape, Rng& rng);

ad::Var transformer_block(ad::Graph& g, ad::Var seq, const ad::VarMap& vars, const std::string& prefix,
                          const TransformerShape& shape);

// Value-level convenience wrapper; params must hold a block under `prefix`.
Tensor transformer_block_forward(const Tensor& seq, const ParamSet& params, const std::string& prefix,
                                 const TransformerShape& shape);

// Standard sin/cos table [tokens x dim].
Tensor sinusoidal_positions(std::size_t tokens, std::size_t dim);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight [fan_in x fan_out].
Tensor uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace siphi::nn
