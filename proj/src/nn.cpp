#include "siphi/nn.hpp"

#include <cmath>

#include "siphi/errors.hpp"

namespace siphi::nn {

double huber_loss(std::span<const double> pred, std::span<const double> target, double delta) {
    if (pred.size() != target.size())
        throw ShapeError("huber_loss: " + std::to_string(pred.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
    if (pred.empty()) throw DomainError("huber_loss: empty input");
    if (!(delta > 0.0)) throw DomainError("huber_loss: delta must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = std::abs(pred[i] - target[i]);
        total += e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta);
    }
    return total / static_cast<double>(pred.size());
}

Tensor temporal_pool(const Tensor& x, std::size_t factor) {
    ad::Graph g;
    return g.value(ad::temporal_pool(g, g.constant(x), factor));
}

Tensor global_mean_pool(const Tensor& x) {
    if (x.rank() != 2 || x.rows() == 0) throw DomainError("global_mean_pool: empty frame axis");
    ad::Graph g;
    return g.value(ad::mean_rows(g, g.constant(x)));
}

Tensor uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w = Tensor::matrix(fan_in, fan_out);
    for (auto& v : w.data()) v = rng.uniform(-bound, bound);
    return w;
}

namespace {

void check_shape(const TransformerShape& s) {
    if (s.dim == 0 || s.heads == 0 || s.ff_mult == 0) throw ConfigError("transformer: dim, heads, ff_mult must be > 0");
    if (s.dim % s.heads != 0)
        throw ConfigError("transformer: dim " + std::to_string(s.dim) + " not divisible by " +
                          std::to_string(s.heads) + " heads");
}

}  // namespace

void init_transformer_block(ParamSet& params, const std::string& prefix, const TransformerShape& shape, Rng& rng) {
    check_shape(shape);
    const auto d = shape.dim, h = shape.dim * shape.ff_mult;
    params.add(prefix + ".ln1.gamma", Tensor::matrix(1, d, 1.0));
    params.add(prefix + ".ln1.beta", Tensor::matrix(1, d, 0.0));
    for (const char* m : {"q", "k", "v", "o"}) {
        params.add(prefix + ".attn.w" + m, uniform_init(d, d, rng));
        params.add(prefix + ".attn.b" + m, Tensor::matrix(1, d, 0.0));
    }
    params.add(prefix + ".ln2.gamma", Tensor::matrix(1, d, 1.0));
    params.add(prefix + ".ln2.beta", Tensor::matrix(1, d, 0.0));
    params.add(prefix + ".ff.w1", uniform_init(d, h, rng));
    params.add(prefix + ".ff.b1", Tensor::matrix(1, h, 0.0));
    params.add(prefix + ".ff.w2", uniform_init(h, d, rng));
    params.add(prefix + ".ff.b2", Tensor::matrix(1, d, 0.0));
}

ad::Var transformer_block(ad::Graph& g, ad::Var seq, const ad::VarMap& vars, const std::string& prefix,
                          const TransformerShape& shape) {
    check_shape(shape);
    const auto& x = g.value(seq);
    if (x.rank() != 2 || x.cols() != shape.dim)
        throw ShapeError("transformer block '" + prefix + "' expects [tokens x " + std::to_string(shape.dim) +
                         "], got " + shape_string(x.shape()));
    std::string name = prefix;
    auto p = [&](const char* suffix) {
        name.resize(prefix.size());
        name += suffix;
        return vars.at(name);
    };

    auto n1 = ad::layer_norm_rows(g, seq, p(".ln1.gamma"), p(".ln1.beta"));
    auto q = ad::linear(g, n1, p(".attn.wq"), p(".attn.bq"));
    auto k = ad::linear(g, n1, p(".attn.wk"), p(".attn.bk"));
    auto v = ad::linear(g, n1, p(".attn.wv"), p(".attn.bv"));
    auto attn = ad::linear(g, ad::multi_head_attention(g, q, k, v, shape.heads), p(".attn.wo"), p(".attn.bo"));
    auto h1 = ad::add(g, seq, attn);

    auto n2 = ad::layer_norm_rows(g, h1, p(".ln2.gamma"), p(".ln2.beta"));
    auto ff = ad::linear(g, ad::gelu(g, ad::linear(g, n2, p(".ff.w1"), p(".ff.b1"))), p(".ff.w2"), p(".ff.b2"));
    return ad::add(g, h1, ff);
}

Tensor transformer_block_forward(const Tensor& seq, const ParamSet& params, const std::string& prefix,
                                 const TransformerShape& shape) {
    ad::Graph g;
    ad::VarMap vars;
    for (const auto& [name, p] : params.entries()) vars[name] = g.constant(p.value);
    return g.value(transformer_block(g, g.constant(seq), vars, prefix, shape));
}

Tensor sinusoidal_positions(std::size_t tokens, std::size_t dim) {
    Tensor pe = Tensor::matrix(tokens, dim);
    for (std::size_t t = 0; t < tokens; ++t) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
            const double angle = static_cast<double>(t) * rate;
            pe(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

}  // namespace siphi::nn
