#include "siphi/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "siphi/errors.hpp"
#include "siphi/kernels.hpp"

namespace siphi::ad {

Var Graph::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, false, {}});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, true, {}});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Graph::grad_buffer(Var v) {
    auto& n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
}

Tensor Graph::grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
    return n.grad;
}

void Graph::backward(Var root, double seed) {
    if (nodes_.at(root.id).value.size() != 1)
        throw ShapeError("backward root must be a single element, got " + shape_string(value(root).shape()));
    for (auto& n : nodes_) n.grad = Tensor();
    grad_buffer(root)[0] = seed;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.requires_grad || !n.backprop || n.grad.empty()) continue;
        n.backprop(*this, n.grad);
    }
}

namespace {

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + shape_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void add_into(Tensor& dst, const Tensor& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var matmul(Graph& g, Var a, Var b) {
    const auto& A = g.value(a);
    const auto& B = g.value(b);
    require_rank2(A, "matmul");
    require_rank2(B, "matmul");
    const auto m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k)
        throw ShapeError("matmul: inner extents differ " + shape_string(A.shape()) + " * " + shape_string(B.shape()));
    Tensor out = Tensor::matrix(m, n);
    kernels::matmul(A.data(), B.data(), out.data(), m, k, n);
    return g.record(std::move(out), {a, b}, [a, b, m, k, n](Graph& g, const Tensor& go) {
        if (g.requires_grad(a)) {
            Tensor da = Tensor::matrix(m, k);
            kernels::matmul_nt(go.data(), g.value(b).data(), da.data(), m, k, n);
            add_into(g.grad_buffer(a), da);
        }
        if (g.requires_grad(b)) {
            Tensor db = Tensor::matrix(k, n);
            kernels::matmul_tn(g.value(a).data(), go.data(), db.data(), m, k, n);
            add_into(g.grad_buffer(b), db);
        }
    });
}

Var transpose(Graph& g, Var a) {
    const auto& A = g.value(a);
    require_rank2(A, "transpose");
    const auto r = A.rows(), c = A.cols();
    Tensor out = Tensor::matrix(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = A(i, j);
    return g.record(std::move(out), {a}, [a, r, c](Graph& g, const Tensor& go) {
        auto& da = g.grad_buffer(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) da(i, j) += go(j, i);
    });
}

Var add(Graph& g, Var a, Var b) {
    require_same(g.value(a), g.value(b), "add");
    Tensor out = g.value(a);
    add_into(out, g.value(b));
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
        if (g.requires_grad(a)) add_into(g.grad_buffer(a), go);
        if (g.requires_grad(b)) add_into(g.grad_buffer(b), go);
    });
}

Var sub(Graph& g, Var a, Var b) {
    require_same(g.value(a), g.value(b), "sub");
    Tensor out = g.value(a);
    auto o = out.data();
    auto bv = g.value(b).data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
        if (g.requires_grad(a)) add_into(g.grad_buffer(a), go);
        if (g.requires_grad(b)) {
            auto db = g.grad_buffer(b).data();
            for (std::size_t i = 0; i < db.size(); ++i) db[i] -= go[i];
        }
    });
}

Var mul(Graph& g, Var a, Var b) {
    require_same(g.value(a), g.value(b), "mul");
    Tensor out = g.value(a);
    auto o = out.data();
    auto bv = g.value(b).data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
    return g.record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& go) {
        if (g.requires_grad(a)) {
            auto da = g.grad_buffer(a).data();
            auto bv = g.value(b).data();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += go[i] * bv[i];
        }
        if (g.requires_grad(b)) {
            auto db = g.grad_buffer(b).data();
            auto av = g.value(a).data();
            for (std::size_t i = 0; i < db.size(); ++i) db[i] += go[i] * av[i];
        }
    });
}

Var scale(Graph& g, Var a, double s) {
    Tensor out = g.value(a);
    for (auto& v : out.data()) v *= s;
    return g.record(std::move(out), {a}, [a, s](Graph& g, const Tensor& go) {
        auto da = g.grad_buffer(a).data();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += s * go[i];
    });
}

Var add_bias(Graph& g, Var a, Var b) {
    const auto& A = g.value(a);
    const auto& B = g.value(b);
    require_rank2(A, "add_bias");
    require_rank2(B, "add_bias");
    const auto r = A.rows(), c = A.cols();
    if (B.rows() != 1 || B.cols() != c)
        throw ShapeError("add_bias: bias " + shape_string(B.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
    Tensor out = A;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) += B(0, j);
    return g.record(std::move(out), {a, b}, [a, b, r, c](Graph& g, const Tensor& go) {
        if (g.requires_grad(a)) add_into(g.grad_buffer(a), go);
        if (g.requires_grad(b)) {
            auto& db = g.grad_buffer(b);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) db(0, j) += go(i, j);
        }
    });
}

Var linear(Graph& g, Var x, Var w, Var b) {
    const auto& X = g.value(x);
    const auto& W = g.value(w);
    const auto& B = g.value(b);
    require_rank2(X, "linear");
    require_rank2(W, "linear");
    require_rank2(B, "linear");
    const auto m = X.rows(), k = X.cols(), n = W.cols();
    if (W.rows() != k)
        throw ShapeError("linear: inner extents differ " + shape_string(X.shape()) + " * " + shape_string(W.shape()));
    if (B.rows() != 1 || B.cols() != n)
        throw ShapeError("linear: bias " + shape_string(B.shape()) + " does not broadcast over [" +
                         std::to_string(m) + " x " + std::to_string(n) + "]");
    Tensor out = Tensor::matrix(m, n);
    kernels::matmul(X.data(), W.data(), out.data(), m, k, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) += B[j];
    return g.record(std::move(out), {x, w, b}, [x, w, b, m, k, n](Graph& g, const Tensor& go) {
        if (g.requires_grad(x)) {
            Tensor dx = Tensor::matrix(m, k);
            kernels::matmul_nt(go.data(), g.value(w).data(), dx.data(), m, k, n);
            add_into(g.grad_buffer(x), dx);
        }
        if (g.requires_grad(w)) {
            Tensor dw = Tensor::matrix(k, n);
            kernels::matmul_tn(g.value(x).data(), go.data(), dw.data(), m, k, n);
            add_into(g.grad_buffer(w), dw);
        }
        if (g.requires_grad(b)) {
            auto& db = g.grad_buffer(b);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) db[j] += go(i, j);
        }
    });
}

Var multi_head_attention(Graph& g, Var q, Var k, Var v, std::size_t heads) {
    const auto& Q = g.value(q);
    const auto& K = g.value(k);
    const auto& V = g.value(v);
    require_rank2(Q, "multi_head_attention");
    require_same(Q, K, "multi_head_attention");
    require_same(Q, V, "multi_head_attention");
    const auto t = Q.rows(), d = Q.cols();
    if (heads == 0 || d % heads != 0)
        throw ShapeError("multi_head_attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(heads) + " heads");
    const auto hd = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    // probs[h] is the [t x t] attention matrix of head h, kept for the backward pass.
    std::vector<Tensor> probs(heads, Tensor::matrix(t, t));
    Tensor out = Tensor::matrix(t, d);
    for (std::size_t h = 0; h < heads; ++h) {
        const auto c0 = h * hd;
        auto& P = probs[h];
        for (std::size_t i = 0; i < t; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < t; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < hd; ++c) s += Q(i, c0 + c) * K(j, c0 + c);
                P(i, j) = s * scale;
                mx = std::max(mx, P(i, j));
            }
            double z = 0.0;
            for (std::size_t j = 0; j < t; ++j) {
                P(i, j) = std::exp(P(i, j) - mx);
                z += P(i, j);
            }
            for (std::size_t j = 0; j < t; ++j) P(i, j) /= z;
            for (std::size_t j = 0; j < t; ++j) {
                const double p = P(i, j);
                for (std::size_t c = 0; c < hd; ++c) out(i, c0 + c) += p * V(j, c0 + c);
            }
        }
    }
    return g.record(std::move(out), {q, k, v},
                    [q, k, v, t, d, hd, heads, scale, probs = std::move(probs)](Graph& g, const Tensor& go) {
                        const auto& Q = g.value(q);
                        const auto& K = g.value(k);
                        const auto& V = g.value(v);
                        Tensor dq = Tensor::matrix(t, d), dk = Tensor::matrix(t, d), dv = Tensor::matrix(t, d);
                        std::vector<double> dp(t);
                        for (std::size_t h = 0; h < heads; ++h) {
                            const auto c0 = h * hd;
                            const auto& P = probs[h];
                            for (std::size_t i = 0; i < t; ++i) {
                                // dP(i, :) = dO(i) V^T, then through the row softmax
                                double dot = 0.0;
                                for (std::size_t j = 0; j < t; ++j) {
                                    double s = 0.0;
                                    for (std::size_t c = 0; c < hd; ++c) s += go(i, c0 + c) * V(j, c0 + c);
                                    dp[j] = s;
                                    dot += s * P(i, j);
                                }
                                for (std::size_t j = 0; j < t; ++j) {
                                    const double p = P(i, j);
                                    const double ds = p * (dp[j] - dot) * scale;
                                    for (std::size_t c = 0; c < hd; ++c) {
                                        dv(j, c0 + c) += p * go(i, c0 + c);
                                        dq(i, c0 + c) += ds * K(j, c0 + c);
                                        dk(j, c0 + c) += ds * Q(i, c0 + c);
                                    }
                                }
                            }
                        }
                        if (g.requires_grad(q)) add_into(g.grad_buffer(q), dq);
                        if (g.requires_grad(k)) add_into(g.grad_buffer(k), dk);
                        if (g.requires_grad(v)) add_into(g.grad_buffer(v), dv);
                    });
}

Var gelu(Graph& g, Var a) {
    // tanh form, written as x * sigmoid(2u) since 0.5 (1 + tanh u) = sigmoid(2u)
    constexpr double k0 = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double k1 = 0.044715;
    Tensor out = g.value(a);
    for (auto& v : out.data()) {
        const double x = v;
        v = x / (1.0 + std::exp(-2.0 * k0 * (x + k1 * x * x * x)));
    }
    return g.record(std::move(out), {a}, [a](Graph& g, const Tensor& go) {
        auto da = g.grad_buffer(a).data();
        auto xv = g.value(a).data();
        for (std::size_t i = 0; i < da.size(); ++i) {
            const double x = xv[i];
            const double s = 1.0 / (1.0 + std::exp(-2.0 * k0 * (x + k1 * x * x * x)));
            const double du = k0 * (1.0 + 3.0 * k1 * x * x);
            da[i] += go[i] * (s + 2.0 * x * s * (1.0 - s) * du);
        }
    });
}

Var softmax_rows(Graph& g, Var a) {
    const auto& A = g.value(a);
    require_rank2(A, "softmax_rows");
    const auto r = A.rows(), c = A.cols();
    Tensor out = A;
    for (std::size_t i = 0; i < r; ++i) {
        double mx = out(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, out(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out(i, j) = std::exp(out(i, j) - mx);
            z += out(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) out(i, j) /= z;
    }
    Tensor y = out;
    return g.record(std::move(out), {a}, [a, r, c, Y = std::move(y)](Graph& g, const Tensor& go) {
        auto& da = g.grad_buffer(a);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += go(i, j) * Y(i, j);
            for (std::size_t j = 0; j < c; ++j) da(i, j) += Y(i, j) * (go(i, j) - dot);
        }
    });
}

Var layer_norm_rows(Graph& g, Var x, Var gamma, Var beta, double eps) {
    const auto& X = g.value(x);
    require_rank2(X, "layer_norm_rows");
    const auto r = X.rows(), c = X.cols();
    const auto& G = g.value(gamma);
    const auto& B = g.value(beta);
    if (G.size() != c || B.size() != c)
        throw ShapeError("layer_norm_rows: gamma/beta length must equal " + std::to_string(c));
    Tensor xhat = Tensor::matrix(r, c);
    std::vector<double> inv_std(r);
    Tensor out = Tensor::matrix(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < c; ++j) mu += X(i, j);
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            xhat(i, j) = (X(i, j) - mu) * inv_std[i];
            out(i, j) = xhat(i, j) * G[j] + B[j];
        }
    }
    return g.record(std::move(out), {x, gamma, beta},
                    [x, gamma, beta, r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                        Graph& g, const Tensor& go) {
                        if (g.requires_grad(gamma)) {
                            auto& dg = g.grad_buffer(gamma);
                            for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < c; ++j) dg[j] += go(i, j) * xhat(i, j);
                        }
                        if (g.requires_grad(beta)) {
                            auto& db = g.grad_buffer(beta);
                            for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < c; ++j) db[j] += go(i, j);
                        }
                        if (g.requires_grad(x)) {
                            const auto& G = g.value(gamma);
                            auto& dx = g.grad_buffer(x);
                            const double n = static_cast<double>(c);
                            std::vector<double> dxhat(c);
                            for (std::size_t i = 0; i < r; ++i) {
                                double s1 = 0.0, s2 = 0.0;
                                for (std::size_t j = 0; j < c; ++j) {
                                    dxhat[j] = go(i, j) * G[j];
                                    s1 += dxhat[j];
                                    s2 += dxhat[j] * xhat(i, j);
                                }
                                for (std::size_t j = 0; j < c; ++j)
                                    dx(i, j) += inv_std[i] / n * (n * dxhat[j] - s1 - xhat(i, j) * s2);
                            }
                        }
                    });
}

Var mean_rows(Graph& g, Var a) {
    const auto& A = g.value(a);
    require_rank2(A, "mean_rows");
    const auto r = A.rows(), c = A.cols();
    Tensor out = Tensor::matrix(1, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(0, j) += A(i, j);
    for (std::size_t j = 0; j < c; ++j) out(0, j) /= static_cast<double>(r);
    return g.record(std::move(out), {a}, [a, r, c](Graph& g, const Tensor& go) {
        auto& da = g.grad_buffer(a);
        const double inv = 1.0 / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) da(i, j) += go(0, j) * inv;
    });
}

Var temporal_pool(Graph& g, Var a, std::size_t factor) {
    if (factor < 1) throw DomainError("temporal_pool: factor must be >= 1");
    const auto& A = g.value(a);
    require_rank2(A, "temporal_pool");
    const auto t = A.rows(), c = A.cols();
    const auto windows = (t + factor - 1) / factor;
    Tensor out = Tensor::matrix(windows, c);
    for (std::size_t w = 0; w < windows; ++w) {
        const auto begin = w * factor, end = std::min(t, begin + factor);
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = 0; j < c; ++j) out(w, j) += A(i, j);
        const double len = static_cast<double>(end - begin);
        for (std::size_t j = 0; j < c; ++j) out(w, j) /= len;
    }
    return g.record(std::move(out), {a}, [a, t, c, factor, windows](Graph& g, const Tensor& go) {
        auto& da = g.grad_buffer(a);
        for (std::size_t w = 0; w < windows; ++w) {
            const auto begin = w * factor, end = std::min(t, begin + factor);
            const double inv = 1.0 / static_cast<double>(end - begin);
            for (std::size_t i = begin; i < end; ++i)
                for (std::size_t j = 0; j < c; ++j) da(i, j) += go(w, j) * inv;
        }
    });
}

Var slice_cols(Graph& g, Var a, std::size_t begin, std::size_t count) {
    const auto& A = g.value(a);
    require_rank2(A, "slice_cols");
    const auto r = A.rows(), c = A.cols();
    if (count == 0 || begin + count > c) throw ShapeError("slice_cols: range out of bounds");
    Tensor out = Tensor::matrix(r, count);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = A(i, begin + j);
    return g.record(std::move(out), {a}, [a, r, begin, count](Graph& g, const Tensor& go) {
        auto& da = g.grad_buffer(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < count; ++j) da(i, begin + j) += go(i, j);
    });
}

Var concat_cols(Graph& g, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const auto r = g.value(parts[0]).rows();
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (auto p : parts) {
        if (g.value(p).rows() != r) throw ShapeError("concat_cols: row counts differ");
        offsets.push_back(total);
        total += g.value(p).cols();
    }
    Tensor out = Tensor::matrix(r, total);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& P = g.value(parts[k]);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < P.cols(); ++j) out(i, offsets[k] + j) = P(i, j);
    }
    std::vector<Var> ins(parts.begin(), parts.end());
    return g.record(std::move(out), parts, [ins, offsets, r](Graph& g, const Tensor& go) {
        for (std::size_t k = 0; k < ins.size(); ++k) {
            if (!g.requires_grad(ins[k])) continue;
            auto& dp = g.grad_buffer(ins[k]);
            const auto pc = dp.cols();
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < pc; ++j) dp(i, j) += go(i, offsets[k] + j);
        }
    });
}

Var stack_rows(Graph& g, std::span<const Var> rows) {
    if (rows.empty()) throw ShapeError("stack_rows: no rows");
    const auto c = g.value(rows[0]).size();
    Tensor out = Tensor::matrix(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& R = g.value(rows[i]);
        if (R.size() != c) throw ShapeError("stack_rows: row lengths differ");
        for (std::size_t j = 0; j < c; ++j) out(i, j) = R[j];
    }
    std::vector<Var> ins(rows.begin(), rows.end());
    return g.record(std::move(out), rows, [ins, c](Graph& g, const Tensor& go) {
        for (std::size_t i = 0; i < ins.size(); ++i) {
            if (!g.requires_grad(ins[i])) continue;
            auto& dr = g.grad_buffer(ins[i]);
            for (std::size_t j = 0; j < c; ++j) dr[j] += go(i, j);
        }
    });
}

Var weighted_sum(Graph& g, std::span<const Var> items, Var weights) {
    const auto& W = g.value(weights);
    if (items.empty() || W.size() != items.size())
        throw ShapeError("weighted_sum: " + std::to_string(items.size()) + " items vs " + std::to_string(W.size()) +
                         " weights");
    const auto d = g.value(items[0]).size();
    Tensor out = Tensor::matrix(1, d);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const auto& I = g.value(items[k]);
        if (I.size() != d) throw ShapeError("weighted_sum: item lengths differ");
        for (std::size_t j = 0; j < d; ++j) out[j] += W[k] * I[j];
    }
    std::vector<Var> ins(items.begin(), items.end());
    std::vector<Var> all = ins;
    all.push_back(weights);
    return g.record(std::move(out), all, [ins, weights, d](Graph& g, const Tensor& go) {
        const auto& W = g.value(weights);
        for (std::size_t k = 0; k < ins.size(); ++k) {
            if (!g.requires_grad(ins[k])) continue;
            auto& di = g.grad_buffer(ins[k]);
            for (std::size_t j = 0; j < d; ++j) di[j] += W[k] * go[j];
        }
        if (g.requires_grad(weights)) {
            auto& dw = g.grad_buffer(weights);
            for (std::size_t k = 0; k < ins.size(); ++k) {
                const auto& I = g.value(ins[k]);
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += go[j] * I[j];
                dw[k] += dot;
            }
        }
    });
}

Var huber_loss(Graph& g, Var pred, const Tensor& target, double delta) {
    const auto& P = g.value(pred);
    if (P.size() != target.size())
        throw ShapeError("huber_loss: " + std::to_string(P.size()) + " predictions vs " +
                         std::to_string(target.size()) + " targets");
    if (P.size() == 0) throw DomainError("huber_loss: empty input");
    if (!(delta > 0.0)) throw DomainError("huber_loss: delta must be positive");
    const auto n = P.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = P[i] - target[i];
        const double ae = std::abs(e);
        total += ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
    }
    return g.record(Tensor::scalar(total / static_cast<double>(n)), {pred},
                    [pred, target, delta, n](Graph& g, const Tensor& go) {
                        auto dp = g.grad_buffer(pred).data();
                        const auto& P = g.value(pred);
                        const double s = go[0] / static_cast<double>(n);
                        for (std::size_t i = 0; i < n; ++i) {
                            const double e = P[i] - target[i];
                            const double de = std::abs(e) <= delta ? e : (e > 0 ? delta : -delta);
                            dp[i] += s * de;
                        }
                    });
}

Var sum_all(Graph& g, Var a) {
    double total = 0.0;
    for (double v : g.value(a).data()) total += v;
    return g.record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& go) {
        for (auto& v : g.grad_buffer(a).data()) v += go[0];
    });
}

}  // namespace siphi::ad
