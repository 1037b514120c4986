// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "faprompt/errors.hpp"

namespace faprompt {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ValidationError(std::string(op) + ": shape mismatch");
    }
}

void check_scalar(const Tensor& t, const char* op) {
    if (t.size() != 1) throw ValidationError(std::string(op) + ": expected a scalar node");
}

}  // namespace

Var Graph::make(Tensor value, bool requires_grad, std::function<void(Graph&, const Tensor&)> back) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

void Graph::accumulate(std::size_t id, const Tensor& g) {
    Node& node = nodes_[id];
    if (!node.requires_grad) return;
    if (node.grad.empty()) {
        node.grad = Tensor(node.value.shape());
    }
    auto dst = node.grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

const Tensor& Graph::grad(Var v) {
    Node& node = nodes_[v.id];
    if (node.grad.empty()) node.grad = Tensor(node.value.shape());
    return node.grad;
}

Var Graph::leaf(Tensor value, bool requires_grad) {
    if (value.empty()) throw ValidationError("leaf: empty tensor");
    return make(std::move(value), requires_grad, nullptr);
}

template <typename Fwd, typename Bwd>
Var Graph::elementwise(Var a, Fwd&& fwd, Bwd&& dfdx) {
    const Tensor& x = nodes_[a.id].value;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
    const bool rg = nodes_[a.id].requires_grad;
    if (!rg) return make(std::move(out), false, nullptr);
    return make(std::move(out), true, [a, dfdx](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor gx(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] = gout[i] * dfdx(x[i]);
        g.accumulate(a.id, gx);
    });
}

Var Graph::add(Var a, Var b) {
    const Tensor& xa = nodes_[a.id].value;
    const Tensor& xb = nodes_[b.id].value;
    check_same_shape(xa, xb, "add");
    Tensor out(xa.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xa[i] + xb[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, b](Graph& g, const Tensor& gout) {
        g.accumulate(a.id, gout);
        g.accumulate(b.id, gout);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::sub(Var a, Var b) {
    const Tensor& xa = nodes_[a.id].value;
    const Tensor& xb = nodes_[b.id].value;
    check_same_shape(xa, xb, "sub");
    Tensor out(xa.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xa[i] - xb[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, b](Graph& g, const Tensor& gout) {
        g.accumulate(a.id, gout);
        Tensor neg(gout.shape());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -gout[i];
        g.accumulate(b.id, neg);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::mul(Var a, Var b) {
    const Tensor& xa = nodes_[a.id].value;
    const Tensor& xb = nodes_[b.id].value;
    check_same_shape(xa, xb, "mul");
    Tensor out(xa.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xa[i] * xb[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, b](Graph& g, const Tensor& gout) {
        const Tensor& xa = g.nodes_[a.id].value;
        const Tensor& xb = g.nodes_[b.id].value;
        Tensor ga(xa.shape()), gb(xb.shape());
        for (std::size_t i = 0; i < gout.size(); ++i) {
            ga[i] = gout[i] * xb[i];
            gb[i] = gout[i] * xa[i];
        }
        g.accumulate(a.id, ga);
        g.accumulate(b.id, gb);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::div(Var a, Var b) {
    const Tensor& xa = nodes_[a.id].value;
    const Tensor& xb = nodes_[b.id].value;
    check_same_shape(xa, xb, "div");
    Tensor out(xa.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xa[i] / xb[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, b](Graph& g, const Tensor& gout) {
        const Tensor& xa = g.nodes_[a.id].value;
        const Tensor& xb = g.nodes_[b.id].value;
        Tensor ga(xa.shape()), gb(xb.shape());
        for (std::size_t i = 0; i < gout.size(); ++i) {
            ga[i] = gout[i] / xb[i];
            gb[i] = -gout[i] * xa[i] / (xb[i] * xb[i]);
        }
        g.accumulate(a.id, ga);
        g.accumulate(b.id, gb);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::affine(Var a, double scale, double shift) {
    const Tensor& x = nodes_[a.id].value;
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * x[i] + shift;
    const bool rg = nodes_[a.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, scale](Graph& g, const Tensor& gout) {
        Tensor ga(gout.shape());
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = scale * gout[i];
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::mul_const(Var a, Tensor weights) {
    const Tensor& x = nodes_[a.id].value;
    check_same_shape(x, weights, "mul_const");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * weights[i];
    const bool rg = nodes_[a.id].requires_grad;
    return make(std::move(out), rg,
                rg ? [a, w = std::move(weights)](Graph& g, const Tensor& gout) {
        Tensor ga(gout.shape());
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = gout[i] * w[i];
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::mul_scalar(Var a, Var s) {
    const Tensor& x = nodes_[a.id].value;
    check_scalar(nodes_[s.id].value, "mul_scalar");
    const double sv = nodes_[s.id].value[0];
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * sv;
    const bool rg = nodes_[a.id].requires_grad || nodes_[s.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, s](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        const double sv = g.nodes_[s.id].value[0];
        Tensor ga(x.shape());
        double gs = 0.0;
        for (std::size_t i = 0; i < gout.size(); ++i) {
            ga[i] = gout[i] * sv;
            gs += gout[i] * x[i];
        }
        g.accumulate(a.id, ga);
        g.accumulate(s.id, Tensor::scalar(gs));
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::tanh_op(Var a) {
    return elementwise(
        a, [](double x) { return std::tanh(x); },
        [](double x) {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        });
}

Var Graph::relu(Var a) {
    return elementwise(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Graph::exp_op(Var a) {
    return elementwise(
        a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var Graph::log_op(Var a) {
    return elementwise(
        a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var Graph::abs_op(Var a) {
    return elementwise(
        a, [](double x) { return std::abs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var Graph::sigmoid(Var a) {
    return elementwise(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double x) {
            double s;
            if (x >= 0.0) {
                s = 1.0 / (1.0 + std::exp(-x));
            } else {
                const double e = std::exp(x);
                s = e / (1.0 + e);
            }
            return s * (1.0 - s);
        });
}

Var Graph::sqrt_op(Var a) {
    return elementwise(
        a, [](double x) { return std::sqrt(x); },
        [](double x) { return 0.5 / std::sqrt(x); });
}

Var Graph::pow_const(Var a, double exponent) {
    return elementwise(
        a, [exponent](double x) { return std::pow(x, exponent); },
        [exponent](double x) { return exponent * std::pow(x, exponent - 1.0); });
}

Var Graph::clamp(Var a, double lo, double hi) {
    return elementwise(
        a, [lo, hi](double x) { return std::min(hi, std::max(lo, x)); },
        [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var Graph::matvec(Var m, Var v) {
    const Tensor& xm = nodes_[m.id].value;
    const Tensor& xv = nodes_[v.id].value;
    if (xm.rank() != 2) throw ValidationError("matvec: matrix must be rank 2");
    if (xv.rank() != 1 || xv.size() != xm.dim(1)) {
        throw ValidationError("matvec: vector length must equal matrix columns");
    }
    const std::size_t rows = xm.dim(0);
    const std::size_t cols = xm.dim(1);
    Tensor out({rows});
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += xm(i, j) * xv[j];
        out[i] = acc;
    }
    const bool rg = nodes_[m.id].requires_grad || nodes_[v.id].requires_grad;
    return make(std::move(out), rg, rg ? [m, v, rows, cols](Graph& g, const Tensor& gout) {
        const Tensor& xm = g.nodes_[m.id].value;
        const Tensor& xv = g.nodes_[v.id].value;
        if (g.nodes_[m.id].requires_grad) {
            Tensor gm({rows, cols});
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) gm(i, j) = gout[i] * xv[j];
            }
            g.accumulate(m.id, gm);
        }
        if (g.nodes_[v.id].requires_grad) {
            Tensor gv({cols});
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) gv[j] += gout[i] * xm(i, j);
            }
            g.accumulate(v.id, gv);
        }
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::dot(Var a, Var b) {
    const Tensor& xa = nodes_[a.id].value;
    const Tensor& xb = nodes_[b.id].value;
    check_same_shape(xa, xb, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < xa.size(); ++i) acc += xa[i] * xb[i];
    const bool rg = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return make(Tensor::scalar(acc), rg, rg ? [a, b](Graph& g, const Tensor& gout) {
        const Tensor& xa = g.nodes_[a.id].value;
        const Tensor& xb = g.nodes_[b.id].value;
        Tensor ga(xa.shape()), gb(xb.shape());
        for (std::size_t i = 0; i < xa.size(); ++i) {
            ga[i] = gout[0] * xb[i];
            gb[i] = gout[0] * xa[i];
        }
        g.accumulate(a.id, ga);
        g.accumulate(b.id, gb);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::sum(Var a) {
    const Tensor& x = nodes_[a.id].value;
    const bool rg = nodes_[a.id].requires_grad;
    return make(Tensor::scalar(x.sum()), rg, rg ? [a](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor ga(x.shape(), gout[0]);
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::mean(Var a) {
    const Tensor& x = nodes_[a.id].value;
    const double n = static_cast<double>(x.size());
    const bool rg = nodes_[a.id].requires_grad;
    return make(Tensor::scalar(x.sum() / n), rg, rg ? [a, n](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor ga(x.shape(), gout[0] / n);
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::max(Var a) {
    const Tensor& x = nodes_[a.id].value;
    std::size_t arg = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] > x[arg]) arg = i;
    }
    const bool rg = nodes_[a.id].requires_grad;
    return make(Tensor::scalar(x[arg]), rg, rg ? [a, arg](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor ga(x.shape());
        ga[arg] = gout[0];
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::subvector(Var a, std::size_t offset, std::size_t len) {
    const Tensor& x = nodes_[a.id].value;
    if (offset + len > x.size()) throw ValidationError("subvector: slice out of range");
    Tensor out({len});
    for (std::size_t i = 0; i < len; ++i) out[i] = x[offset + i];
    const bool rg = nodes_[a.id].requires_grad;
    return make(std::move(out), rg, rg ? [a, offset, len](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor ga(x.shape());
        for (std::size_t i = 0; i < len; ++i) ga[offset + i] = gout[i];
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::concat(std::span<const Var> parts) {
    if (parts.empty()) throw ValidationError("concat: no inputs");
    std::size_t total = 0;
    bool rg = false;
    for (Var p : parts) {
        total += nodes_[p.id].value.size();
        rg = rg || nodes_[p.id].requires_grad;
    }
    Tensor out({total});
    std::size_t flat = 0;
    for (Var p : parts) {
        for (double v : nodes_[p.id].value.data()) out[flat++] = v;
    }
    std::vector<Var> owned(parts.begin(), parts.end());
    return make(std::move(out), rg,
                rg ? [owned = std::move(owned)](Graph& g, const Tensor& gout) {
        std::size_t flat = 0;
        for (Var p : owned) {
            const Tensor& x = g.nodes_[p.id].value;
            Tensor gp(x.shape());
            for (std::size_t i = 0; i < x.size(); ++i) gp[i] = gout[flat + i];
            flat += x.size();
            g.accumulate(p.id, gp);
        }
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::mean_vectors(std::span<const Var> vectors) {
    if (vectors.empty()) throw ValidationError("mean_vectors: no inputs");
    const Tensor& first = nodes_[vectors.front().id].value;
    bool rg = false;
    for (Var v : vectors) {
        check_same_shape(first, nodes_[v.id].value, "mean_vectors");
        rg = rg || nodes_[v.id].requires_grad;
    }
    const std::size_t k = vectors.size();
    const std::size_t n = first.size();
    Tensor out(first.shape());
    std::vector<double> addends(k);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < k; ++i) addends[i] = nodes_[vectors[i].id].value[c];
        std::sort(addends.begin(), addends.end());
        double acc = 0.0;
        for (double v : addends) acc += v;
        out[c] = acc / static_cast<double>(k);
    }
    std::vector<Var> owned(vectors.begin(), vectors.end());
    return make(std::move(out), rg,
                rg ? [owned = std::move(owned), k](Graph& g, const Tensor& gout) {
        Tensor gp(gout.shape());
        for (std::size_t i = 0; i < gout.size(); ++i) gp[i] = gout[i] / static_cast<double>(k);
        for (Var v : owned) g.accumulate(v.id, gp);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& x = nodes_[a.id].value;
    Tensor out(shape);
    if (out.size() != x.size()) throw ValidationError("reshape: element count mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    const bool rg = nodes_[a.id].requires_grad;
    return make(std::move(out), rg, rg ? [a](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[a.id].value;
        Tensor ga(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) ga[i] = gout[i];
        g.accumulate(a.id, ga);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::cosine_rows(Tensor rows, Var e) {
    const Tensor& xe = nodes_[e.id].value;
    if (rows.rank() != 2) throw ValidationError("cosine_rows: rows must be rank 2");
    if (xe.rank() != 1 || xe.size() != rows.dim(1)) {
        throw ValidationError("cosine_rows: vector dimension mismatch");
    }
    const double e_norm = xe.norm();
    if (e_norm == 0.0) throw ValidationError("cosine_rows: zero-norm embedding");
    const std::size_t l = rows.dim(0);
    const std::size_t d = rows.dim(1);
    Tensor out({l});
    std::vector<double> row_norms(l);
    for (std::size_t i = 0; i < l; ++i) {
        double nn = 0.0, dd = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            nn += rows(i, j) * rows(i, j);
            dd += rows(i, j) * xe[j];
        }
        row_norms[i] = std::sqrt(nn);
        if (row_norms[i] == 0.0) throw ValidationError("cosine_rows: zero-norm row");
        out[i] = dd / (row_norms[i] * e_norm);
    }
    const bool rg = nodes_[e.id].requires_grad;
    return make(std::move(out), rg,
                rg ? [e, rows = std::move(rows), row_norms = std::move(row_norms), l,
                      d](Graph& g, const Tensor& gout) {
        const Tensor& xe = g.nodes_[e.id].value;
        const double e_norm = xe.norm();
        const double e_norm_sq = e_norm * e_norm;
        Tensor ge(xe.shape());
        for (std::size_t i = 0; i < l; ++i) {
            // d cos_i / d e = r_i / (|r_i||e|) - cos_i * e / |e|^2
            double dd = 0.0;
            for (std::size_t j = 0; j < d; ++j) dd += rows(i, j) * xe[j];
            const double cos_i = dd / (row_norms[i] * e_norm);
            const double inv = 1.0 / (row_norms[i] * e_norm);
            for (std::size_t j = 0; j < d; ++j) {
                ge[j] += gout[i] * (rows(i, j) * inv - cos_i * xe[j] / e_norm_sq);
            }
        }
        g.accumulate(e.id, ge);
    } : std::function<void(Graph&, const Tensor&)>());
}

Var Graph::bilinear_resize(Var grid, std::size_t grid_h, std::size_t grid_w, std::size_t out_h,
                           std::size_t out_w) {
    const Tensor& x = nodes_[grid.id].value;
    if (x.size() != grid_h * grid_w) {
        throw ValidationError("bilinear_resize: grid size does not match grid shape");
    }
    if (out_h == 0 || out_w == 0) throw ValidationError("bilinear_resize: empty target");

    // Half-pixel-center sampling; source coordinates clamped to the grid so
    // constants are preserved and outputs stay within [min, max] of the input.
    struct Tap {
        std::size_t src;
        double w;
    };
    auto axis_taps = [](std::size_t src_n, std::size_t dst_n, std::size_t i) {
        double s = (static_cast<double>(i) + 0.5) * static_cast<double>(src_n) /
                       static_cast<double>(dst_n) -
                   0.5;
        s = std::min(std::max(s, 0.0), static_cast<double>(src_n - 1));
        const std::size_t lo = static_cast<std::size_t>(s);
        const std::size_t hi = std::min(lo + 1, src_n - 1);
        const double f = s - static_cast<double>(lo);
        return std::array<std::pair<std::size_t, double>, 2>{{{lo, 1.0 - f}, {hi, f}}};
    };

    std::vector<std::array<Tap, 4>> taps(out_h * out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const auto ty = axis_taps(grid_h, out_h, y);
        for (std::size_t xdst = 0; xdst < out_w; ++xdst) {
            const auto tx = axis_taps(grid_w, out_w, xdst);
            auto& t = taps[y * out_w + xdst];
            std::size_t slot = 0;
            for (const auto& [ry, wy] : ty) {
                for (const auto& [rx, wx] : tx) {
                    t[slot++] = Tap{ry * grid_w + rx, wy * wx};
                }
            }
        }
    }

    Tensor out({out_h, out_w});
    for (std::size_t p = 0; p < taps.size(); ++p) {
        double acc = 0.0;
        for (const Tap& t : taps[p]) acc += t.w * x[t.src];
        out[p] = acc;
    }
    const bool rg = nodes_[grid.id].requires_grad;
    return make(std::move(out), rg,
                rg ? [grid, taps = std::move(taps)](Graph& g, const Tensor& gout) {
        const Tensor& x = g.nodes_[grid.id].value;
        Tensor gg(x.shape());
        for (std::size_t p = 0; p < taps.size(); ++p) {
            for (const Tap& t : taps[p]) gg[t.src] += t.w * gout[p];
        }
        g.accumulate(grid.id, gg);
    } : std::function<void(Graph&, const Tensor&)>());
}

void Graph::backward(Var root) {
    Node& root_node = nodes_[root.id];
    if (root_node.value.size() != 1) {
        throw ValidationError("backward: root must be a scalar");
    }
    if (!root_node.requires_grad) return;
    if (root_node.grad.empty()) root_node.grad = Tensor(root_node.value.shape());
    root_node.grad[0] += 1.0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.requires_grad || node.grad.empty() || !node.back) continue;
        node.back(*this, node.grad);
    }
}

}  // namespace faprompt
