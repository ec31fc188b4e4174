#pragma once

// Tape-based reverse-mode differentiation over Tensor<T>, restricted to the
// layer vocabulary used by the discriminator and generator networks.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colorspace/error.hpp"
#include "colorspace/tensor.hpp"

namespace colorspace {

struct Var {
    std::size_t id = 0;
};

/// A named trainable array. `grad` is filled by Graph::backward for every
/// graph the parameter was bound into.
template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    void zero_grad() { grad = Tensor<T>(value.shape()); }
};

template <class T>
class Graph {
public:
    using Backward = std::function<void(Graph&, const Tensor<T>&)>;

    Var constant(Tensor<T> value) { return push(std::move(value), false, {}); }
    Var variable(Tensor<T> value) { return push(std::move(value), true, {}); }

    /// Leaf holding a copy of `p.value`. When trainable, backward() adds the
    /// leaf gradient into `p.grad`.
    Var parameter(Parameter<T>& p, bool trainable = true) {
        Var v = push(p.value, trainable, {});
        if (trainable) bindings_.emplace_back(v.id, &p);
        return v;
    }

    Var push(Tensor<T> value, bool requires_grad, Backward backward) {
#ifndef NDEBUG
        if (!value.all_finite())
            throw Error(ErrorKind::divergence, "non-finite value produced in forward pass");
#endif
        nodes_.push_back(Node{std::move(value), {}, requires_grad, requires_grad ? std::move(backward) : Backward{}});
        return Var{nodes_.size() - 1};
    }

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

    /// Gradient of the last backward pass; zeros when nothing reached `v`.
    Tensor<T> grad(Var v) const {
        const Node& n = nodes_.at(v.id);
        return n.grad.empty() && !n.value.empty() ? Tensor<T>(n.value.shape()) : n.grad;
    }

    Tensor<T>& grad_buffer(Var v) {
        Node& n = nodes_.at(v.id);
        if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
        return n.grad;
    }

    void accumulate(Var v, std::span<const T> g) {
        if (!requires_grad(v)) return;
        Tensor<T>& buf = grad_buffer(v);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
    }

    /// Backward from a single-element output, seeded with 1.
    void backward(Var out) {
        if (value(out).size() != 1)
            throw Error(ErrorKind::invalid_shape, "backward() without seed needs a scalar output");
        std::pair<Var, Tensor<T>> seed{out, Tensor<T>(value(out).shape(), T(1))};
        backward(std::span<const std::pair<Var, Tensor<T>>>(&seed, 1));
    }

    void backward(Var out, Tensor<T> seed) {
        std::pair<Var, Tensor<T>> s{out, std::move(seed)};
        backward(std::span<const std::pair<Var, Tensor<T>>>(&s, 1));
    }

    /// Reverse sweep over the tape. Allowed once per forward pass.
    void backward(std::span<const std::pair<Var, Tensor<T>>> seeds) {
        if (backward_done_) throw Error(ErrorKind::usage, "graph already differentiated");
        backward_done_ = true;
        for (const auto& [v, seed] : seeds) {
            if (seed.shape() != value(v).shape())
                throw Error(ErrorKind::invalid_shape, "seed shape " + shape_string(seed.shape()) +
                                                          " vs output " + shape_string(value(v).shape()));
            accumulate(v, seed.values());
        }
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.backward && !n.grad.empty()) n.backward(*this, n.grad);
        }
        for (auto& [id, p] : bindings_) {
            const Node& n = nodes_[id];
            if (p->grad.shape() != p->value.shape()) p->zero_grad();
            if (n.grad.empty()) continue;
            for (std::size_t k = 0; k < n.grad.size(); ++k) p->grad[k] += n.grad[k];
        }
    }

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        Backward backward;
    };

    std::vector<Node> nodes_;
    std::vector<std::pair<std::size_t, Parameter<T>*>> bindings_;
    bool backward_done_ = false;
};

namespace detail {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) throw Error(kind, what);
}

template <class T, class Forward, class Derivative>
Var elementwise(Graph<T>& g, Var x, Forward f, Derivative df) {
    const Tensor<T>& in = g.value(x);
    Tensor<T> out(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return g.push(std::move(out), g.requires_grad(x), [x, df](Graph<T>& gr, const Tensor<T>& gout) {
        const Tensor<T>& in = gr.value(x);
        Tensor<T>& gx = gr.grad_buffer(x);
        for (std::size_t i = 0; i < in.size(); ++i) gx[i] += gout[i] * df(in[i]);
    });
}

}  // namespace detail

template <class T>
Var add(Graph<T>& g, Var a, Var b) {
    const Tensor<T>& x = g.value(a);
    const Tensor<T>& y = g.value(b);
    detail::require(x.shape() == y.shape(), ErrorKind::invalid_shape,
                    "add " + shape_string(x.shape()) + " + " + shape_string(y.shape()));
    Tensor<T> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return g.push(std::move(out), g.requires_grad(a) || g.requires_grad(b),
                  [a, b](Graph<T>& gr, const Tensor<T>& gout) {
                      gr.accumulate(a, gout.values());
                      gr.accumulate(b, gout.values());
                  });
}

template <class T>
Var scale(Graph<T>& g, Var a, T factor) {
    return detail::elementwise(
        g, a, [factor](T v) { return v * factor; }, [factor](T) { return factor; });
}

template <class T>
Var sum(Graph<T>& g, Var a) {
    const Tensor<T>& x = g.value(a);
    T total = 0;
    for (T v : x.values()) total += v;
    return g.push(Tensor<T>(Shape{1}, total), g.requires_grad(a), [a](Graph<T>& gr, const Tensor<T>& gout) {
        Tensor<T>& gx = gr.grad_buffer(a);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gout[0];
    });
}

template <class T>
Var mean(Graph<T>& g, Var a) {
    return scale(g, sum(g, a), T(1) / static_cast<T>(g.value(a).size()));
}

template <class T>
Var reshape(Graph<T>& g, Var a, Shape shape) {
    Tensor<T> out = g.value(a).reshaped(std::move(shape));
    return g.push(std::move(out), g.requires_grad(a),
                  [a](Graph<T>& gr, const Tensor<T>& gout) { gr.accumulate(a, gout.values()); });
}

/// Flattens NCHW (or any rank ≥ 2) to N×F.
template <class T>
Var flatten(Graph<T>& g, Var a) {
    const Tensor<T>& x = g.value(a);
    detail::require(x.rank() >= 2, ErrorKind::invalid_shape, "flatten needs rank >= 2");
    return reshape(g, a, Shape{x.dim(0), x.size() / x.dim(0)});
}

template <class T>
Var leaky_relu(Graph<T>& g, Var x, T slope) {
    // Gradient at exactly 0 takes the positive side.
    return detail::elementwise(
        g, x, [slope](T v) { return v >= 0 ? v : slope * v; }, [slope](T v) { return v >= 0 ? T(1) : slope; });
}

template <class T>
Var relu(Graph<T>& g, Var x) {
    return detail::elementwise(
        g, x, [](T v) { return v > 0 ? v : T(0); }, [](T v) { return v > 0 ? T(1) : T(0); });
}

template <class T>
Var sigmoid(Graph<T>& g, Var x) {
    auto f = [](T v) { return T(1) / (T(1) + std::exp(-v)); };
    return detail::elementwise(g, x, f, [f](T v) {
        T s = f(v);
        return s * (T(1) - s);
    });
}

template <class T>
Var tanh(Graph<T>& g, Var x) {
    return detail::elementwise(
        g, x, [](T v) { return std::tanh(v); },
        [](T v) {
            T t = std::tanh(v);
            return T(1) - t * t;
        });
}

/// 2-D convolution, NCHW input, OIHW weight, zero padding.
template <class T>
Var conv2d(Graph<T>& g, Var input, Var weight, Var bias, std::size_t stride, std::size_t padding) {
    using detail::ConstMatMap;
    using detail::MatMap;
    const Tensor<T>& x = g.value(input);
    const Tensor<T>& w = g.value(weight);
    const Tensor<T>& b = g.value(bias);
    detail::require(x.rank() == 4 && w.rank() == 4, ErrorKind::invalid_shape,
                    "conv2d expects NCHW input and OIHW weight, got " + shape_string(x.shape()) + " and " +
                        shape_string(w.shape()));
    detail::require(x.dim(1) == w.dim(1), ErrorKind::invalid_shape,
                    "conv2d channel mismatch: input " + std::to_string(x.dim(1)) + ", weight " +
                        std::to_string(w.dim(1)));
    detail::require(b.size() == w.dim(0), ErrorKind::invalid_shape, "conv2d bias length mismatch");
    detail::require(stride >= 1, ErrorKind::invalid_shape, "conv2d stride must be >= 1");

    const std::size_t n_batch = x.dim(0), chans = x.dim(1), height = x.dim(2), width = x.dim(3);
    const std::size_t outs = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    detail::require(height + 2 * padding >= kh && width + 2 * padding >= kw, ErrorKind::invalid_shape,
                    "conv2d kernel larger than padded input");
    const std::size_t oh = (height + 2 * padding - kh) / stride + 1;
    const std::size_t ow = (width + 2 * padding - kw) / stride + 1;
    const std::size_t patch = chans * kh * kw, positions = oh * ow;

    // Column buffer per sample: patch rows × output positions.
    auto cols = std::make_shared<std::vector<T>>(n_batch * patch * positions, T(0));
    for (std::size_t n = 0; n < n_batch; ++n) {
        const T* src = x.data() + n * chans * height * width;
        T* dst = cols->data() + n * patch * positions;
        for (std::size_t c = 0; c < chans; ++c)
            for (std::size_t i = 0; i < kh; ++i)
                for (std::size_t j = 0; j < kw; ++j) {
                    T* row = dst + ((c * kh + i) * kw + j) * positions;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + i) -
                                                  static_cast<std::ptrdiff_t>(padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
                        const T* line = src + (c * height + static_cast<std::size_t>(iy)) * width;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + j) -
                                                      static_cast<std::ptrdiff_t>(padding);
                            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(width))
                                row[oy * ow + ox] = line[ix];
                        }
                    }
                }
    }

    Tensor<T> out(Shape{n_batch, outs, oh, ow});
    ConstMatMap<T> wm(w.data(), outs, patch);
    for (std::size_t n = 0; n < n_batch; ++n) {
        ConstMatMap<T> cm(cols->data() + n * patch * positions, patch, positions);
        MatMap<T> om(out.data() + n * outs * positions, outs, positions);
        om.noalias() = wm * cm;
        for (std::size_t o = 0; o < outs; ++o) om.row(o).array() += b[o];
    }

    const bool needs = g.requires_grad(input) || g.requires_grad(weight) || g.requires_grad(bias);
    return g.push(std::move(out), needs, [=](Graph<T>& gr, const Tensor<T>& gout) {
        const Tensor<T>& wv = gr.value(weight);
        ConstMatMap<T> wmat(wv.data(), outs, patch);
        if (gr.requires_grad(bias)) {
            Tensor<T>& gb = gr.grad_buffer(bias);
            for (std::size_t n = 0; n < n_batch; ++n)
                for (std::size_t o = 0; o < outs; ++o) {
                    const T* go = gout.data() + (n * outs + o) * positions;
                    T acc = 0;
                    for (std::size_t p = 0; p < positions; ++p) acc += go[p];
                    gb[o] += acc;
                }
        }
        if (gr.requires_grad(weight)) {
            MatMap<T> gw(gr.grad_buffer(weight).data(), outs, patch);
            for (std::size_t n = 0; n < n_batch; ++n) {
                ConstMatMap<T> go(gout.data() + n * outs * positions, outs, positions);
                ConstMatMap<T> cm(cols->data() + n * patch * positions, patch, positions);
                gw.noalias() += go * cm.transpose();
            }
        }
        if (gr.requires_grad(input)) {
            T* gx = gr.grad_buffer(input).data();
            detail::RowMatrix<T> dcols(patch, positions);
            for (std::size_t n = 0; n < n_batch; ++n) {
                ConstMatMap<T> go(gout.data() + n * outs * positions, outs, positions);
                dcols.noalias() = wmat.transpose() * go;
                T* dst = gx + n * chans * height * width;
                for (std::size_t c = 0; c < chans; ++c)
                    for (std::size_t i = 0; i < kh; ++i)
                        for (std::size_t j = 0; j < kw; ++j) {
                            const T* row = dcols.data() + ((c * kh + i) * kw + j) * positions;
                            for (std::size_t oy = 0; oy < oh; ++oy) {
                                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + i) -
                                                          static_cast<std::ptrdiff_t>(padding);
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(height)) continue;
                                T* line = dst + (c * height + static_cast<std::size_t>(iy)) * width;
                                for (std::size_t ox = 0; ox < ow; ++ox) {
                                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + j) -
                                                              static_cast<std::ptrdiff_t>(padding);
                                    if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(width))
                                        line[ix] += row[oy * ow + ox];
                                }
                            }
                        }
            }
        }
    });
}

/// Per-sample, per-channel normalization over the spatial axes, followed by
/// the affine map gamma·x̂ + beta.
template <class T>
Var instance_norm(Graph<T>& g, Var input, Var gamma, Var beta, T eps) {
    const Tensor<T>& x = g.value(input);
    detail::require(x.rank() == 4, ErrorKind::invalid_shape, "instance_norm expects NCHW");
    detail::require(g.value(gamma).size() == x.dim(1) && g.value(beta).size() == x.dim(1),
                    ErrorKind::invalid_shape, "instance_norm affine length must equal channel count");
    if (!(eps > 0)) throw Error(ErrorKind::division_hazard, "instance_norm eps must be > 0");

    const std::size_t slices = x.dim(0) * x.dim(1), chans = x.dim(1), m = x.dim(2) * x.dim(3);
    const Tensor<T>& ga = g.value(gamma);
    const Tensor<T>& be = g.value(beta);
    auto xhat = std::make_shared<std::vector<T>>(x.size());
    auto inv_std = std::make_shared<std::vector<T>>(slices);
    Tensor<T> out(x.shape());
    for (std::size_t s = 0; s < slices; ++s) {
        const T* src = x.data() + s * m;
        T mu = 0;
        for (std::size_t k = 0; k < m; ++k) mu += src[k];
        mu /= static_cast<T>(m);
        T var = 0;
        for (std::size_t k = 0; k < m; ++k) var += (src[k] - mu) * (src[k] - mu);
        var /= static_cast<T>(m);
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)[s] = is;
        const std::size_t c = s % chans;
        for (std::size_t k = 0; k < m; ++k) {
            const T h = (src[k] - mu) * is;
            (*xhat)[s * m + k] = h;
            out[s * m + k] = ga[c] * h + be[c];
        }
    }

    const bool needs = g.requires_grad(input) || g.requires_grad(gamma) || g.requires_grad(beta);
    return g.push(std::move(out), needs, [=](Graph<T>& gr, const Tensor<T>& gout) {
        const Tensor<T>& gam = gr.value(gamma);
        const T mf = static_cast<T>(m);
        for (std::size_t s = 0; s < slices; ++s) {
            const std::size_t c = s % chans;
            const T* go = gout.data() + s * m;
            const T* h = xhat->data() + s * m;
            T sum_g = 0, sum_gh = 0;
            for (std::size_t k = 0; k < m; ++k) {
                sum_g += go[k];
                sum_gh += go[k] * h[k];
            }
            if (gr.requires_grad(gamma)) gr.grad_buffer(gamma)[c] += sum_gh;
            if (gr.requires_grad(beta)) gr.grad_buffer(beta)[c] += sum_g;
            if (gr.requires_grad(input)) {
                T* gx = gr.grad_buffer(input).data() + s * m;
                const T scale = gam[c] * (*inv_std)[s] / mf;
                for (std::size_t k = 0; k < m; ++k) gx[k] += scale * (mf * go[k] - sum_g - h[k] * sum_gh);
            }
        }
    });
}

/// Affine map N×F → N×O with weight O×F and bias O.
template <class T>
Var dense(Graph<T>& g, Var input, Var weight, Var bias) {
    using detail::ConstMatMap;
    using detail::MatMap;
    const Tensor<T>& x = g.value(input);
    const Tensor<T>& w = g.value(weight);
    const Tensor<T>& b = g.value(bias);
    detail::require(x.rank() == 2 && w.rank() == 2, ErrorKind::invalid_shape, "dense expects N×F input, O×F weight");
    detail::require(x.dim(1) == w.dim(1), ErrorKind::invalid_shape,
                    "dense feature mismatch: input " + std::to_string(x.dim(1)) + ", weight " +
                        std::to_string(w.dim(1)));
    detail::require(b.size() == w.dim(0), ErrorKind::invalid_shape, "dense bias length mismatch");
    const std::size_t n = x.dim(0), f = x.dim(1), o = w.dim(0);
    Tensor<T> out(Shape{n, o});
    MatMap<T> om(out.data(), n, o);
    om.noalias() = ConstMatMap<T>(x.data(), n, f) * ConstMatMap<T>(w.data(), o, f).transpose();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < o; ++c) om(r, c) += b[c];

    const bool needs = g.requires_grad(input) || g.requires_grad(weight) || g.requires_grad(bias);
    return g.push(std::move(out), needs, [=](Graph<T>& gr, const Tensor<T>& gout) {
        ConstMatMap<T> go(gout.data(), n, o);
        if (gr.requires_grad(input)) {
            MatMap<T>(gr.grad_buffer(input).data(), n, f).noalias() +=
                go * ConstMatMap<T>(gr.value(weight).data(), o, f);
        }
        if (gr.requires_grad(weight)) {
            MatMap<T>(gr.grad_buffer(weight).data(), o, f).noalias() +=
                go.transpose() * ConstMatMap<T>(gr.value(input).data(), n, f);
        }
        if (gr.requires_grad(bias)) {
            Tensor<T>& gb = gr.grad_buffer(bias);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < o; ++c) gb[c] += go(r, c);
        }
    });
}

namespace detail {
template <class T>
void check_targets(const Tensor<T>& targets, std::size_t expected) {
    require(targets.size() == expected, ErrorKind::invalid_shape, "target count does not match predictions");
    for (T t : targets.values())
        if (t != T(0) && t != T(1)) throw Error(ErrorKind::invalid_target, "binary targets must be 0 or 1");
}
}  // namespace detail

inline constexpr double bce_clamp = 1e-7;

/// Mean binary cross-entropy of probabilities against {0,1} targets.
/// Predictions are clamped to [1e-7, 1-1e-7]; the derivative is evaluated at
/// the clamped value so saturated predictions still receive a gradient.
template <class T>
Var bce_loss(Graph<T>& g, Var predictions, const Tensor<T>& targets) {
    const Tensor<T>& p = g.value(predictions);
    detail::check_targets(targets, p.size());
    const T lo = T(bce_clamp), hi = T(1) - T(bce_clamp);
    const std::size_t n = p.size();
    T total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const T q = std::clamp(p[i], lo, hi);
        total -= targets[i] * std::log(q) + (T(1) - targets[i]) * std::log(T(1) - q);
    }
    return g.push(Tensor<T>(Shape{1}, total / static_cast<T>(n)), g.requires_grad(predictions),
                  [=](Graph<T>& gr, const Tensor<T>& gout) {
                      const Tensor<T>& pv = gr.value(predictions);
                      Tensor<T>& gp = gr.grad_buffer(predictions);
                      for (std::size_t i = 0; i < n; ++i) {
                          const T q = std::clamp(pv[i], lo, hi);
                          const T d = -targets[i] / q + (T(1) - targets[i]) / (T(1) - q);
                          gp[i] += gout[0] * d / static_cast<T>(n);
                      }
                  });
}

/// bce_loss(sigmoid(logits), targets) computed in a numerically stable form.
template <class T>
Var bce_with_logits(Graph<T>& g, Var logits, const Tensor<T>& targets) {
    const Tensor<T>& z = g.value(logits);
    detail::check_targets(targets, z.size());
    const std::size_t n = z.size();
    T total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        // max(z,0) - z·t + log(1 + exp(-|z|))
        total += std::max(z[i], T(0)) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
    }
    return g.push(Tensor<T>(Shape{1}, total / static_cast<T>(n)), g.requires_grad(logits),
                  [=](Graph<T>& gr, const Tensor<T>& gout) {
                      const Tensor<T>& zv = gr.value(logits);
                      Tensor<T>& gz = gr.grad_buffer(logits);
                      for (std::size_t i = 0; i < n; ++i) {
                          const T s = T(1) / (T(1) + std::exp(-zv[i]));
                          gz[i] += gout[0] * (s - targets[i]) / static_cast<T>(n);
                      }
                  });
}

}  // namespace colorspace
