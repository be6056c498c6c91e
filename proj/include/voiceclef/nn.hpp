#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "voiceclef/common.hpp"
#include "voiceclef/kernels.hpp"

// Minimal dense/convolutional network engine: forward operators, exact
// reverse-mode gradients, loss and optimizers. Operators are templated on the
// scalar type; the classifier trains at float (reductions still accumulate in
// double via the kernels), while gradient-verification code instantiates the
// same operators at double.
namespace voiceclef::nn {

struct ShapeMismatch : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct NoForwardPass : Error {
    using Error::Error;
};

template <typename S>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<S> data;

    TensorT() = default;
    explicit TensorT(std::vector<std::size_t> dims) : shape(std::move(dims)) {
        data.assign(numel_of(shape), S(0));
    }

    static std::size_t numel_of(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }

    std::size_t numel() const { return data.size(); }
    S* ptr() { return data.data(); }
    const S* ptr() const { return data.data(); }
    void fill(S v) { std::fill(data.begin(), data.end(), v); }

    // flat row-major indexing helpers for the ranks used here
    S& at(std::size_t i) { return data[i]; }
    S at(std::size_t i) const { return data[i]; }
    S& at3(std::size_t c, std::size_t i, std::size_t j) {
        return data[(c * shape[1] + i) * shape[2] + j];
    }
    S at3(std::size_t c, std::size_t i, std::size_t j) const {
        return data[(c * shape[1] + i) * shape[2] + j];
    }
};

using Tensor = TensorT<float>;

/// xoshiro256** seeded via splitmix64. Self-contained so that identical seeds
/// give identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two values per draw, one cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = ~std::uint64_t(0) - ~std::uint64_t(0) % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i)
            std::swap(items[i - 1], items[below(i)]);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// ---------------------------------------------------------------------------
// forward operators

/// Valid (no padding, stride 1) cross-correlation of [C_in x H x W] with
/// [C_out x C_in x 3 x 3] kernels plus per-channel scalar bias.
template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& input, const TensorT<S>& kernels,
                          const TensorT<S>& bias) {
    if (input.shape.size() != 3 || kernels.shape.size() != 4 || kernels.shape[2] != 3 ||
        kernels.shape[3] != 3 || kernels.shape[1] != input.shape[0] ||
        bias.numel() != kernels.shape[0])
        throw ShapeMismatch("conv2d: incompatible shapes");
    const std::size_t c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (h < 3 || w < 3) throw ShapeMismatch("conv2d: spatial dims must be >= 3");
    const std::size_t c_out = kernels.shape[0];
    const std::size_t oh = h - 2, ow = w - 2;

    TensorT<S> out({c_out, oh, ow});
    for (std::size_t co = 0; co < c_out; ++co) {
        S* plane = out.ptr() + co * oh * ow;
        std::fill(plane, plane + oh * ow, bias.at(co));
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const S* in_plane = input.ptr() + ci * h * w;
            const S* k = kernels.ptr() + (co * c_in + ci) * 9;
            for (std::size_t di = 0; di < 3; ++di)
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    const S kv = k[di * 3 + dj];
                    for (std::size_t i = 0; i < oh; ++i)
                        kernels::axpy(plane + i * ow, kv, in_plane + (i + di) * w + dj, ow);
                }
        }
    }
    return out;
}

template <typename S>
struct Conv2dGrads {
    TensorT<S> kernels;
    TensorT<S> bias;
    TensorT<S> input;
};

template <typename S>
Conv2dGrads<S> conv2d_backward(const TensorT<S>& input, const TensorT<S>& kernels,
                               const TensorT<S>& d_out) {
    const std::size_t c_in = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t c_out = kernels.shape[0];
    const std::size_t oh = h - 2, ow = w - 2;
    if (d_out.shape.size() != 3 || d_out.shape[0] != c_out || d_out.shape[1] != oh ||
        d_out.shape[2] != ow)
        throw ShapeMismatch("conv2d_backward: gradient shape mismatch");

    Conv2dGrads<S> g{TensorT<S>(kernels.shape), TensorT<S>({c_out}), TensorT<S>(input.shape)};
    for (std::size_t co = 0; co < c_out; ++co) {
        const S* d_plane = d_out.ptr() + co * oh * ow;
        double b_acc = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) b_acc += static_cast<double>(d_plane[i]);
        g.bias.at(co) = static_cast<S>(b_acc);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const S* in_plane = input.ptr() + ci * h * w;
            S* din_plane = g.input.ptr() + ci * h * w;
            const S* k = kernels.ptr() + (co * c_in + ci) * 9;
            S* dk = g.kernels.ptr() + (co * c_in + ci) * 9;
            for (std::size_t di = 0; di < 3; ++di)
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < oh; ++i) {
                        acc += kernels::dot(in_plane + (i + di) * w + dj, d_plane + i * ow, ow);
                        kernels::axpy(din_plane + (i + di) * w + dj, k[di * 3 + dj],
                                      d_plane + i * ow, ow);
                    }
                    dk[di * 3 + dj] = static_cast<S>(acc);
                }
        }
    }
    return g;
}

template <typename S>
TensorT<S> tanh_forward(const TensorT<S>& x) {
    TensorT<S> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.at(i) = static_cast<S>(std::tanh(static_cast<double>(x.at(i))));
    return y;
}

/// dx from the forward output y: dtanh = 1 - y^2.
template <typename S>
TensorT<S> tanh_backward(const TensorT<S>& y, const TensorT<S>& dy) {
    TensorT<S> dx(y.shape);
    for (std::size_t i = 0; i < y.numel(); ++i)
        dx.at(i) = (S(1) - y.at(i) * y.at(i)) * dy.at(i);
    return dx;
}

template <typename S>
TensorT<S> relu_forward(const TensorT<S>& x) {
    TensorT<S> y(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) y.at(i) = x.at(i) > S(0) ? x.at(i) : S(0);
    return y;
}

template <typename S>
TensorT<S> relu_backward(const TensorT<S>& x, const TensorT<S>& dy) {
    TensorT<S> dx(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) dx.at(i) = x.at(i) > S(0) ? dy.at(i) : S(0);
    return dx;
}

template <typename S>
struct DropoutResult {
    TensorT<S> output;
    std::vector<S> mask;  // 0 for dropped units, 1/(1-p) for kept ones
};

/// Inverted dropout: kept units scale by 1/(1-p) at train time so inference
/// is an identity.
template <typename S>
DropoutResult<S> dropout_forward(const TensorT<S>& x, double p, Rng& rng, bool training) {
    if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: p must be in [0, 1)");
    DropoutResult<S> r;
    r.output = x;
    r.mask.assign(x.numel(), S(1));
    if (!training || p == 0.0) return r;
    const S keep_scale = static_cast<S>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < x.numel(); ++i) {
        if (rng.uniform() < p) {
            r.mask[i] = S(0);
            r.output.at(i) = S(0);
        } else {
            r.mask[i] = keep_scale;
            r.output.at(i) *= keep_scale;
        }
    }
    return r;
}

template <typename S>
TensorT<S> dropout_backward(const std::vector<S>& mask, const TensorT<S>& dy) {
    if (mask.size() != dy.numel()) throw ShapeMismatch("dropout_backward: mask size mismatch");
    TensorT<S> dx(dy.shape);
    for (std::size_t i = 0; i < dy.numel(); ++i) dx.at(i) = mask[i] * dy.at(i);
    return dx;
}

/// y = xW + b with x: [n], W: [n x m] row-major, b: [m].
template <typename S>
TensorT<S> dense_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    if (w.shape.size() != 2 || x.numel() != w.shape[0] || b.numel() != w.shape[1])
        throw ShapeMismatch("dense: incompatible shapes");
    const std::size_t n = w.shape[0], m = w.shape[1];
    TensorT<S> y({m});
    std::copy(b.ptr(), b.ptr() + m, y.ptr());
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(y.ptr(), x.at(i), w.ptr() + i * m, m);
    return y;
}

template <typename S>
struct DenseGrads {
    TensorT<S> w;
    TensorT<S> b;
    TensorT<S> x;
};

template <typename S>
DenseGrads<S> dense_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& dy) {
    const std::size_t n = w.shape[0], m = w.shape[1];
    if (x.numel() != n || dy.numel() != m) throw ShapeMismatch("dense_backward: shape mismatch");
    DenseGrads<S> g{TensorT<S>(w.shape), TensorT<S>({m}), TensorT<S>(x.shape)};
    std::copy(dy.ptr(), dy.ptr() + m, g.b.ptr());
    for (std::size_t i = 0; i < n; ++i) {
        kernels::axpy(g.w.ptr() + i * m, x.at(i), dy.ptr(), m);
        g.x.at(i) = static_cast<S>(kernels::dot(w.ptr() + i * m, dy.ptr(), m));
    }
    return g;
}

/// Max-subtracted softmax; sums accumulate in double.
template <typename S>
std::vector<S> softmax(std::span<const S> logits) {
    std::vector<S> probs(logits.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (S v : logits) max_logit = std::max(max_logit, static_cast<double>(v));
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double e = std::exp(static_cast<double>(logits[i]) - max_logit);
        probs[i] = static_cast<S>(e);
        sum += e;
    }
    for (auto& p : probs) p = static_cast<S>(static_cast<double>(p) / sum);
    return probs;
}

template <typename S>
double cross_entropy(std::span<const S> probs, std::size_t true_class) {
    if (true_class >= probs.size()) throw IndexOutOfRange("cross_entropy: class index out of range");
    return -std::log(std::max(static_cast<double>(probs[true_class]), 1e-12));
}

/// d(loss)/d(logits) for softmax + cross-entropy: probs - onehot.
template <typename S>
TensorT<S> softmax_ce_backward(std::span<const S> probs, std::size_t true_class) {
    if (true_class >= probs.size()) throw IndexOutOfRange("softmax_ce_backward: class index out of range");
    TensorT<S> d({probs.size()});
    for (std::size_t i = 0; i < probs.size(); ++i)
        d.at(i) = probs[i] - (i == true_class ? S(1) : S(0));
    return d;
}

// ---------------------------------------------------------------------------
// optimizers

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Owns per-parameter Adam moments; SGD keeps no state. Deterministic given
/// the gradient sequence.
template <typename S>
class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

    const OptimizerConfig& config() const { return cfg_; }

    void step(std::span<TensorT<S>* const> params, std::span<const TensorT<S>* const> grads) {
        if (params.size() != grads.size()) throw ShapeMismatch("optimizer: param/grad count mismatch");
        if (cfg_.kind == OptimizerConfig::Kind::sgd) {
            for (std::size_t t = 0; t < params.size(); ++t) {
                TensorT<S>& p = *params[t];
                const TensorT<S>& g = *grads[t];
                if (p.numel() != g.numel()) throw ShapeMismatch("optimizer: tensor size mismatch");
                for (std::size_t i = 0; i < p.numel(); ++i)
                    p.at(i) = static_cast<S>(p.at(i) - cfg_.lr * static_cast<double>(g.at(i)));
            }
            return;
        }
        if (moments_.empty()) {
            moments_.resize(params.size());
            for (std::size_t t = 0; t < params.size(); ++t) {
                moments_[t].m.assign(params[t]->numel(), 0.0);
                moments_[t].v.assign(params[t]->numel(), 0.0);
            }
        }
        if (moments_.size() != params.size()) throw ShapeMismatch("optimizer: state/param count mismatch");
        ++step_count_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, step_count_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, step_count_);
        for (std::size_t t = 0; t < params.size(); ++t) {
            TensorT<S>& p = *params[t];
            const TensorT<S>& g = *grads[t];
            if (p.numel() != g.numel() || p.numel() != moments_[t].m.size())
                throw ShapeMismatch("optimizer: tensor size mismatch");
            auto& m = moments_[t].m;
            auto& v = moments_[t].v;
            for (std::size_t i = 0; i < p.numel(); ++i) {
                const double gi = static_cast<double>(g.at(i));
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                p.at(i) = static_cast<S>(p.at(i) - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
            }
        }
    }

    void reset() {
        moments_.clear();
        step_count_ = 0;
    }

  private:
    struct Moments {
        std::vector<double> m, v;
    };
    OptimizerConfig cfg_;
    std::vector<Moments> moments_;
    long step_count_ = 0;
};

/// Glorot-uniform fill: limit = sqrt(6 / (fan_in + fan_out)).
template <typename S>
void glorot_uniform(TensorT<S>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.numel(); ++i)
        t.at(i) = static_cast<S>(rng.uniform(-limit, limit));
}

}  // namespace voiceclef::nn
