#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "taac/errors.hpp"
#include "taac/kernels.hpp"
#include "taac/rng.hpp"
#include "taac/tensor.hpp"

// Layer zoo shared by the autoencoder and the classifier. Templated on the
// scalar type: training runs in float, gradient checking in double.

namespace taac::nn {

template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    Param(std::string n, std::vector<std::size_t> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}

    void zero_grad() { grad.fill(T(0)); }
};

template <class T>
using ParamRefs = std::vector<Param<T>*>;

// Per-pass context for stochastic layers. Dropout draws its mask from a
// counter-based hash of (run_seed, step, pass_tag, layer_tag, sample id,
// element), so a sample sees the same mask no matter which batch it lands
// in or whether it is processed alone.
struct DropCtx {
    bool train = false;
    std::uint64_t run_seed = 0;
    std::uint64_t step = 0;
    std::uint64_t pass_tag = 0;
    std::vector<std::uint64_t> sample_ids;  // one per batch row
};

inline DropCtx eval_ctx() { return DropCtx{}; }

template <class T>
class Linear {
  public:
    Linear(const std::string& prefix, std::size_t in, std::size_t out)
        : w_(prefix + ".w", {out, in}), b_(prefix + ".b", {out}), in_(in), out_(out) {}

    void init(Rng& rng) {
        const double bound = std::sqrt(6.0 / (double(in_) + double(out_)));
        for (auto& v : w_.value.data) v = static_cast<T>(rng.uniform(-bound, bound));
        b_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.shape.size() != 2 || x.shape[1] != in_) {
            throw DimensionError("linear " + w_.name + ": input " + x.shape_str() + " expects [N," +
                                 std::to_string(in_) + "]");
        }
        x_ = x;
        Tensor<T> y;
        kernels::fc_forward(x, w_.value, b_.value, y);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        kernels::fc_backward_params(x_, dy, w_.grad, b_.grad);
        Tensor<T> dx;
        kernels::fc_backward_input(dy, w_.value, dx);
        return dx;
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&w_);
        out.push_back(&b_);
    }

    Param<T>& weight() { return w_; }
    Param<T>& bias() { return b_; }

  private:
    Param<T> w_, b_;
    std::size_t in_, out_;
    Tensor<T> x_;
};

template <class T>
class Conv1d {
  public:
    Conv1d(const std::string& prefix, std::size_t cin, std::size_t cout, std::size_t k,
           std::size_t stride, std::size_t pad)
        : w_(prefix + ".w", {cout, cin, k}),
          b_(prefix + ".b", {cout}),
          cin_(cin),
          cout_(cout),
          k_(k),
          stride_(stride),
          pad_(pad) {}

    void init(Rng& rng) {
        const double fan_in = double(cin_ * k_), fan_out = double(cout_ * k_);
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w_.value.data) v = static_cast<T>(rng.uniform(-bound, bound));
        b_.value.fill(T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.shape.size() != 3 || x.shape[1] != cin_) {
            throw DimensionError("conv " + w_.name + ": input " + x.shape_str() + " expects [N," +
                                 std::to_string(cin_) + ",L]");
        }
        x_ = x;
        Tensor<T> y;
        kernels::conv1d_forward(x, w_.value, stride_, pad_, y);
        // bias per output channel
        const std::size_t n = y.shape[0], lout = y.shape[2];
        T* yp = y.ptr();
        const T* bp = b_.value.ptr();
        par_for(n * cout_ * lout, [&](std::size_t idx) {
            yp[idx] += bp[(idx / lout) % cout_];
        });
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        kernels::conv1d_backward_kernels(x_, dy, stride_, pad_, w_.grad);
        // bias grad: sum over batch and positions
        const std::size_t n = dy.shape[0], lout = dy.shape[2];
        const T* dyp = dy.ptr();
        T* dbp = b_.grad.ptr();
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t co = 0; co < cout_; ++co) {
                T acc = 0;
                const T* row = dyp + (r * cout_ + co) * lout;
                for (std::size_t t = 0; t < lout; ++t) acc += row[t];
                dbp[co] += acc;
            }
        Tensor<T> dx;
        kernels::conv1d_backward_input(dy, w_.value, stride_, pad_, x_.shape[2], dx);
        return dx;
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&w_);
        out.push_back(&b_);
    }

    Param<T>& weight() { return w_; }
    Param<T>& bias() { return b_; }

  private:
    Param<T> w_, b_;
    std::size_t cin_, cout_, k_, stride_, pad_;
    Tensor<T> x_;
};

// Per-channel normalization over the batch and time axes of [N,C,L].
// Running statistics follow running = momentum * running + (1-m) * batch.
template <class T>
class BatchNorm1d {
  public:
    static constexpr double kMomentum = 0.9;
    static constexpr double kEps = 1e-5;

    BatchNorm1d(const std::string& prefix, std::size_t channels)
        : gamma_(prefix + ".gamma", {channels}),
          beta_(prefix + ".beta", {channels}),
          running_mean_(prefix + ".running_mean", {channels}),
          running_var_(prefix + ".running_var", {channels}),
          c_(channels) {
        gamma_.value.fill(T(1));
        running_var_.value.fill(T(1));
        running_mean_.trainable = false;
        running_var_.trainable = false;
    }

    void init(Rng&) {
        gamma_.value.fill(T(1));
        beta_.value.fill(T(0));
        running_mean_.value.fill(T(0));
        running_var_.value.fill(T(1));
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        if (x.shape.size() != 3 || x.shape[1] != c_) {
            throw DimensionError("batchnorm " + gamma_.name + ": input " + x.shape_str() +
                                 " expects [N," + std::to_string(c_) + ",L]");
        }
        const std::size_t n = x.shape[0], len = x.shape[2];
        train_ = train;
        if (train && n < 2) {
            throw NumericError("batchnorm " + gamma_.name +
                               ": training statistics need a batch of at least 2, got " +
                               std::to_string(n));
        }
        x_ = x;
        Tensor<T> y(x.shape);
        mean_.assign(c_, 0.0);
        inv_std_.assign(c_, 0.0);
        const T* xp = x.ptr();
        T* yp = y.ptr();
        const double m = double(n * len);
        for (std::size_t ch = 0; ch < c_; ++ch) {
            double mu, var;
            if (train) {
                double s = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    const T* row = xp + (r * c_ + ch) * len;
                    for (std::size_t t = 0; t < len; ++t) s += double(row[t]);
                }
                mu = s / m;
                double sq = 0;
                for (std::size_t r = 0; r < n; ++r) {
                    const T* row = xp + (r * c_ + ch) * len;
                    for (std::size_t t = 0; t < len; ++t) {
                        const double d = double(row[t]) - mu;
                        sq += d * d;
                    }
                }
                var = sq / m;
                running_mean_.value.data[ch] = static_cast<T>(
                    kMomentum * double(running_mean_.value.data[ch]) + (1.0 - kMomentum) * mu);
                running_var_.value.data[ch] = static_cast<T>(
                    kMomentum * double(running_var_.value.data[ch]) + (1.0 - kMomentum) * var);
            } else {
                mu = double(running_mean_.value.data[ch]);
                var = double(running_var_.value.data[ch]);
            }
            const double inv = 1.0 / std::sqrt(var + kEps);
            mean_[ch] = mu;
            inv_std_[ch] = inv;
            const double g = double(gamma_.value.data[ch]), b = double(beta_.value.data[ch]);
            for (std::size_t r = 0; r < n; ++r) {
                const T* xr = xp + (r * c_ + ch) * len;
                T* yr = yp + (r * c_ + ch) * len;
                for (std::size_t t = 0; t < len; ++t) {
                    yr[t] = static_cast<T>((double(xr[t]) - mu) * inv * g + b);
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const std::size_t n = dy.shape[0], len = dy.shape[2];
        const double m = double(n * len);
        Tensor<T> dx(dy.shape);
        const T* xp = x_.ptr();
        const T* dyp = dy.ptr();
        T* dxp = dx.ptr();
        for (std::size_t ch = 0; ch < c_; ++ch) {
            const double mu = mean_[ch], inv = inv_std_[ch];
            const double g = double(gamma_.value.data[ch]);
            double dg = 0, db = 0;
            for (std::size_t r = 0; r < n; ++r) {
                const T* xr = xp + (r * c_ + ch) * len;
                const T* dyr = dyp + (r * c_ + ch) * len;
                for (std::size_t t = 0; t < len; ++t) {
                    dg += double(dyr[t]) * (double(xr[t]) - mu) * inv;
                    db += double(dyr[t]);
                }
            }
            gamma_.grad.data[ch] += static_cast<T>(dg);
            beta_.grad.data[ch] += static_cast<T>(db);
            if (!train_) {
                for (std::size_t r = 0; r < n; ++r) {
                    const T* dyr = dyp + (r * c_ + ch) * len;
                    T* dxr = dxp + (r * c_ + ch) * len;
                    for (std::size_t t = 0; t < len; ++t) {
                        dxr[t] = static_cast<T>(double(dyr[t]) * g * inv);
                    }
                }
                continue;
            }
            // train mode: batch statistics carry gradient too
            for (std::size_t r = 0; r < n; ++r) {
                const T* xr = xp + (r * c_ + ch) * len;
                const T* dyr = dyp + (r * c_ + ch) * len;
                T* dxr = dxp + (r * c_ + ch) * len;
                for (std::size_t t = 0; t < len; ++t) {
                    const double xhat = (double(xr[t]) - mu) * inv;
                    const double v = m * double(dyr[t]) - db - xhat * dg;
                    dxr[t] = static_cast<T>(g * inv / m * v);
                }
            }
        }
        return dx;
    }

    void collect(ParamRefs<T>& out) {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    // Running statistics ride along in checkpoints but are never optimized.
    void collect_state(ParamRefs<T>& out) {
        out.push_back(&running_mean_);
        out.push_back(&running_var_);
    }

  private:
    Param<T> gamma_, beta_, running_mean_, running_var_;
    std::size_t c_;
    bool train_ = false;
    Tensor<T> x_;
    std::vector<double> mean_, inv_std_;
};

template <class T>
class ReLU {
  public:
    Tensor<T> forward(const Tensor<T>& x) {
        mask_.assign(x.size(), 0);
        Tensor<T> y(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x.data[i] > T(0)) {
                mask_[i] = 1;
                y.data[i] = x.data[i];
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i) {
            dx.data[i] = mask_[i] ? dy.data[i] : T(0);
        }
        return dx;
    }

  private:
    std::vector<std::uint8_t> mask_;
};

// Inverted dropout with counter-based masks (see DropCtx). Identity when
// ctx.train is false or the rate is zero.
template <class T>
class Dropout {
  public:
    Dropout(double rate, std::uint64_t layer_tag) : rate_(rate), tag_(layer_tag) {
        if (rate < 0.0 || rate >= 1.0) {
            throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
        }
    }

    Tensor<T> forward(const Tensor<T>& x, const DropCtx& ctx) {
        if (!ctx.train || rate_ == 0.0) {
            active_ = false;
            return x;
        }
        const std::size_t n = x.shape[0];
        if (ctx.sample_ids.size() != n) {
            throw DimensionError("dropout: " + std::to_string(ctx.sample_ids.size()) +
                                 " sample ids for a batch of " + std::to_string(n));
        }
        active_ = true;
        const std::size_t per_row = x.size() / n;
        const double scale = 1.0 / (1.0 - rate_);
        const std::uint64_t a = hash_combine(ctx.run_seed, ctx.step);
        const std::uint64_t b = hash_combine(ctx.pass_tag, tag_);
        mask_ = Tensor<T>(x.shape);
        Tensor<T> y(x.shape);
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint64_t sid = ctx.sample_ids[r];
            for (std::size_t e = 0; e < per_row; ++e) {
                const double u = unit_hash(a, b, sid, e);
                const T mul = (u >= rate_) ? static_cast<T>(scale) : T(0);
                mask_.data[r * per_row + e] = mul;
                y.data[r * per_row + e] = x.data[r * per_row + e] * mul;
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        if (!active_) return dy;
        Tensor<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = dy.data[i] * mask_.data[i];
        return dx;
    }

  private:
    double rate_;
    std::uint64_t tag_;
    bool active_ = false;
    Tensor<T> mask_;
};

template <class T>
struct CeResult {
    double loss = 0;                // mean over the batch
    Tensor<T> dlogits;              // d loss / d logits, mean-reduced
    std::vector<double> per_sample;
};

// Softmax cross-entropy with label smoothing. Targets are
// (1-eps) * onehot + eps / K.
template <class T>
CeResult<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                          double smoothing) {
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    if (labels.size() != n) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for logits " + logits.shape_str());
    }
    if (smoothing < 0.0 || smoothing >= 1.0) {
        throw ConfigError("label smoothing must lie in [0, 1)");
    }
    CeResult<T> res;
    res.dlogits = Tensor<T>(logits.shape);
    res.per_sample.resize(n);
    const double off = smoothing / double(k);
    for (std::size_t r = 0; r < n; ++r) {
        const int y = labels[r];
        if (y < 0 || std::size_t(y) >= k) {
            throw ConfigError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(k) + ")");
        }
        double mx = -1e300;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = double(logits.at2(r, j));
            if (!std::isfinite(v)) {
                throw NumericError("cross_entropy: non-finite logit at row " + std::to_string(r));
            }
            mx = std::max(mx, v);
        }
        double z = 0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(double(logits.at2(r, j)) - mx);
        const double logz = std::log(z) + mx;
        double loss = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double q = off + (std::size_t(y) == j ? 1.0 - smoothing : 0.0);
            const double logp = double(logits.at2(r, j)) - logz;
            loss -= q * logp;
            const double p = std::exp(logp);
            res.dlogits.at2(r, j) = static_cast<T>((p - q) / double(n));
        }
        res.per_sample[r] = loss;
        res.loss += loss / double(n);
    }
    return res;
}

// Softmax probabilities, numerically stabilized; row-major [N,K].
template <class T>
Tensor<T> softmax(const Tensor<T>& logits) {
    const std::size_t n = logits.shape[0], k = logits.shape[1];
    Tensor<T> p(logits.shape);
    for (std::size_t r = 0; r < n; ++r) {
        double mx = -1e300;
        for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, double(logits.at2(r, j)));
        double z = 0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(double(logits.at2(r, j)) - mx);
        for (std::size_t j = 0; j < k; ++j) {
            p.at2(r, j) = static_cast<T>(std::exp(double(logits.at2(r, j)) - mx) / z);
        }
    }
    return p;
}

template <class T>
inline void zero_grads(const ParamRefs<T>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace taac::nn
