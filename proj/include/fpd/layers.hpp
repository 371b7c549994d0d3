#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fpd/error.hpp"
#include "fpd/rng.hpp"
#include "fpd/tensor.hpp"

namespace fpd {

enum class Mode { Train, Eval };

template <typename S>
struct Parameter {
    std::string name;
    Tensor<S> value;
    Tensor<S> grad;

    Parameter(std::string n, Tensor<S> v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor<S>::zeros(value.shape())) {}
};

// Carried through one forward pass. `pattern` accumulates a hash of every
// data-dependent branch decision (relu masks, pooling argmax, dropout masks)
// so the gradient checker can tell when a perturbation crossed a kink.
struct ForwardCtx {
    Mode mode = Mode::Eval;
    Rng* rng = nullptr;
    std::uint64_t pattern = 1469598103934665603ULL;

    void mix(std::uint64_t v) { pattern = (pattern ^ v) * 1099511628211ULL; }
};

template <typename S>
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) = 0;
    virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
    virtual void collect_params(std::vector<Parameter<S>*>& out) {}
    // Non-trainable state that still belongs in a weights archive.
    virtual void collect_buffers(std::vector<std::pair<std::string, Tensor<S>*>>& out) {}
    virtual const char* kind() const = 0;
    // Width of the layer output per sample, when meaningful (dense-like layers).
    virtual std::size_t output_dim() const { return 0; }
};

// ---------------------------------------------------------------------------
// Weight initialization

enum class Init { HeNormal, XavierUniform, Zero };

template <typename S>
void init_tensor(Tensor<S>& t, Init kind, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    switch (kind) {
        case Init::HeNormal:
            rng.fill_normal(t.vec(), 0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
            break;
        case Init::XavierUniform: {
            double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            rng.fill_uniform(t.vec(), -limit, limit);
            break;
        }
        case Init::Zero:
            for (auto& v : t.vec()) v = S(0);
            break;
    }
}

// ---------------------------------------------------------------------------
// Dense: x[BxI] * W[OxI]^T + b[O]

template <typename S>
class Dense : public Layer<S> {
public:
    Dense(std::size_t in_dim, std::size_t out_dim, const std::string& name, Rng& rng,
          Init weight_init = Init::HeNormal)
        : in_(in_dim),
          out_(out_dim),
          weight_(name + ".weight", Tensor<S>({out_dim, in_dim})),
          bias_(name + ".bias", Tensor<S>({out_dim})) {
        init_tensor(weight_.value, weight_init, in_dim, out_dim, rng);
    }

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx&) override {
        if (x.rank() != 2 || x.dim(1) != in_)
            raise(ErrorCategory::Shape,
                  "dense " + weight_.name + ": input " + shape_string(x.shape()) +
                      " incompatible with weight " + shape_string(weight_.value.shape()));
        input_ = x;
        std::size_t B = x.dim(0);
        Tensor<S> y({B, out_});
        for (std::size_t b = 0; b < B; ++b) {
            const S* xr = x.data() + b * in_;
            S* yr = y.data() + b * out_;
            for (std::size_t o = 0; o < out_; ++o) {
                const S* wr = weight_.value.data() + o * in_;
                S acc = bias_.value[o];
                for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
                yr[o] = acc;
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        std::size_t B = input_.dim(0);
        require_shape(dy, {B, out_}, "dense backward");
        Tensor<S> dx({B, in_});
        for (std::size_t b = 0; b < B; ++b) {
            const S* dyr = dy.data() + b * out_;
            const S* xr = input_.data() + b * in_;
            S* dxr = dx.data() + b * in_;
            for (std::size_t o = 0; o < out_; ++o) {
                const S g = dyr[o];
                const S* wr = weight_.value.data() + o * in_;
                S* gw = weight_.grad.data() + o * in_;
                for (std::size_t i = 0; i < in_; ++i) {
                    dxr[i] += g * wr[i];
                    gw[i] += g * xr[i];
                }
                bias_.grad[o] += g;
            }
        }
        return dx;
    }

    void collect_params(std::vector<Parameter<S>*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    const char* kind() const override { return "dense"; }
    std::size_t output_dim() const override { return out_; }

private:
    std::size_t in_, out_;
    Parameter<S> weight_, bias_;
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// ReLU. Subgradient at 0 is 0.

template <typename S>
class Relu : public Layer<S> {
public:
    Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) override {
        mask_.assign(x.size(), 0);
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            bool on = x[i] > S(0);
            mask_[i] = on;
            y[i] = on ? x[i] : S(0);
            ctx.mix(on);
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = mask_[i] ? dy[i] : S(0);
        return dx;
    }

    const char* kind() const override { return "relu"; }

private:
    std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Sigmoid, evaluated on the numerically safe branch per sign.

template <typename S>
class Sigmoid : public Layer<S> {
public:
    static S eval(S x) {
        if (x >= S(0)) {
            S e = std::exp(-x);
            return S(1) / (S(1) + e);
        }
        S e = std::exp(x);
        return e / (S(1) + e);
    }

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx&) override {
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = eval(x[i]);
        output_ = y;
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx[i] = dy[i] * output_[i] * (S(1) - output_[i]);
        return dx;
    }

    const char* kind() const override { return "sigmoid"; }

private:
    Tensor<S> output_;
};

// ---------------------------------------------------------------------------
// Inverted dropout: train-time scaling by 1/(1-p), eval is the identity.

template <typename S>
class Dropout : public Layer<S> {
public:
    explicit Dropout(double p) : p_(p) {
        if (!(p >= 0.0 && p < 1.0))
            raise(ErrorCategory::Param,
                  "dropout probability must lie in [0,1), got " + std::to_string(p));
    }

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) override {
        if (ctx.mode == Mode::Eval) {
            train_pass_ = false;
            return x;
        }
        if (ctx.rng == nullptr)
            raise(ErrorCategory::Param, "dropout in train mode requires an rng");
        train_pass_ = true;
        mask_.assign(x.size(), 0);
        const S scale = S(1.0 / (1.0 - p_));
        Tensor<S> y(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            bool keep = ctx.rng->uniform() >= p_;
            mask_[i] = keep;
            y[i] = keep ? x[i] * scale : S(0);
            ctx.mix(keep);
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        if (!train_pass_) return dy;
        const S scale = S(1.0 / (1.0 - p_));
        Tensor<S> dx(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = mask_[i] ? dy[i] * scale : S(0);
        return dx;
    }

    const char* kind() const override { return "dropout"; }

private:
    double p_;
    bool train_pass_ = false;
    std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis (dim 1). Accepts BxF and BxCxHxW.
// Normalization uses biased batch variance; running variance is updated with
// the unbiased estimate. momentum 0.1, epsilon 1e-5.

template <typename S>
class BatchNorm : public Layer<S> {
public:
    BatchNorm(std::size_t features, const std::string& name, double eps = 1e-5,
              double momentum = 0.1)
        : features_(features),
          eps_(eps),
          momentum_(momentum),
          gamma_(name + ".gamma", Tensor<S>::full({features}, S(1))),
          beta_(name + ".beta", Tensor<S>({features})),
          running_mean_name_(name + ".running_mean"),
          running_var_name_(name + ".running_var"),
          running_mean_(Tensor<S>::zeros({features})),
          running_var_(Tensor<S>::full({features}, S(1))) {}

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) override {
        describe_input(x);
        input_ = x;
        train_pass_ = (ctx.mode == Mode::Train);
        if (train_pass_ && count_ < 2)
            raise(ErrorCategory::Param,
                  "batchnorm train mode needs at least 2 values per feature, got " +
                      std::to_string(count_));

        mean_.assign(features_, 0.0);
        inv_std_.assign(features_, 0.0);
        Tensor<S> y(x.shape());
        xhat_ = Tensor<S>(x.shape());

        for (std::size_t f = 0; f < features_; ++f) {
            double mu, var;
            if (train_pass_) {
                double sum = 0.0;
                for_feature(x, f, [&](S v) { sum += static_cast<double>(v); });
                mu = sum / static_cast<double>(count_);
                double sq = 0.0;
                for_feature(x, f, [&](S v) {
                    double d = static_cast<double>(v) - mu;
                    sq += d * d;
                });
                var = sq / static_cast<double>(count_);
                double unbiased = sq / static_cast<double>(count_ - 1);
                running_mean_[f] =
                    S((1.0 - momentum_) * static_cast<double>(running_mean_[f]) + momentum_ * mu);
                running_var_[f] = S((1.0 - momentum_) * static_cast<double>(running_var_[f]) +
                                    momentum_ * unbiased);
            } else {
                mu = static_cast<double>(running_mean_[f]);
                var = static_cast<double>(running_var_[f]);
            }
            double inv = 1.0 / std::sqrt(var + eps_);
            mean_[f] = mu;
            inv_std_[f] = inv;
            const double g = static_cast<double>(gamma_.value[f]);
            const double b = static_cast<double>(beta_.value[f]);
            transform_feature(x, y, f, [&](S v, std::size_t flat) {
                double xh = (static_cast<double>(v) - mu) * inv;
                xhat_[flat] = S(xh);
                return S(g * xh + b);
            });
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        if (dy.shape() != input_.shape())
            raise(ErrorCategory::Shape, "batchnorm backward: gradient shape " +
                                            shape_string(dy.shape()) + " != input " +
                                            shape_string(input_.shape()));
        Tensor<S> dx(dy.shape());
        const double n = static_cast<double>(count_);
        for (std::size_t f = 0; f < features_; ++f) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for_feature_flat(dy, f, [&](S v, std::size_t flat) {
                sum_dy += static_cast<double>(v);
                sum_dy_xhat += static_cast<double>(v) * static_cast<double>(xhat_[flat]);
            });
            gamma_.grad[f] += S(sum_dy_xhat);
            beta_.grad[f] += S(sum_dy);

            const double g = static_cast<double>(gamma_.value[f]);
            const double inv = inv_std_[f];
            if (train_pass_) {
                for_feature_flat(dy, f, [&](S v, std::size_t flat) {
                    double d = static_cast<double>(v) - sum_dy / n -
                               static_cast<double>(xhat_[flat]) * sum_dy_xhat / n;
                    dx[flat] = S(g * inv * d);
                });
            } else {
                for_feature_flat(dy, f, [&](S v, std::size_t flat) { dx[flat] = S(g * inv * v); });
            }
        }
        return dx;
    }

    void collect_params(std::vector<Parameter<S>*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    void collect_buffers(std::vector<std::pair<std::string, Tensor<S>*>>& out) override {
        out.emplace_back(running_mean_name_, &running_mean_);
        out.emplace_back(running_var_name_, &running_var_);
    }

    const char* kind() const override { return "batchnorm"; }
    std::size_t output_dim() const override { return features_; }

    const Tensor<S>& running_mean() const { return running_mean_; }
    const Tensor<S>& running_var() const { return running_var_; }

private:
    void describe_input(const Tensor<S>& x) {
        if (x.rank() == 2) {
            spatial_ = 1;
        } else if (x.rank() == 4) {
            spatial_ = x.dim(2) * x.dim(3);
        } else {
            raise(ErrorCategory::Shape,
                  "batchnorm expects rank-2 or rank-4 input, got " + shape_string(x.shape()));
        }
        if (x.dim(1) != features_)
            raise(ErrorCategory::Shape, "batchnorm over " + std::to_string(features_) +
                                            " features got input " + shape_string(x.shape()));
        batch_ = x.dim(0);
        count_ = batch_ * spatial_;
    }

    template <typename F>
    void for_feature(const Tensor<S>& t, std::size_t f, F&& fn) const {
        for (std::size_t b = 0; b < batch_; ++b) {
            const S* base = t.data() + (b * features_ + f) * spatial_;
            for (std::size_t s = 0; s < spatial_; ++s) fn(base[s]);
        }
    }

    template <typename F>
    void for_feature_flat(const Tensor<S>& t, std::size_t f, F&& fn) const {
        for (std::size_t b = 0; b < batch_; ++b) {
            std::size_t off = (b * features_ + f) * spatial_;
            for (std::size_t s = 0; s < spatial_; ++s) fn(t[off + s], off + s);
        }
    }

    template <typename F>
    void transform_feature(const Tensor<S>& x, Tensor<S>& y, std::size_t f, F&& fn) const {
        for (std::size_t b = 0; b < batch_; ++b) {
            std::size_t off = (b * features_ + f) * spatial_;
            for (std::size_t s = 0; s < spatial_; ++s) y[off + s] = fn(x[off + s], off + s);
        }
    }

    std::size_t features_;
    double eps_, momentum_;
    Parameter<S> gamma_, beta_;
    std::string running_mean_name_, running_var_name_;
    Tensor<S> running_mean_, running_var_;

    // forward cache
    Tensor<S> input_, xhat_;
    std::vector<double> mean_, inv_std_;
    std::size_t batch_ = 0, spatial_ = 1, count_ = 0;
    bool train_pass_ = false;
};

// ---------------------------------------------------------------------------
// Conv2d: cross-correlation of x[BxCxHxW] with kernel[KxCxkxk], zero padding.

template <typename S>
class Conv2d : public Layer<S> {
public:
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t ksize, std::size_t stride,
           std::size_t padding, const std::string& name, Rng& rng,
           Init weight_init = Init::HeNormal)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          k_(ksize),
          stride_(stride),
          pad_(padding),
          kernel_(name + ".weight", Tensor<S>({out_ch, in_ch, ksize, ksize})),
          bias_(name + ".bias", Tensor<S>({out_ch})) {
        init_tensor(kernel_.value, weight_init, in_ch * ksize * ksize, out_ch * ksize * ksize,
                    rng);
    }

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx&) override {
        check_input(x);
        input_ = x;
        const std::size_t B = x.dim(0), H = x.dim(2), W = x.dim(3);
        const std::size_t OH = out_extent(H), OW = out_extent(W);
        Tensor<S> y({B, out_ch_, OH, OW});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t kc = 0; kc < out_ch_; ++kc)
                for (std::size_t oh = 0; oh < OH; ++oh)
                    for (std::size_t ow = 0; ow < OW; ++ow) {
                        S acc = bias_.value[kc];
                        for (std::size_t c = 0; c < in_ch_; ++c)
                            for (std::size_t i = 0; i < k_; ++i) {
                                const std::ptrdiff_t h =
                                    static_cast<std::ptrdiff_t>(oh * stride_ + i) -
                                    static_cast<std::ptrdiff_t>(pad_);
                                if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t j = 0; j < k_; ++j) {
                                    const std::ptrdiff_t w =
                                        static_cast<std::ptrdiff_t>(ow * stride_ + j) -
                                        static_cast<std::ptrdiff_t>(pad_);
                                    if (w < 0 || w >= static_cast<std::ptrdiff_t>(W)) continue;
                                    acc += kernel_.value.at(kc, c, i, j) *
                                           x.at(b, c, static_cast<std::size_t>(h),
                                                static_cast<std::size_t>(w));
                                }
                            }
                        y.at(b, kc, oh, ow) = acc;
                    }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const std::size_t B = input_.dim(0), H = input_.dim(2), W = input_.dim(3);
        const std::size_t OH = out_extent(H), OW = out_extent(W);
        require_shape(dy, {B, out_ch_, OH, OW}, "conv2d backward");
        Tensor<S> dx(input_.shape());
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t kc = 0; kc < out_ch_; ++kc)
                for (std::size_t oh = 0; oh < OH; ++oh)
                    for (std::size_t ow = 0; ow < OW; ++ow) {
                        const S g = dy.at(b, kc, oh, ow);
                        bias_.grad[kc] += g;
                        for (std::size_t c = 0; c < in_ch_; ++c)
                            for (std::size_t i = 0; i < k_; ++i) {
                                const std::ptrdiff_t h =
                                    static_cast<std::ptrdiff_t>(oh * stride_ + i) -
                                    static_cast<std::ptrdiff_t>(pad_);
                                if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t j = 0; j < k_; ++j) {
                                    const std::ptrdiff_t w =
                                        static_cast<std::ptrdiff_t>(ow * stride_ + j) -
                                        static_cast<std::ptrdiff_t>(pad_);
                                    if (w < 0 || w >= static_cast<std::ptrdiff_t>(W)) continue;
                                    const std::size_t hh = static_cast<std::size_t>(h);
                                    const std::size_t ww = static_cast<std::size_t>(w);
                                    kernel_.grad.at(kc, c, i, j) += g * input_.at(b, c, hh, ww);
                                    dx.at(b, c, hh, ww) += g * kernel_.value.at(kc, c, i, j);
                                }
                            }
                    }
        return dx;
    }

    void collect_params(std::vector<Parameter<S>*>& out) override {
        out.push_back(&kernel_);
        out.push_back(&bias_);
    }

    const char* kind() const override { return "conv2d"; }

private:
    void check_input(const Tensor<S>& x) const {
        if (x.rank() != 4 || x.dim(1) != in_ch_)
            raise(ErrorCategory::Shape,
                  "conv2d " + kernel_.name + ": input " + shape_string(x.shape()) +
                      " incompatible with kernel " + shape_string(kernel_.value.shape()));
        check_extent(x.dim(2), "height");
        check_extent(x.dim(3), "width");
    }

    void check_extent(std::size_t e, const char* axis) const {
        if (e + 2 * pad_ < k_ || (e + 2 * pad_ - k_) % stride_ != 0)
            raise(ErrorCategory::Shape, std::string("conv2d: non-integral output ") + axis +
                                            " for input extent " + std::to_string(e) +
                                            ", kernel " + std::to_string(k_) + ", stride " +
                                            std::to_string(stride_) + ", padding " +
                                            std::to_string(pad_));
    }

    std::size_t out_extent(std::size_t e) const { return (e + 2 * pad_ - k_) / stride_ + 1; }

    std::size_t in_ch_, out_ch_, k_, stride_, pad_;
    Parameter<S> kernel_, bias_;
    Tensor<S> input_;
};

// ---------------------------------------------------------------------------
// Max pooling, padding excluded from the max. Ties resolve to the first
// element in scan order.

template <typename S>
class MaxPool2d : public Layer<S> {
public:
    MaxPool2d(std::size_t ksize, std::size_t stride, std::size_t padding)
        : k_(ksize), stride_(stride), pad_(padding) {}

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) override {
        if (x.rank() != 4)
            raise(ErrorCategory::Shape, "maxpool expects BxCxHxW, got " + shape_string(x.shape()));
        in_shape_ = x.shape();
        const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
        const std::size_t OH = out_extent(H), OW = out_extent(W);
        Tensor<S> y({B, C, OH, OW});
        argmax_.assign(y.size(), 0);
        std::size_t oi = 0;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t oh = 0; oh < OH; ++oh)
                    for (std::size_t ow = 0; ow < OW; ++ow, ++oi) {
                        S best = S(0);
                        std::size_t best_flat = 0;
                        bool seen = false;
                        for (std::size_t i = 0; i < k_; ++i) {
                            const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(oh * stride_ + i) -
                                                     static_cast<std::ptrdiff_t>(pad_);
                            if (h < 0 || h >= static_cast<std::ptrdiff_t>(H)) continue;
                            for (std::size_t j = 0; j < k_; ++j) {
                                const std::ptrdiff_t w =
                                    static_cast<std::ptrdiff_t>(ow * stride_ + j) -
                                    static_cast<std::ptrdiff_t>(pad_);
                                if (w < 0 || w >= static_cast<std::ptrdiff_t>(W)) continue;
                                std::size_t flat =
                                    ((b * C + c) * H + static_cast<std::size_t>(h)) * W +
                                    static_cast<std::size_t>(w);
                                if (!seen || x[flat] > best) {
                                    best = x[flat];
                                    best_flat = flat;
                                    seen = true;
                                }
                            }
                        }
                        if (!seen)
                            raise(ErrorCategory::Shape, "maxpool window fell entirely in padding");
                        y[oi] = best;
                        argmax_[oi] = best_flat;
                        ctx.mix(best_flat);
                    }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dx(in_shape_);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
        return dx;
    }

    const char* kind() const override { return "maxpool"; }

private:
    std::size_t out_extent(std::size_t e) const {
        if (e + 2 * pad_ < k_ || (e + 2 * pad_ - k_) % stride_ != 0)
            raise(ErrorCategory::Shape, "maxpool: non-integral output extent");
        return (e + 2 * pad_ - k_) / stride_ + 1;
    }

    std::size_t k_, stride_, pad_;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

// ---------------------------------------------------------------------------
// Global average pool: BxCxHxW -> BxC.

template <typename S>
class GlobalAvgPool : public Layer<S> {
public:
    Tensor<S> forward(const Tensor<S>& x, ForwardCtx&) override {
        if (x.rank() != 4)
            raise(ErrorCategory::Shape,
                  "global avg pool expects BxCxHxW, got " + shape_string(x.shape()));
        in_shape_ = x.shape();
        const std::size_t B = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
        Tensor<S> y({B, C});
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                const S* base = x.data() + (b * C + c) * HW;
                double acc = 0.0;
                for (std::size_t s = 0; s < HW; ++s) acc += static_cast<double>(base[s]);
                y.at(b, c) = S(acc / static_cast<double>(HW));
            }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        const std::size_t B = in_shape_[0], C = in_shape_[1], HW = in_shape_[2] * in_shape_[3];
        Tensor<S> dx(in_shape_);
        const S inv = S(1.0 / static_cast<double>(HW));
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
                S g = dy.at(b, c) * inv;
                S* base = dx.data() + (b * C + c) * HW;
                for (std::size_t s = 0; s < HW; ++s) base[s] = g;
            }
        return dx;
    }

    const char* kind() const override { return "gap"; }

private:
    std::vector<std::size_t> in_shape_;
};

// ---------------------------------------------------------------------------
// Residual block, basic (3x3 -> 3x3) or bottleneck (1x1 -> 3x3 -> 1x1 *4)
// form with a projection shortcut whenever shape changes:
//   out = relu(F(x) + shortcut(x))
// Strided convs use even kernels (4x4 pad 1, projection 2x2 pad 0) so the
// output extent (H+2p-k)/s+1 divides exactly on even feature maps; conv2d
// rejects non-integral geometry outright.

template <typename S>
class ResidualBlock : public Layer<S> {
public:
    ResidualBlock(std::size_t in_ch, std::size_t mid_ch, std::size_t stride, bool bottleneck,
                  const std::string& name, Rng& rng)
        : bottleneck_(bottleneck), out_ch_(bottleneck ? mid_ch * 4 : mid_ch) {
        const std::size_t sk = stride == 1 ? 3 : 4;  // strided 3x3 position
        if (bottleneck_) {
            conv1_ = std::make_unique<Conv2d<S>>(in_ch, mid_ch, 1, 1, 0, name + ".conv1", rng);
            bn1_ = std::make_unique<BatchNorm<S>>(mid_ch, name + ".bn1");
            conv2_ =
                std::make_unique<Conv2d<S>>(mid_ch, mid_ch, sk, stride, 1, name + ".conv2", rng);
            bn2_ = std::make_unique<BatchNorm<S>>(mid_ch, name + ".bn2");
            conv3_ = std::make_unique<Conv2d<S>>(mid_ch, out_ch_, 1, 1, 0, name + ".conv3", rng);
            bn3_ = std::make_unique<BatchNorm<S>>(out_ch_, name + ".bn3");
        } else {
            conv1_ =
                std::make_unique<Conv2d<S>>(in_ch, mid_ch, sk, stride, 1, name + ".conv1", rng);
            bn1_ = std::make_unique<BatchNorm<S>>(mid_ch, name + ".bn1");
            conv2_ = std::make_unique<Conv2d<S>>(mid_ch, out_ch_, 3, 1, 1, name + ".conv2", rng);
            bn2_ = std::make_unique<BatchNorm<S>>(out_ch_, name + ".bn2");
        }
        if (stride != 1 || in_ch != out_ch_) {
            proj_ = std::make_unique<Conv2d<S>>(in_ch, out_ch_, stride == 1 ? 1 : 2, stride, 0,
                                                name + ".proj", rng);
            proj_bn_ = std::make_unique<BatchNorm<S>>(out_ch_, name + ".proj_bn");
        }
    }

    Tensor<S> forward(const Tensor<S>& x, ForwardCtx& ctx) override {
        Tensor<S> f = bn1_->forward(conv1_->forward(x, ctx), ctx);
        f = relu1_.forward(f, ctx);
        f = bn2_->forward(conv2_->forward(f, ctx), ctx);
        if (bottleneck_) {
            f = relu2_.forward(f, ctx);
            f = bn3_->forward(conv3_->forward(f, ctx), ctx);
        }
        Tensor<S> sc = proj_ ? proj_bn_->forward(proj_->forward(x, ctx), ctx) : x;
        if (!f.same_shape(sc))
            raise(ErrorCategory::Shape, "residual branch " + shape_string(f.shape()) +
                                            " does not match shortcut " +
                                            shape_string(sc.shape()));
        out_mask_.assign(f.size(), 0);
        Tensor<S> y(f.shape());
        for (std::size_t i = 0; i < f.size(); ++i) {
            S sum = f[i] + sc[i];
            bool on = sum > S(0);
            out_mask_[i] = on;
            y[i] = on ? sum : S(0);
            ctx.mix(on);
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) override {
        Tensor<S> dsum(dy.shape());
        for (std::size_t i = 0; i < dy.size(); ++i) dsum[i] = out_mask_[i] ? dy[i] : S(0);

        Tensor<S> df = dsum;
        if (bottleneck_) {
            df = conv3_->backward(bn3_->backward(df));
            df = relu2_.backward(df);
        }
        df = conv2_->backward(bn2_->backward(df));
        df = relu1_.backward(df);
        df = conv1_->backward(bn1_->backward(df));

        if (proj_) {
            Tensor<S> dsc = proj_->backward(proj_bn_->backward(dsum));
            for (std::size_t i = 0; i < df.size(); ++i) df[i] += dsc[i];
        } else {
            for (std::size_t i = 0; i < df.size(); ++i) df[i] += dsum[i];
        }
        return df;
    }

    void collect_params(std::vector<Parameter<S>*>& out) override {
        conv1_->collect_params(out);
        bn1_->collect_params(out);
        conv2_->collect_params(out);
        bn2_->collect_params(out);
        if (bottleneck_) {
            conv3_->collect_params(out);
            bn3_->collect_params(out);
        }
        if (proj_) {
            proj_->collect_params(out);
            proj_bn_->collect_params(out);
        }
    }

    void collect_buffers(std::vector<std::pair<std::string, Tensor<S>*>>& out) override {
        bn1_->collect_buffers(out);
        bn2_->collect_buffers(out);
        if (bottleneck_) bn3_->collect_buffers(out);
        if (proj_) proj_bn_->collect_buffers(out);
    }

    const char* kind() const override { return "residual"; }
    std::size_t out_channels() const { return out_ch_; }

private:
    bool bottleneck_;
    std::size_t out_ch_;
    std::unique_ptr<Conv2d<S>> conv1_, conv2_, conv3_, proj_;
    std::unique_ptr<BatchNorm<S>> bn1_, bn2_, bn3_, proj_bn_;
    Relu<S> relu1_, relu2_;
    std::vector<std::uint8_t> out_mask_;
};

}  // namespace fpd
