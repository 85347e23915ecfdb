#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "roadhawk/activations.hpp"
#include "roadhawk/common.hpp"
#include "roadhawk/rng.hpp"
#include "roadhawk/tensor.hpp"

namespace roadhawk {

// ---------------------------------------------------------------------------
// Trainable parameter: value, gradient and momentum buffer share one shape.

struct Param {
    Tensor value;
    Tensor grad;
    Tensor momentum_buf;

    Param() = default;
    explicit Param(std::vector<int> shape)
        : value(shape), grad(shape), momentum_buf(std::move(shape)) {}
};

struct TrainConfig {
    double learning_rate = 0.001;
    double momentum = 0.9;
    double decay = 0.0005;
    int batch_size = 64;
    int subdivisions = 4;
    int iterations = 10000;
    int input_size = 416;
    int channels = 3;

    void validate() const {
        if (learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
        if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must be in [0,1)");
        if (decay < 0) throw ConfigError("decay must be >= 0");
        if (batch_size <= 0 || subdivisions <= 0)
            throw ConfigError("batch_size and subdivisions must be positive");
        if (batch_size % subdivisions != 0)
            throw ConfigError("batch_size must be divisible by subdivisions");
        if (iterations <= 0) throw ConfigError("iterations must be positive");
        if (input_size <= 0 || channels <= 0)
            throw ConfigError("input_size and channels must be positive");
    }
};

// SGD with momentum; decay enters as L2 weight decay inside the update:
//   buf <- momentum*buf - lr*(grad + decay*value);  value <- value + buf
inline void sgd_step(const std::vector<Param*>& params, const TrainConfig& cfg) {
    for (Param* p : params) {
        double* v = p->value.data();
        double* g = p->grad.data();
        double* m = p->momentum_buf.data();
        const int64_t n = p->value.numel();
        for (int64_t i = 0; i < n; ++i) {
            m[i] = cfg.momentum * m[i] - cfg.learning_rate * (g[i] + cfg.decay * v[i]);
            v[i] += m[i];
        }
    }
}

// ---------------------------------------------------------------------------
// Primitive ops. Both are written in canonical nested-loop order so results
// are bit-identical to a straightforward reference implementation.

// Cross-correlation of [C,H,W] input with [F,C,k,k] filters, zero padding.
inline Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     int stride, int pad) {
    if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W]");
    if (weights.rank() != 4) throw ShapeError("conv2d: weights must be [F,C,k,k]");
    const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
    const int F = weights.dim(0), k = weights.dim(2);
    if (weights.dim(1) != C)
        throw ConfigError("conv2d: weight channels do not match input channels");
    if (weights.dim(3) != k) throw ShapeError("conv2d: kernel must be square");
    if (bias.numel() != F) throw ShapeError("conv2d: bias length must equal filter count");
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (pad < 0) throw ConfigError("conv2d: pad must be >= 0");
    if (k > H + 2 * pad || k > W + 2 * pad)
        throw ConfigError("conv2d: kernel larger than padded input");

    const int Ho = (H + 2 * pad - k) / stride + 1;
    const int Wo = (W + 2 * pad - k) / stride + 1;
    Tensor out({F, Ho, Wo});

    const double* in = input.data();
    const double* w = weights.data();
    double* o = out.data();
    for (int f = 0; f < F; ++f) {
        const double bf = bias[f];
        for (int oy = 0; oy < Ho; ++oy) {
            for (int ox = 0; ox < Wo; ++ox) {
                double acc = bf;
                for (int c = 0; c < C; ++c) {
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= H) continue;
                        const double* in_row = in + (static_cast<size_t>(c) * H + iy) * W;
                        const double* w_row = w + ((static_cast<size_t>(f) * C + c) * k + ky) * k;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= W) continue;
                            acc += in_row[ix] * w_row[kx];
                        }
                    }
                }
                o[(static_cast<size_t>(f) * Ho + oy) * Wo + ox] = acc;
            }
        }
    }
    return out;
}

// Max pooling over [C,H,W]. pad is the total number of padded rows/columns
// (floor(pad/2) before, the rest after), padded cells count as -inf; pad=0
// matches the plain H' = floor((H-size)/stride)+1 contract.
inline Tensor maxpool2d(const Tensor& input, int size, int stride, int pad = 0,
                        std::vector<int64_t>* argmax = nullptr) {
    if (input.rank() != 3) throw ShapeError("maxpool2d: input must be [C,H,W]");
    if (size < 1 || stride < 1) throw ConfigError("maxpool2d: size and stride must be >= 1");
    if (pad < 0 || pad >= size) throw ConfigError("maxpool2d: pad must be in [0, size)");
    const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
    if (size > H + pad || size > W + pad)
        throw ConfigError("maxpool2d: window larger than input");

    const int before = pad / 2;
    const int Ho = (H + pad - size) / stride + 1;
    const int Wo = (W + pad - size) / stride + 1;
    Tensor out({C, Ho, Wo});
    if (argmax) argmax->assign(static_cast<size_t>(out.numel()), -1);

    const double* in = input.data();
    double* o = out.data();
    for (int c = 0; c < C; ++c) {
        for (int oy = 0; oy < Ho; ++oy) {
            for (int ox = 0; ox < Wo; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                int64_t best_idx = -1;
                for (int ky = 0; ky < size; ++ky) {
                    const int iy = oy * stride - before + ky;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < size; ++kx) {
                        const int ix = ox * stride - before + kx;
                        if (ix < 0 || ix >= W) continue;
                        const double v = in[(static_cast<size_t>(c) * H + iy) * W + ix];
                        if (v > best) {
                            best = v;
                            best_idx = (static_cast<int64_t>(c) * H + iy) * W + ix;
                        }
                    }
                }
                const size_t oi = (static_cast<size_t>(c) * Ho + oy) * Wo + ox;
                o[oi] = best;
                if (argmax) (*argmax)[oi] = best_idx;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layers. predict() is pure and reentrant; forward() records the tape needed
// by backward(), which accumulates into Param::grad.

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor predict(const Tensor& in) const = 0;
    virtual Tensor forward(const Tensor& in) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<Param*>& out) { (void)out; }
    virtual const char* kind() const = 0;
    virtual bool has_tape() const = 0;
};

class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(int in_channels, int filters, int kernel, int stride, int pad,
                Activation act)
        : weights_({filters, in_channels, kernel, kernel}),
          bias_({filters}),
          stride_(stride), pad_(pad), act_(act) {}

    void init_weights(Rng& rng) {
        const int fan_in = weights_.value.dim(1) * weights_.value.dim(2) * weights_.value.dim(3);
        const double s = std::sqrt(2.0 / fan_in);
        double* w = weights_.value.data();
        for (int64_t i = 0; i < weights_.value.numel(); ++i) w[i] = rng.uniform(-s, s);
        bias_.value.fill(0.0);
    }

    Tensor predict(const Tensor& in) const override {
        Tensor z = conv2d(in, weights_.value, bias_.value, stride_, pad_);
        return activate(z, act_);
    }

    Tensor forward(const Tensor& in) override {
        input_ = in;
        pre_act_ = conv2d(in, weights_.value, bias_.value, stride_, pad_);
        taped_ = true;
        return activate(pre_act_, act_);
    }

    Tensor backward(const Tensor& grad_out) override {
        if (!taped_) throw StateError("conv backward before forward");
        const int C = input_.dim(0), H = input_.dim(1), W = input_.dim(2);
        const int F = weights_.value.dim(0), k = weights_.value.dim(2);
        const int Ho = pre_act_.dim(1), Wo = pre_act_.dim(2);
        if (!grad_out.same_shape(pre_act_)) throw ShapeError("conv backward: bad grad shape");

        Tensor grad_in({C, H, W});
        const double* in = input_.data();
        const double* w = weights_.value.data();
        const double* z = pre_act_.data();
        const double* go = grad_out.data();
        double* dw = weights_.grad.data();
        double* db = bias_.grad.data();
        double* di = grad_in.data();

        for (int f = 0; f < F; ++f) {
            for (int oy = 0; oy < Ho; ++oy) {
                for (int ox = 0; ox < Wo; ++ox) {
                    const size_t oi = (static_cast<size_t>(f) * Ho + oy) * Wo + ox;
                    const double g = go[oi] * activate_derivative(z[oi], act_);
                    if (g == 0.0) continue;
                    db[f] += g;
                    for (int c = 0; c < C; ++c) {
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy * stride_ - pad_ + ky;
                            if (iy < 0 || iy >= H) continue;
                            const size_t in_off = (static_cast<size_t>(c) * H + iy) * W;
                            const size_t w_off = ((static_cast<size_t>(f) * C + c) * k + ky) * k;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox * stride_ - pad_ + kx;
                                if (ix < 0 || ix >= W) continue;
                                dw[w_off + kx] += g * in[in_off + ix];
                                di[in_off + ix] += g * w[w_off + kx];
                            }
                        }
                    }
                }
            }
        }
        taped_ = false;
        return grad_in;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&bias_);
        out.push_back(&weights_);
    }

    const char* kind() const override { return "conv"; }
    bool has_tape() const override { return taped_; }

    Param& weights() { return weights_; }
    Param& bias() { return bias_; }
    Activation activation() const { return act_; }

private:
    Param weights_;
    Param bias_;
    int stride_;
    int pad_;
    Activation act_;
    Tensor input_;
    Tensor pre_act_;
    bool taped_ = false;
};

class MaxPoolLayer final : public Layer {
public:
    MaxPoolLayer(int size, int stride, int pad = 0) : size_(size), stride_(stride), pad_(pad) {}

    Tensor predict(const Tensor& in) const override {
        return maxpool2d(in, size_, stride_, pad_);
    }

    Tensor forward(const Tensor& in) override {
        in_shape_ = in.shape();
        Tensor out = maxpool2d(in, size_, stride_, pad_, &argmax_);
        taped_ = true;
        return out;
    }

    Tensor backward(const Tensor& grad_out) override {
        if (!taped_) throw StateError("maxpool backward before forward");
        if (grad_out.numel() != static_cast<int64_t>(argmax_.size()))
            throw ShapeError("maxpool backward: bad grad shape");
        Tensor grad_in(in_shape_);
        double* di = grad_in.data();
        const double* go = grad_out.data();
        for (size_t i = 0; i < argmax_.size(); ++i)
            if (argmax_[i] >= 0) di[argmax_[i]] += go[i];
        taped_ = false;
        return grad_in;
    }

    const char* kind() const override { return "maxpool"; }
    bool has_tape() const override { return taped_; }

private:
    int size_, stride_, pad_;
    std::vector<int> in_shape_;
    std::vector<int64_t> argmax_;
    bool taped_ = false;
};

// Grid prediction head: 1x1 linear conv down to B*5+C channels, transposed to
// [g,g,B*5+C] with per-entry squashing. Per box slot the entries are
// (x, y, w, h, confidence): x,y and confidence go through a logistic; w,h are
// exp-scaled relative to one grid cell, so t=0 predicts a cell-sized box.
// Class entries get a logistic each.
class DetectHeadLayer final : public Layer {
public:
    // Pre-squash values for w/h are clamped to this magnitude so outputs stay
    // finite for any finite input.
    static constexpr double kExpClamp = 20.0;

    DetectHeadLayer(int in_channels, int boxes_per_cell, int num_classes)
        : conv_(in_channels, boxes_per_cell * 5 + num_classes, 1, 1, 0, Activation::linear),
          boxes_(boxes_per_cell), classes_(num_classes) {}

    void init_weights(Rng& rng) { conv_.init_weights(rng); }

    Tensor predict(const Tensor& in) const override {
        return squash(conv_.predict(in));
    }

    Tensor forward(const Tensor& in) override {
        pre_squash_ = conv_.forward(in);
        taped_ = true;
        return squash(pre_squash_);
    }

    Tensor backward(const Tensor& grad_out) override {
        if (!taped_) throw StateError("detect head backward before forward");
        const int D = pre_squash_.dim(0), gh = pre_squash_.dim(1), gw = pre_squash_.dim(2);
        if (grad_out.rank() != 3 || grad_out.dim(0) != gh || grad_out.dim(1) != gw ||
            grad_out.dim(2) != D)
            throw ShapeError("detect head backward: bad grad shape");

        Tensor grad_z({D, gh, gw});
        for (int gy = 0; gy < gh; ++gy) {
            for (int gx = 0; gx < gw; ++gx) {
                for (int d = 0; d < D; ++d) {
                    const double z = pre_squash_.at3(d, gy, gx);
                    const double g = grad_out[(static_cast<int64_t>(gy) * gw + gx) * D + d];
                    grad_z.at3(d, gy, gx) = g * squash_derivative(z, d, gh);
                }
            }
        }
        taped_ = false;
        return conv_.backward(grad_z);
    }

    void collect_params(std::vector<Param*>& out) override { conv_.collect_params(out); }
    const char* kind() const override { return "detect_head"; }
    bool has_tape() const override { return taped_; }

    int boxes_per_cell() const { return boxes_; }
    int num_classes() const { return classes_; }

private:
    bool is_size_entry(int d) const {
        if (d >= boxes_ * 5) return false;
        const int r = d % 5;
        return r == 2 || r == 3;
    }

    double squash_value(double z, int d, int grid) const {
        if (is_size_entry(d)) {
            const double t = std::clamp(z, -kExpClamp, kExpClamp);
            return std::exp(t) / grid;
        }
        return logistic(z);
    }

    double squash_derivative(double z, int d, int grid) const {
        if (is_size_entry(d)) {
            if (z < -kExpClamp || z > kExpClamp) return 0.0;
            return std::exp(z) / grid;
        }
        const double s = logistic(z);
        return s * (1.0 - s);
    }

    // [D,g,g] -> [g,g,D] with entry-wise squashing.
    Tensor squash(const Tensor& z) const {
        const int D = z.dim(0), gh = z.dim(1), gw = z.dim(2);
        if (D != boxes_ * 5 + classes_)
            throw ShapeError("detect head: channel count does not match B*5+C");
        Tensor out({gh, gw, D});
        for (int gy = 0; gy < gh; ++gy)
            for (int gx = 0; gx < gw; ++gx)
                for (int d = 0; d < D; ++d)
                    out[(static_cast<int64_t>(gy) * gw + gx) * D + d] =
                        squash_value(z.at3(d, gy, gx), d, gh);
        return out;
    }

    Conv2dLayer conv_;
    int boxes_;
    int classes_;
    Tensor pre_squash_;
    bool taped_ = false;
};

// ---------------------------------------------------------------------------
// Sequential network with explicit forward/backward tape.

class Network {
public:
    Network() = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    void set_expected_input(std::vector<int> shape) { expected_input_ = std::move(shape); }
    const std::vector<int>& expected_input() const { return expected_input_; }

    // Pure inference; safe for concurrent callers.
    Tensor predict(const Tensor& image) const {
        check_input(image);
        Tensor x = image;
        for (const auto& l : layers_) x = l->predict(x);
        return x;
    }

    // Training forward; records per-layer tapes for backward().
    Tensor forward(const Tensor& image) {
        check_input(image);
        Tensor x = image;
        for (auto& l : layers_) x = l->forward(x);
        taped_ = true;
        return x;
    }

    // Propagates the upstream gradient and accumulates parameter gradients.
    void backward(const Tensor& grad_out) {
        if (!taped_) throw StateError("backward called before forward");
        Tensor g = grad_out;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        taped_ = false;
    }

    std::vector<Param*> params() {
        std::vector<Param*> out;
        for (auto& l : layers_) l->collect_params(out);
        return out;
    }

    void zero_grads() {
        for (Param* p : params()) p->grad.fill(0.0);
    }

    void scale_grads(double s) {
        for (Param* p : params()) p->grad.scale(s);
    }

    int64_t param_count() {
        int64_t n = 0;
        for (Param* p : params()) n += p->value.numel();
        return n;
    }

    size_t layer_count() const { return layers_.size(); }
    Layer& layer(size_t i) { return *layers_.at(i); }

private:
    void check_input(const Tensor& image) const {
        if (!expected_input_.empty() && image.shape() != expected_input_)
            throw ShapeError("network input shape " + image.shape_str() + " does not match expected");
    }

    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<int> expected_input_;
    bool taped_ = false;
};

}  // namespace roadhawk
