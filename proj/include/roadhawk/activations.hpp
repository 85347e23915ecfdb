#pragma once

#include <cmath>

#include "roadhawk/tensor.hpp"

namespace roadhawk {

enum class Activation { linear, leaky, mish };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::leaky: return "leaky";
        case Activation::mish: return "mish";
    }
    return "linear";
}

// Slope of the negative branch of leaky ReLU.
inline constexpr double kLeakySlope = 0.1;

// softplus with overflow guards; exact to double precision inside |x| <= 30.
inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double logistic(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

inline double mish(double x) {
    return x * std::tanh(softplus(x));
}

inline double leaky(double x) {
    return x >= 0.0 ? x : kLeakySlope * x;
}

inline double activate_value(double x, Activation a) {
    switch (a) {
        case Activation::linear: return x;
        case Activation::leaky: return leaky(x);
        case Activation::mish: return mish(x);
    }
    return x;
}

// d/dx of the activation, evaluated at pre-activation x.
inline double activate_derivative(double x, Activation a) {
    switch (a) {
        case Activation::linear:
            return 1.0;
        case Activation::leaky:
            return x >= 0.0 ? 1.0 : kLeakySlope;
        case Activation::mish: {
            double sp = softplus(x);
            double t = std::tanh(sp);
            return t + x * (1.0 - t * t) * logistic(x);
        }
    }
    return 1.0;
}

inline Tensor activate(const Tensor& x, Activation a) {
    Tensor out = x;
    double* p = out.data();
    for (int64_t i = 0; i < out.numel(); ++i) p[i] = activate_value(p[i], a);
    return out;
}

}  // namespace roadhawk
