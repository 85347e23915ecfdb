#pragma once

#include <cmath>
#include <functional>

#include "roadhawk/rng.hpp"
#include "roadhawk/tensor.hpp"

namespace testutil {

inline roadhawk::Tensor random_tensor(std::vector<int> shape, roadhawk::Rng& rng,
                                      double lo = -1.0, double hi = 1.0) {
    roadhawk::Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Relative error with a floor so near-zero gradient pairs compare on an
// absolute scale instead of amplifying roundoff.
inline double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max(std::fabs(a) + std::fabs(b), 1e-6);
}

// Central finite difference of f with respect to *theta.
inline double central_diff(const std::function<double()>& f, double* theta, double h = 1e-4) {
    const double orig = *theta;
    *theta = orig + h;
    const double up = f();
    *theta = orig - h;
    const double down = f();
    *theta = orig;
    return (up - down) / (2.0 * h);
}

}  // namespace testutil
