#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "roadhawk/activations.hpp"

using namespace roadhawk;

// Extended-precision reference for mish.
static long double mish_oracle(long double x) {
    return x * tanhl(log1pl(expl(x)));
}

TEST_CASE("mish fixed values", "[engine]") {
    CHECK(mish(0.0) == 0.0);
    CHECK(std::fabs(mish(10.0) - 10.0) < 1e-3);

    // Global minimum sits near x = -1.1924 at about -0.3088.
    const double xmin = -1.1924;
    CHECK(std::fabs(mish(xmin) - (-0.3088)) < 1e-4);
    CHECK(std::fabs(mish(xmin) - static_cast<double>(mish_oracle(xmin))) < 1e-12);
}

TEST_CASE("mish matches high-precision oracle over a range", "[engine]") {
    for (double x = -25.0; x <= 25.0; x += 0.0625) {
        const double ref = static_cast<double>(mish_oracle(static_cast<long double>(x)));
        CHECK(std::fabs(mish(x) - ref) < 1e-12);
    }
}

TEST_CASE("mish asymptotics and lower bound", "[engine]") {
    CHECK(std::fabs(mish(20.0) - 20.0) < 1e-6);
    CHECK(std::fabs(mish(-20.0)) < 1e-6);
    for (double x = -60.0; x <= 60.0; x += 0.01) CHECK(mish(x) >= -0.31);
    // Large magnitudes stay finite.
    CHECK(std::isfinite(mish(1e8)));
    CHECK(std::isfinite(mish(-1e8)));
}

TEST_CASE("leaky relu fixed values", "[engine]") {
    CHECK(leaky(-1.0) == -0.1);
    CHECK(leaky(2.0) == 2.0);
    CHECK(leaky(0.0) == 0.0);
}

TEST_CASE("linear activation is the identity on any tensor", "[engine]") {
    Rng rng(3);
    Tensor t = testutil::random_tensor({2, 7, 5}, rng, -10, 10);
    Tensor out = activate(t, Activation::linear);
    for (int64_t i = 0; i < t.numel(); ++i) CHECK(out[i] == t[i]);
}

TEST_CASE("mish derivative at zero equals tanh(ln 2)", "[engine]") {
    const double expected = std::tanh(std::log(2.0));  // = 0.6 exactly
    CHECK(std::fabs(activate_derivative(0.0, Activation::mish) - expected) < 1e-15);
    CHECK(std::fabs(expected - 0.6) < 1e-15);

    double x = 0.0;
    auto f = [&] { return mish(x); };
    const double numeric = testutil::central_diff(f, &x);
    CHECK(std::fabs(activate_derivative(0.0, Activation::mish) - numeric) < 1e-6);
}

TEST_CASE("activation derivatives match central differences", "[engine]") {
    Rng rng(17);
    for (Activation a : {Activation::linear, Activation::leaky, Activation::mish}) {
        for (int i = 0; i < 200; ++i) {
            double x = rng.uniform(-6.0, 6.0);
            if (a == Activation::leaky && std::fabs(x) < 1e-3) continue;  // kink
            auto f = [&] { return activate_value(x, a); };
            const double numeric = testutil::central_diff(f, &x);
            CHECK(testutil::rel_err(activate_derivative(x, a), numeric) < 1e-6);
        }
    }
}
