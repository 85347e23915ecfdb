#include <catch2/catch_amalgamated.hpp>
#include <limits>

#include "helpers.hpp"
#include "roadhawk/nn.hpp"

using namespace roadhawk;

namespace {

// Independent nested-loop reference for cross-correlation.
Tensor conv_oracle(const Tensor& in, const Tensor& w, const Tensor& b, int stride, int pad) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int F = w.dim(0), k = w.dim(2);
    const int Ho = (H + 2 * pad - k) / stride + 1;
    const int Wo = (W + 2 * pad - k) / stride + 1;
    Tensor out({F, Ho, Wo});
    for (int f = 0; f < F; ++f)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                double acc = b[f];
                for (int c = 0; c < C; ++c)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride - pad + ky;
                            const int ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            acc += in.at3(c, iy, ix) *
                                   w[((static_cast<int64_t>(f) * C + c) * k + ky) * k + kx];
                        }
                out.at3(f, oy, ox) = acc;
            }
    return out;
}

// Independent nested-loop reference for max pooling (unpadded form).
Tensor pool_oracle(const Tensor& in, int size, int stride) {
    const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
    const int Ho = (H - size) / stride + 1;
    const int Wo = (W - size) / stride + 1;
    Tensor out({C, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                for (int ky = 0; ky < size; ++ky)
                    for (int kx = 0; kx < size; ++kx)
                        best = std::max(best, in.at3(c, oy * stride + ky, ox * stride + kx));
                out.at3(c, oy, ox) = best;
            }
    return out;
}

}  // namespace

TEST_CASE("conv2d all-ones 3x3 sums to 9", "[engine]") {
    Tensor in({1, 3, 3}, 1.0);
    Tensor w({1, 1, 3, 3}, 1.0);
    Tensor b({1});
    Tensor out = conv2d(in, w, b, 1, 0);
    REQUIRE(out.shape() == std::vector<int>{1, 1, 1});
    CHECK(out[0] == 9.0);
}

TEST_CASE("conv2d zero filter yields the bias everywhere", "[engine]") {
    Rng rng(5);
    Tensor in = testutil::random_tensor({2, 6, 7}, rng);
    Tensor w({3, 2, 3, 3}, 0.0);
    Tensor b({3});
    b[0] = 0.25;
    b[1] = -1.5;
    b[2] = 4.0;
    Tensor out = conv2d(in, w, b, 1, 1);
    for (int f = 0; f < 3; ++f)
        for (int y = 0; y < out.dim(1); ++y)
            for (int x = 0; x < out.dim(2); ++x) CHECK(out.at3(f, y, x) == b[f]);
}

TEST_CASE("conv2d strided padded case matches the oracle exactly", "[engine]") {
    Rng rng(7);
    Tensor in = testutil::random_tensor({1, 5, 5}, rng);
    Tensor w = testutil::random_tensor({2, 1, 3, 3}, rng);
    Tensor b = testutil::random_tensor({2}, rng);
    Tensor got = conv2d(in, w, b, 2, 1);
    Tensor want = conv_oracle(in, w, b, 2, 1);
    REQUIRE(got.shape() == want.shape());
    for (int64_t i = 0; i < got.numel(); ++i) CHECK(got[i] == want[i]);
}

TEST_CASE("conv2d matches the oracle on 1000 random shapes", "[engine][oracle]") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = rng.uniform_int(1, 3);
        const int pad = rng.uniform_int(0, 1);
        const int H = rng.uniform_int(std::max(1, k - 2 * pad), 8);
        const int W = rng.uniform_int(std::max(1, k - 2 * pad), 8);
        if (k > H + 2 * pad || k > W + 2 * pad) continue;
        const int C = rng.uniform_int(1, 3);
        const int F = rng.uniform_int(1, 3);
        const int stride = rng.uniform_int(1, 2);
        Tensor in = testutil::random_tensor({C, H, W}, rng);
        Tensor w = testutil::random_tensor({F, C, k, k}, rng);
        Tensor b = testutil::random_tensor({F}, rng);
        Tensor got = conv2d(in, w, b, stride, pad);
        Tensor want = conv_oracle(in, w, b, stride, pad);
        REQUIRE(got.shape() == want.shape());
        for (int64_t i = 0; i < got.numel(); ++i) REQUIRE(got[i] == want[i]);
        REQUIRE(got.all_finite());
    }
}

TEST_CASE("conv2d rejects channel mismatches and bad geometry", "[engine]") {
    Tensor in({2, 4, 4});
    Tensor w({1, 3, 3, 3});
    Tensor b({1});
    CHECK_THROWS_AS(conv2d(in, w, b, 1, 0), ConfigError);

    Tensor w2({1, 2, 5, 5});
    CHECK_THROWS_AS(conv2d(in, w2, b, 1, 0), ConfigError);  // kernel larger than input
    Tensor w3({1, 2, 3, 3});
    CHECK_THROWS_AS(conv2d(in, w3, b, 0, 0), ConfigError);  // bad stride
}

TEST_CASE("maxpool2d 2x2 example", "[engine]") {
    Tensor in({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    Tensor out = maxpool2d(in, 2, 2);
    REQUIRE(out.shape() == std::vector<int>{1, 1, 1});
    CHECK(out[0] == 4.0);
}

TEST_CASE("maxpool2d of a constant input is constant", "[engine]") {
    Tensor in({2, 6, 6}, 3.25);
    Tensor out = maxpool2d(in, 2, 2);
    for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 3.25);
}

TEST_CASE("maxpool2d matches the oracle on random inputs", "[engine][oracle]") {
    Rng rng(123);
    Tensor in = testutil::random_tensor({3, 8, 8}, rng);
    Tensor got = maxpool2d(in, 2, 2);
    Tensor want = pool_oracle(in, 2, 2);
    REQUIRE(got.shape() == want.shape());
    for (int64_t i = 0; i < got.numel(); ++i) CHECK(got[i] == want[i]);

    for (int trial = 0; trial < 1000; ++trial) {
        const int size = rng.uniform_int(1, 3);
        const int H = rng.uniform_int(size, 9);
        const int W = rng.uniform_int(size, 9);
        const int C = rng.uniform_int(1, 3);
        const int stride = rng.uniform_int(1, 3);
        Tensor t = testutil::random_tensor({C, H, W}, rng);
        Tensor g = maxpool2d(t, size, stride);
        Tensor o = pool_oracle(t, size, stride);
        REQUIRE(g.shape() == o.shape());
        for (int64_t i = 0; i < g.numel(); ++i) REQUIRE(g[i] == o[i]);
    }
}

TEST_CASE("maxpool2d stride-1 padded form preserves size", "[engine]") {
    Rng rng(31);
    Tensor in = testutil::random_tensor({2, 5, 5}, rng);
    Tensor out = maxpool2d(in, 2, 1, 1);
    CHECK(out.shape() == in.shape());
    // Interior outputs are the max of the 2x2 window anchored at the pixel.
    CHECK(out.at3(0, 0, 0) ==
          std::max({in.at3(0, 0, 0), in.at3(0, 0, 1), in.at3(0, 1, 0), in.at3(0, 1, 1)}));
    // Bottom-right corner only sees itself (rest is padding).
    CHECK(out.at3(0, 4, 4) == in.at3(0, 4, 4));
}

TEST_CASE("maxpool2d rejects oversized windows", "[engine]") {
    Tensor in({1, 3, 3});
    CHECK_THROWS_AS(maxpool2d(in, 4, 1), ConfigError);
}
