#include <catch2/catch_amalgamated.hpp>
#include <memory>

#include "helpers.hpp"
#include "roadhawk/model_zoo.hpp"
#include "roadhawk/nn.hpp"

using namespace roadhawk;

namespace {

// Scalar probe loss L = sum(out * weights) so dL/dout is a fixed tensor.
double probe_loss(const Tensor& out, const Tensor& probe) {
    double L = 0;
    for (int64_t i = 0; i < out.numel(); ++i) L += out[i] * probe[i];
    return L;
}

}  // namespace

TEST_CASE("linear conv backward passes the upstream gradient through", "[engine]") {
    // 1x1 identity kernel with linear activation is the identity map.
    Conv2dLayer layer(1, 1, 1, 1, 0, Activation::linear);
    layer.weights().value[0] = 1.0;
    Rng rng(2);
    Tensor in = testutil::random_tensor({1, 4, 4}, rng);
    layer.forward(in);
    Tensor up = testutil::random_tensor({1, 4, 4}, rng);
    Tensor down = layer.backward(up);
    for (int64_t i = 0; i < up.numel(); ++i) CHECK(down[i] == up[i]);
}

TEST_CASE("backward before forward raises a state error", "[engine]") {
    Conv2dLayer layer(1, 1, 3, 1, 1, Activation::leaky);
    Tensor g({1, 4, 4});
    CHECK_THROWS_AS(layer.backward(g), StateError);

    Network net;
    net.add(std::make_unique<Conv2dLayer>(1, 1, 3, 1, 1, Activation::leaky));
    CHECK_THROWS_AS(net.backward(g), StateError);
}

TEST_CASE("two-layer toy network gradients match central differences", "[engine][oracle]") {
    Rng rng(42);
    Network net;
    auto c1 = std::make_unique<Conv2dLayer>(1, 2, 3, 1, 1, Activation::mish);
    auto c2 = std::make_unique<Conv2dLayer>(2, 1, 1, 1, 0, Activation::linear);
    c1->init_weights(rng);
    c2->init_weights(rng);
    net.add(std::move(c1));
    net.add(std::make_unique<MaxPoolLayer>(2, 2));
    net.add(std::move(c2));

    Tensor image = testutil::random_tensor({1, 4, 4}, rng);
    Tensor probe = testutil::random_tensor({1, 2, 2}, rng);

    auto loss = [&] { return probe_loss(net.predict(image), probe); };

    net.zero_grads();
    net.forward(image);
    net.backward(probe);

    double worst = 0;
    for (Param* p : net.params()) {
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const double numeric = testutil::central_diff(loss, &p->value[i]);
            worst = std::max(worst, testutil::rel_err(p->grad[i], numeric));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("input gradients match central differences", "[engine][oracle]") {
    Rng rng(44);
    Conv2dLayer layer(2, 3, 3, 2, 1, Activation::mish);
    layer.init_weights(rng);
    Tensor image = testutil::random_tensor({2, 5, 5}, rng);
    Tensor out = layer.forward(image);
    Tensor probe = testutil::random_tensor(out.shape(), rng);

    Tensor grad_in = layer.backward(probe);
    auto loss = [&] { return probe_loss(layer.predict(image), probe); };

    double worst = 0;
    for (int64_t i = 0; i < image.numel(); ++i) {
        const double numeric = testutil::central_diff(loss, &image[i]);
        worst = std::max(worst, testutil::rel_err(grad_in[i], numeric));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("maxpool backward routes gradient to the argmax", "[engine]") {
    Tensor in({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    MaxPoolLayer pool(2, 2);
    pool.forward(in);
    Tensor up({1, 1, 1}, std::vector<double>{5.0});
    Tensor down = pool.backward(up);
    CHECK(down[0] == 0.0);
    CHECK(down[1] == 0.0);
    CHECK(down[2] == 0.0);
    CHECK(down[3] == 5.0);
}

TEST_CASE("detect head gradients match central differences", "[engine][oracle]") {
    Rng rng(7);
    DetectHeadLayer head(4, 2, 3);
    head.init_weights(rng);
    Tensor in = testutil::random_tensor({4, 2, 2}, rng);
    Tensor out = head.forward(in);
    REQUIRE(out.shape() == std::vector<int>{2, 2, 13});
    Tensor probe = testutil::random_tensor(out.shape(), rng);

    Tensor grad_in = head.backward(probe);
    auto loss = [&] { return probe_loss(head.predict(in), probe); };

    double worst = 0;
    for (int64_t i = 0; i < in.numel(); ++i)
        worst = std::max(worst, testutil::rel_err(grad_in[i], testutil::central_diff(loss, &in[i])));
    std::vector<Param*> params;
    head.collect_params(params);
    for (Param* p : params)
        for (int64_t i = 0; i < p->value.numel(); ++i)
            worst = std::max(worst,
                             testutil::rel_err(p->grad[i], testutil::central_diff(loss, &p->value[i])));
    CHECK(worst < 1e-4);
}

TEST_CASE("engine ops keep values finite on finite inputs", "[engine]") {
    Rng rng(71);
    Network net = build_network(Variant::Improved, 3, 2, 32, 7, 2);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor image = testutil::random_tensor({3, 32, 32}, rng, -50, 50);
        Tensor out = net.forward(image);
        REQUIRE(out.all_finite());
        Tensor up = testutil::random_tensor(out.shape(), rng, -10, 10);
        net.zero_grads();
        net.backward(up);
        for (Param* p : net.params()) REQUIRE(p->grad.all_finite());
    }
}

TEST_CASE("gradients accumulate across backward calls", "[engine]") {
    Rng rng(3);
    Conv2dLayer layer(1, 1, 3, 1, 1, Activation::leaky);
    layer.init_weights(rng);
    Tensor in = testutil::random_tensor({1, 4, 4}, rng);
    Tensor probe = testutil::random_tensor({1, 4, 4}, rng);

    layer.forward(in);
    layer.backward(probe);
    const double once = layer.weights().grad[0];
    layer.forward(in);
    layer.backward(probe);
    CHECK(layer.weights().grad[0] == Catch::Approx(2 * once).epsilon(1e-12));
}
