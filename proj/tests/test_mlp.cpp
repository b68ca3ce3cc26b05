#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fairim/mlp.hpp"

using namespace fairim;

namespace {

Mlp make_net(std::vector<std::size_t> sizes, std::vector<Activation> acts,
             std::uint64_t seed) {
    MlpSpec spec;
    spec.layer_sizes = std::move(sizes);
    spec.activations = std::move(acts);
    SplitMix64 rng(seed);
    return init_mlp(spec, rng);
}

// central finite difference of a scalar loss with respect to one parameter
template <typename Loss>
double fd(double& param, Loss loss, double h = 1e-5) {
    const double saved = param;
    param = saved + h;
    const double up = loss();
    param = saved - h;
    const double down = loss();
    param = saved;
    return (up - down) / (2.0 * h);
}

double rel_err(double got, double want) {
    const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
    return std::abs(got - want) / denom;
}

}  // namespace

TEST_CASE("spec validation") {
    MlpSpec spec;
    spec.layer_sizes = {4};
    spec.activations = {};
    CHECK_THROWS_AS(spec.validate(), config_error);
    spec.layer_sizes = {4, 3};
    spec.activations = {Activation::Relu, Activation::Relu};
    CHECK_THROWS_AS(spec.validate(), config_error);
    spec.layer_sizes = {4, 0};
    spec.activations = {Activation::Relu};
    CHECK_THROWS_AS(spec.validate(), config_error);
}

TEST_CASE("activation name round trip") {
    for (Activation a : {Activation::Identity, Activation::Relu, Activation::Sigmoid})
        CHECK(activation_from_name(activation_name(a)) == a);
    CHECK_THROWS_AS(activation_from_name("tanh"), config_error);
}

TEST_CASE("initialization respects the glorot bound") {
    const Mlp net = make_net({10, 6, 3}, {Activation::Relu, Activation::Identity}, 5);
    REQUIRE(net.layer_count() == 2);
    const double limit0 = std::sqrt(6.0 / 16.0);
    CHECK(net.weights[0].cwiseAbs().maxCoeff() <= limit0);
    CHECK(net.biases[0].cwiseAbs().maxCoeff() == 0.0);
    // not all identical (the stream actually fills)
    CHECK(net.weights[0].minCoeff() < net.weights[0].maxCoeff());
}

TEST_CASE("forward computes a known tiny network") {
    // 1-1 identity net with w=2, b=1: y = 2x + 1
    Mlp net = make_net({1, 1}, {Activation::Identity}, 0);
    net.weights[0](0, 0) = 2.0;
    net.biases[0](0) = 1.0;
    Eigen::MatrixXd x(1, 1);
    x << 3.0;
    CHECK(forward(net, x)(0, 0) == Catch::Approx(7.0).margin(1e-12));

    // sigmoid output squashes
    net.spec.activations[0] = Activation::Sigmoid;
    const double y = forward(net, x)(0, 0);
    CHECK(y == Catch::Approx(1.0 / (1.0 + std::exp(-7.0))).margin(1e-12));
}

TEST_CASE("relu zeroes negatives") {
    Mlp net = make_net({2, 2}, {Activation::Relu}, 0);
    net.weights[0] << 1, 0, 0, 1;
    net.biases[0].setZero();
    Eigen::MatrixXd x(1, 2);
    x << -3.0, 4.0;
    const auto y = forward(net, x);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 4.0);
}

TEST_CASE("backward matches the hand gradient on a scalar net") {
    // L = (w*x)^2 with x=3, w=1: dL/dw = 2*w*x*x = 18, dL/dx = 2*w*w*x = 6
    Mlp net = make_net({1, 1}, {Activation::Identity}, 0);
    net.weights[0](0, 0) = 1.0;
    net.biases[0](0) = 0.0;
    Eigen::MatrixXd x(1, 1);
    x << 3.0;
    ForwardCache cache;
    const auto y = forward(net, x, &cache);
    Eigen::MatrixXd dy = 2.0 * y;  // dL/dy for L = y^2
    Gradients grads;
    const auto dx = backward(net, cache, dy, grads);
    CHECK(grads.weights[0](0, 0) == Catch::Approx(18.0).margin(1e-12));
    CHECK(grads.biases[0](0) == Catch::Approx(6.0).margin(1e-12));
    CHECK(dx(0, 0) == Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("backward agrees with finite differences across architectures") {
    struct Arch {
        std::vector<std::size_t> sizes;
        std::vector<Activation> acts;
    };
    const std::vector<Arch> archs = {
        {{3, 4, 2}, {Activation::Relu, Activation::Identity}},
        {{5, 3, 5}, {Activation::Relu, Activation::Sigmoid}},
        {{2, 6, 4, 1}, {Activation::Relu, Activation::Relu, Activation::Identity}},
    };

    for (std::size_t ai = 0; ai < archs.size(); ++ai) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Mlp net = make_net(archs[ai].sizes, archs[ai].acts, 100 * ai + seed);
            SplitMix64 data_rng(777 + seed);
            Eigen::MatrixXd x(4, net.input_dim());
            Eigen::MatrixXd target(4, net.output_dim());
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                for (Eigen::Index j = 0; j < x.cols(); ++j)
                    x(i, j) = data_rng.next_unit() * 2.0 - 1.0;
            for (Eigen::Index i = 0; i < target.rows(); ++i)
                for (Eigen::Index j = 0; j < target.cols(); ++j)
                    target(i, j) = data_rng.next_unit();

            const auto loss = [&] {
                const auto out = forward(net, x);
                return (out - target).squaredNorm() /
                       static_cast<double>(out.rows() * out.cols());
            };

            ForwardCache cache;
            const auto out = forward(net, x, &cache);
            const Eigen::MatrixXd dy =
                2.0 * (out - target) / static_cast<double>(out.rows() * out.cols());
            Gradients grads;
            backward(net, cache, dy, grads);

            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                // probe a few entries per layer rather than every parameter
                const auto rows = net.weights[l].rows();
                const auto cols = net.weights[l].cols();
                for (Eigen::Index idx = 0; idx < std::min<Eigen::Index>(rows * cols, 6);
                     ++idx) {
                    const Eigen::Index r = idx % rows;
                    const Eigen::Index c = (idx * 7) % cols;
                    const double numeric = fd(net.weights[l](r, c), loss);
                    CHECK(rel_err(grads.weights[l](r, c), numeric) < 1e-4);
                }
                const double numeric_b = fd(net.biases[l](0), loss);
                CHECK(rel_err(grads.biases[l](0), numeric_b) < 1e-4);
            }
        }
    }
}

TEST_CASE("logit backward fuses sigmoid cross entropy") {
    // network outputs logits (identity head); loss is BCE applied to
    // sigmoid(logit); gradient wrt logit is sigmoid(z) - t
    Mlp net = make_net({2, 3, 2}, {Activation::Relu, Activation::Identity}, 9);
    Eigen::MatrixXd x(3, 2);
    x << 0.2, -0.4, 0.9, 0.1, -0.5, 0.7;
    Eigen::MatrixXd t(3, 2);
    t << 1, 0, 0, 1, 1, 1;

    const auto loss = [&] {
        const auto z = forward(net, x);
        // softplus(z) - t*z, averaged
        double sum = 0.0;
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            for (Eigen::Index j = 0; j < z.cols(); ++j) {
                const double v = z(i, j);
                const double softplus =
                    v > 30.0 ? v : std::log1p(std::exp(v));
                sum += softplus - t(i, j) * v;
            }
        return sum / static_cast<double>(z.rows() * z.cols());
    };

    ForwardCache cache;
    const auto z = forward(net, x, &cache);
    Eigen::MatrixXd dlogit(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j)
            dlogit(i, j) = (1.0 / (1.0 + std::exp(-z(i, j))) - t(i, j)) /
                           static_cast<double>(z.rows() * z.cols());
    Gradients grads;
    backward_from_logits(net, cache, dlogit, grads);

    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double numeric = fd(net.weights[l](0, 0), loss);
        CHECK(rel_err(grads.weights[l](0, 0), numeric) < 1e-4);
    }
}

TEST_CASE("input gradient matches finite differences") {
    Mlp net = make_net({3, 5, 2}, {Activation::Relu, Activation::Sigmoid}, 13);
    Eigen::MatrixXd x(2, 3);
    x << 0.3, -0.2, 0.8, -0.6, 0.1, 0.4;
    const auto loss = [&] { return forward(net, x).squaredNorm(); };

    ForwardCache cache;
    const auto out = forward(net, x, &cache);
    Gradients grads;
    const auto dx = backward(net, cache, 2.0 * out, grads);

    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double numeric = fd(x(i, j), loss);
            CHECK(rel_err(dx(i, j), numeric) < 1e-4);
        }
}

TEST_CASE("adam descends a quadratic") {
    // minimize (w - 5)^2 over the single weight of a 1-1 net
    Mlp net = make_net({1, 1}, {Activation::Identity}, 0);
    net.weights[0](0, 0) = 0.0;
    AdamState state = AdamState::zeros_like(net);
    AdamParams params;
    params.learning_rate = 0.1;
    for (int step = 0; step < 500; ++step) {
        Gradients g = Gradients::zeros_like(net);
        g.weights[0](0, 0) = 2.0 * (net.weights[0](0, 0) - 5.0);
        adam_step(net, state, g, params);
    }
    CHECK(net.weights[0](0, 0) == Catch::Approx(5.0).margin(0.05));
    CHECK(state.t == 500);
}

TEST_CASE("adam first step moves by the learning rate") {
    // with bias correction the first update is lr * sign(grad)
    Mlp net = make_net({1, 1}, {Activation::Identity}, 0);
    net.weights[0](0, 0) = 1.0;
    AdamState state = AdamState::zeros_like(net);
    AdamParams params;
    params.learning_rate = 0.01;
    Gradients g = Gradients::zeros_like(net);
    g.weights[0](0, 0) = 3.7;
    adam_step(net, state, g, params);
    CHECK(net.weights[0](0, 0) == Catch::Approx(1.0 - 0.01).epsilon(1e-6));
}

TEST_CASE("weight clipping bounds every parameter") {
    Mlp net = make_net({4, 4}, {Activation::Identity}, 3);
    net.weights[0] *= 100.0;
    net.biases[0].setConstant(9.0);
    clip_weights(net, 0.05);
    CHECK(max_abs_weight(net) <= 0.05 + 1e-15);
}

TEST_CASE("non-finite detection") {
    Mlp net = make_net({2, 2}, {Activation::Identity}, 1);
    CHECK_FALSE(has_non_finite(net));
    net.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK(has_non_finite(net));
}

TEST_CASE("forward validates input width") {
    const Mlp net = make_net({3, 2}, {Activation::Identity}, 0);
    Eigen::MatrixXd bad(1, 4);
    bad.setZero();
    CHECK_THROWS_AS(forward(net, bad), config_error);
}
