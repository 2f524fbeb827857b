//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "helpers.hpp"

#include <numeric>

namespace winforge {
namespace {

using test::random_layer;
using test::random_linear;
using test::random_network;
using test::random_vector;

// Straight-line summation of per-neuron terms, written independently of net.cpp.
std::vector<double> summation_oracle(const MeanFieldLayer& layer, std::span<const double> z, Activation act) {
    std::vector<double> out(layer.d_out(), 0.0);
    for (std::size_t j = 0; j < layer.width(); ++j) {
        const auto n = layer.neuron(j);
        double s = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) s += n.theta0[i] * z[i];
        const double a = act == Activation::Tanh ? std::tanh(s) : 1.0 / (1.0 + std::exp(-s));
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += n.theta1[k] * a;
    }
    for (auto& v : out) v /= static_cast<double>(layer.width());
    return out;
}

TEST(Activation, ValuesAndDerivativesAreBounded) {
    for (auto act : {Activation::Tanh, Activation::Sigmoid})
        for (double s = -20.0; s <= 20.0; s += 0.01) {
            EXPECT_LE(std::abs(activate(act, s)), 1.0);
            EXPECT_LE(std::abs(activate_d1(act, s)), 1.0);
            EXPECT_LE(std::abs(activate_d2(act, s)), 1.0);
            EXPECT_NEAR(activate_d1_from_value(act, activate(act, s)), activate_d1(act, s), 1e-15);
        }
}

TEST(Activation, SecondDerivativeMatchesDifferenceOfFirst) {
    for (auto act : {Activation::Tanh, Activation::Sigmoid})
        for (double s : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
            const double h = 1e-5;
            const double fd = (activate_d1(act, s + h) - activate_d1(act, s - h)) / (2 * h);
            EXPECT_NEAR(activate_d2(act, s), fd, 1e-9);
        }
}

TEST(Activation, NamesRoundTrip) {
    EXPECT_EQ(parse_activation("tanh"), Activation::Tanh);
    EXPECT_EQ(parse_activation(to_string(Activation::Sigmoid)), Activation::Sigmoid);
    EXPECT_WF_ERROR(parse_activation("relu"), ErrorKind::InvalidConfig);
}

TEST(LayerForward, ZeroPreactivationGivesZero) {
    const MeanFieldLayer layer(1, 1, {0.0}, {5.0});
    const double z[] = {3.0};
    EXPECT_EQ(layer_forward(layer, z, Activation::Tanh), std::vector<double>{0.0});
}

TEST(LayerForward, OddSymmetryCancels) {
    const MeanFieldLayer layer(1, 1, {1.0, -1.0}, {1.0, 1.0});
    for (double x : {-2.0, -0.5, 0.0, 0.25, 4.0}) {
        const double z[] = {x};
        EXPECT_EQ(layer_forward(layer, z, Activation::Tanh)[0], 0.0);
    }
}

TEST(LayerForward, MatchesSummationOracle) {
    Rng rng(11);
    const auto layer = random_layer(rng, 2, 2, 3);
    const double z[] = {0.3, -0.7};
    for (auto act : {Activation::Tanh, Activation::Sigmoid}) {
        const auto got = layer_forward(layer, z, act);
        const auto want = summation_oracle(layer, z, act);
        for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(got[k], want[k], 1e-15);
    }
}

TEST(LayerForward, RejectsBadInput) {
    Rng rng(1);
    const auto layer = random_layer(rng, 3, 2, 4);
    const double short_z[] = {1.0, 2.0};
    EXPECT_WF_ERROR(layer_forward(layer, short_z, Activation::Tanh), ErrorKind::DimensionMismatch);
    const double nan_z[] = {1.0, std::nan(""), 0.0};
    EXPECT_WF_ERROR(layer_forward(layer, nan_z, Activation::Tanh), ErrorKind::NonFinite);
}

TEST(LayerForward, PermutingNeuronsChangesOnlyRoundoff) {
    Rng rng(5);
    const auto layer = random_layer(rng, 4, 3, 17);
    std::vector<NeuronParams> neurons;
    for (std::size_t j = layer.width(); j-- > 0;) neurons.push_back(layer.neuron(j));
    const auto reversed = MeanFieldLayer::from_neurons(neurons);
    const auto z = random_vector(rng, 4);
    const auto a = layer_forward(layer, z, Activation::Tanh);
    const auto b = layer_forward(reversed, z, Activation::Tanh);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(std::abs(a[k] - b[k]), 1e-12 * std::max(1.0, std::abs(a[k])));
    EXPECT_EQ(layer_forward(layer, z, Activation::Tanh), a);
}

TEST(LayerBackward, ZeroInputForcesZeroWeightGradients) {
    Rng rng(2);
    const auto layer = random_layer(rng, 3, 2, 5);
    const double z[] = {0.0, 0.0, 0.0};
    const double up[] = {0.4, -1.1};
    const auto g = layer_backward(layer, z, up, Activation::Tanh);
    for (double v : g.theta0) EXPECT_EQ(v, 0.0);
    for (double v : g.theta1) EXPECT_EQ(v, 0.0);
}

TEST(LayerBackward, HandEvaluatedSigmoid) {
    const MeanFieldLayer layer(1, 1, {0.0}, {1.0});
    const double z[] = {1.0};
    const double up[] = {1.0};
    const auto g = layer_backward(layer, z, up, Activation::Sigmoid);
    EXPECT_DOUBLE_EQ(g.theta1[0], 0.5);
    EXPECT_DOUBLE_EQ(g.theta0[0], 0.25);
    EXPECT_DOUBLE_EQ(g.z[0], 0.0);
}

TEST(LayerBackward, MatchesFiniteDifferences) {
    Rng rng(3);
    for (auto act : {Activation::Tanh, Activation::Sigmoid}) {
        const Network net(act, {random_layer(rng, 5, 3, 7)});
        const auto x = random_vector(rng, 5);
        const auto w = random_vector(rng, 3);
        EXPECT_LT(test::gradient_fd_error(net, x, w), 1e-6);
    }
}

TEST(LayerBackward, InputGradientMatchesFiniteDifferences) {
    Rng rng(4);
    const auto layer = random_layer(rng, 4, 2, 6);
    auto z = random_vector(rng, 4);
    const auto up = random_vector(rng, 2);
    const auto g = layer_backward(layer, z, up, Activation::Tanh);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double keep = z[i], h = 1e-5;
        z[i] = keep + h;
        const auto a = layer_forward(layer, z, Activation::Tanh);
        z[i] = keep - h;
        const auto b = layer_forward(layer, z, Activation::Tanh);
        z[i] = keep;
        const double fd = (std::inner_product(a.begin(), a.end(), up.begin(), 0.0) -
                           std::inner_product(b.begin(), b.end(), up.begin(), 0.0)) /
                          (2 * h);
        EXPECT_NEAR(g.z[i], fd, 1e-9);
    }
}

TEST(Linear, ForwardExamples) {
    const double z3[] = {1, 2, 3};
    EXPECT_EQ(linear_forward(LinearMap::identity(3), z3), (std::vector<double>{1, 2, 3}));
    const double z2[] = {1, 1};
    EXPECT_EQ(linear_forward(LinearMap(2, 2, {2, 0, 0, 3}), z2), (std::vector<double>{2, 3}));
}

TEST(Linear, ForwardMatchesDotProductOracle) {
    Rng rng(6);
    const auto lin = random_linear(rng, 4, 3);
    const auto z = random_vector(rng, 3);
    const auto y = linear_forward(lin, z);
    for (std::size_t r = 0; r < 4; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) s += lin.data()[r * 3 + c] * z[c];
        EXPECT_NEAR(y[r], s, 1e-15);
    }
}

TEST(Linear, BackwardExamples) {
    Rng rng(7);
    const auto lin = random_linear(rng, 3, 2);
    const double z[] = {0.5, -0.25};
    const double zero[] = {0, 0, 0};
    const auto g0 = linear_backward(lin, z, zero);
    for (double v : g0.a) EXPECT_EQ(v, 0.0);
    for (double v : g0.z) EXPECT_EQ(v, 0.0);
    const double up[] = {0.3, -0.8};
    EXPECT_EQ(linear_backward(LinearMap::identity(2), z, up).z, (std::vector<double>{0.3, -0.8}));
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
    Rng rng(8);
    const Network net(Activation::Tanh, {random_linear(rng, 3, 4)});
    const auto x = random_vector(rng, 4);
    const auto w = random_vector(rng, 3);
    EXPECT_LT(test::gradient_fd_error(net, x, w, 1e-5), 1e-8);
}

TEST(Linear, RejectsBadShapes) {
    EXPECT_WF_ERROR(LinearMap(2, 2, {1.0, 2.0, 3.0}), ErrorKind::MalformedArray);
    const double z[] = {1.0};
    EXPECT_WF_ERROR(linear_forward(LinearMap::identity(2), z), ErrorKind::DimensionMismatch);
}

TEST(Network, IdentityLinearIsIdentity) {
    const Network net(Activation::Tanh, {LinearMap::identity(3)});
    const double x[] = {0.1, -0.2, 0.3};
    EXPECT_EQ(network_forward(net, x).y, (std::vector<double>{0.1, -0.2, 0.3}));
}

TEST(Network, ZeroOutputWeightsGiveZero) {
    Rng rng(9);
    auto net = random_network(rng, 4, 3, 5, Activation::Sigmoid);
    for (std::size_t b = 0; b < net.size(); ++b)
        for (double& v : std::get<MeanFieldLayer>(net.block(b)).theta1_flat()) v = 0.0;
    const auto x = random_vector(rng, 4);
    EXPECT_EQ(network_eval(net, x), std::vector<double>{0.0});
}

TEST(Network, ForwardIsCompositionOfUnitOps) {
    Rng rng(10);
    const auto l1 = random_layer(rng, 3, 5, 4);
    const auto lin = random_linear(rng, 2, 5);
    const auto l2 = random_layer(rng, 2, 1, 6);
    const Network net(Activation::Tanh, {l1, lin, l2});
    const auto x = random_vector(rng, 3);
    const auto manual =
        layer_forward(l2, linear_forward(lin, layer_forward(l1, x, Activation::Tanh)), Activation::Tanh);
    EXPECT_EQ(network_forward(net, x).y, manual);
}

TEST(Network, CacheReplayReproducesOutput) {
    Rng rng(12);
    const auto net = random_network(rng, 4, 3, 6, Activation::Tanh);
    const auto x = random_vector(rng, 4);
    const auto fwd = network_forward(net, x);
    ASSERT_EQ(fwd.cache.size(), net.size());
    for (std::size_t b = 0; b + 1 < net.size(); ++b)
        EXPECT_EQ(eval_range(net, b, b + 1, fwd.cache.inputs[b]), fwd.cache.inputs[b + 1]);
    EXPECT_EQ(eval_range(net, net.size() - 1, net.size(), fwd.cache.inputs.back()), fwd.y);
}

TEST(Network, BackwardZeroUpstream) {
    Rng rng(13);
    const auto net = random_network(rng, 3, 3, 4, Activation::Tanh);
    const auto x = random_vector(rng, 3);
    const auto fwd = network_forward(net, x);
    const double zero[] = {0.0};
    const auto g = network_backward(net, fwd.cache, zero);
    for (std::size_t b = 0; b < net.size(); ++b)
        for (int part = 0; part < 2; ++part)
            for (double v : test::block_params(g.blocks[b], part)) EXPECT_EQ(v, 0.0);
}

TEST(Network, SingleBlockBackwardEqualsLayerBackward) {
    Rng rng(14);
    const auto layer = random_layer(rng, 3, 1, 5);
    const Network net(Activation::Sigmoid, {layer});
    const auto x = random_vector(rng, 3);
    const double up[] = {0.7};
    const auto g = network_backward(net, network_forward(net, x).cache, up);
    const auto direct = layer_backward(layer, x, up, Activation::Sigmoid);
    const auto& gl = std::get<MeanFieldLayer>(g.blocks[0]);
    EXPECT_EQ(std::vector<double>(gl.theta0_flat().begin(), gl.theta0_flat().end()), direct.theta0);
    EXPECT_EQ(std::vector<double>(gl.theta1_flat().begin(), gl.theta1_flat().end()), direct.theta1);
    EXPECT_EQ(g.input, direct.z);
}

TEST(Network, FourBlockBackwardMatchesFiniteDifferences) {
    Rng rng(15);
    const Network net(Activation::Tanh,
                      {random_layer(rng, 4, 3, 6), random_linear(rng, 5, 3), random_linear(rng, 3, 5),
                       random_layer(rng, 3, 1, 8)});
    const auto x = random_vector(rng, 4);
    const double w[] = {1.0};
    EXPECT_LT(test::gradient_fd_error(net, x, w), 1e-6);
}

TEST(Network, GradientPropertyOverManySeeds) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        Rng rng(derive_seed(99, {s}));
        const auto d = 1 + rng.below(8);
        const auto n = 1 + rng.below(5);
        const auto m = 1 + rng.below(32);
        const auto act = rng.below(2) ? Activation::Tanh : Activation::Sigmoid;
        const auto net = random_network(rng, d, n, m, act);
        const auto x = random_vector(rng, d);
        const double w[] = {1.0};
        EXPECT_LT(test::gradient_fd_error(net, x, w), 1e-6) << "seed " << s;
    }
}

TEST(Network, ChainAndArrayValidation) {
    Rng rng(16);
    EXPECT_WF_ERROR(Network(Activation::Tanh, {random_layer(rng, 3, 2, 2), random_layer(rng, 3, 1, 2)}),
                    ErrorKind::DimensionChain);
    EXPECT_WF_ERROR(MeanFieldLayer(2, 1, {1.0, 2.0, 3.0}, {1.0}), ErrorKind::MalformedArray);
    EXPECT_WF_ERROR(MeanFieldLayer(2, 1, {1.0, 2.0}, {1.0, 2.0}), ErrorKind::MalformedArray);
    EXPECT_WF_ERROR(Network(Activation::Tanh, {}), ErrorKind::InvalidArgument);
}

TEST(Network, NonFiniteParameterIsReportedWithBlock) {
    Rng rng(17);
    auto net = random_network(rng, 3, 3, 4, Activation::Tanh);
    std::get<MeanFieldLayer>(net.block(1)).theta1_flat()[0] = std::numeric_limits<double>::infinity();
    const auto x = random_vector(rng, 3);
    try {
        network_forward(net, x);
        FAIL() << "expected NonFinite";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
        EXPECT_NE(std::string(e.what()).find("block 1"), std::string::npos) << e.what();
    }
}

TEST(Network, IntermediateNormsRespectParameterBound) {
    Rng rng(18);
    const double bound = 0.8;
    for (int trial = 0; trial < 20; ++trial) {
        auto net = random_network(rng, 5, 4, 9, trial % 2 ? Activation::Tanh : Activation::Sigmoid);
        for (std::size_t b = 0; b < net.size(); ++b) {
            auto& l = std::get<MeanFieldLayer>(net.block(b));
            for (std::size_t j = 0; j < l.width(); ++j) {
                project_to_ball(l.theta0(j), bound);
                project_to_ball(l.theta1(j), bound);
            }
        }
        const auto x = random_vector(rng, 5, -0.4, 0.4);
        const auto fwd = network_forward(net, x);
        for (std::size_t b = 1; b < fwd.cache.size(); ++b) {
            double sq = 0.0;
            for (double v : fwd.cache.inputs[b]) sq += v * v;
            EXPECT_LE(std::sqrt(sq), bound + 1e-12);
        }
        EXPECT_LE(std::abs(fwd.y[0]), bound + 1e-12);
    }
}

TEST(Network, RepeatedEvaluationIsBitIdentical) {
    Rng rng(19);
    const auto net = random_network(rng, 6, 4, 11, Activation::Tanh);
    const auto x = random_vector(rng, 6);
    const auto first = network_eval(net, x);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(network_eval(net, x), first);
}

TEST(Network, JvpAndVjpAreAdjoint) {
    Rng rng(20);
    const Network net(Activation::Tanh, {random_layer(rng, 4, 3, 5), random_linear(rng, 6, 3), random_layer(rng, 6, 2, 7)});
    const auto x = random_vector(rng, 4);
    const auto fwd = network_forward(net, x);
    const auto v = random_vector(rng, 4);
    const auto u = random_vector(rng, 2);
    const auto jv = range_jvp(net, fwd.cache, v);
    const auto ju = range_vjp(net, fwd.cache, u);
    EXPECT_NEAR(std::inner_product(jv.begin(), jv.end(), u.begin(), 0.0),
                std::inner_product(ju.begin(), ju.end(), v.begin(), 0.0), 1e-14);
}

} // namespace
} // namespace winforge
