//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "helpers.hpp"

#include "winforge/merge.hpp"
#include "winforge/win.hpp"

namespace winforge {
namespace {

using test::random_layer;
using test::random_linear;
using test::random_network;
using test::random_vector;

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + 1e-15; }

std::vector<double> naive_matmul(const LinearMap& left, const LinearMap& right) {
    std::vector<double> out(left.rows() * right.cols(), 0.0);
    for (std::size_t i = 0; i < left.rows(); ++i)
        for (std::size_t j = 0; j < right.cols(); ++j)
            for (std::size_t k = 0; k < left.cols(); ++k) out[i * right.cols() + j] += left.at(i, k) * right.at(k, j);
    return out;
}

Network noisy_pairs(const Network& thin, std::size_t wide, double noise, std::uint64_t seed) {
    return insert_linear_pairs(thin, wide, {true, Distribution::uniform(-noise, noise)}, seed);
}

TEST(FuseLinear, Examples) {
    EXPECT_EQ(fuse_linear(LinearMap::identity(3), LinearMap::identity(3)), LinearMap::identity(3));
    EXPECT_EQ(fuse_linear(LinearMap(1, 1, {2.0}), LinearMap(1, 1, {3.0})), LinearMap(1, 1, {6.0}));
}

TEST(FuseLinear, MatchesTripleLoopOracle) {
    Rng rng(1);
    const auto first = random_linear(rng, 3, 2);
    const auto second = random_linear(rng, 2, 3);
    const auto fused = fuse_linear(first, second);
    ASSERT_EQ(fused.rows(), 2u);
    ASSERT_EQ(fused.cols(), 2u);
    const auto want = naive_matmul(second, first);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(fused.data()[i], want[i], 1e-15);
}

TEST(FuseLinear, RejectsMismatch) {
    Rng rng(2);
    EXPECT_WF_ERROR(fuse_linear(random_linear(rng, 3, 2), random_linear(rng, 2, 2)), ErrorKind::DimensionMismatch);
}

TEST(AbsorbPre, IdentityAndScaling) {
    Rng rng(3);
    const auto layer = random_layer(rng, 3, 2, 4);
    EXPECT_EQ(absorb_pre(LinearMap::identity(3), layer), layer);
    const auto doubled = absorb_pre(LinearMap(3, 3, {2, 0, 0, 0, 2, 0, 0, 0, 2}), layer);
    for (std::size_t i = 0; i < layer.theta0_flat().size(); ++i)
        EXPECT_EQ(doubled.theta0_flat()[i], 2.0 * layer.theta0_flat()[i]);
    EXPECT_EQ(std::vector<double>(doubled.theta1_flat().begin(), doubled.theta1_flat().end()),
              std::vector<double>(layer.theta1_flat().begin(), layer.theta1_flat().end()));
}

TEST(AbsorbPre, EquivalentOnRandomInputs) {
    Rng rng(4);
    const auto lin = random_linear(rng, 5, 3);
    const auto layer = random_layer(rng, 5, 2, 7);
    const auto merged = absorb_pre(lin, layer);
    EXPECT_EQ(merged.d_in(), 3u);
    for (int t = 0; t < 100; ++t) {
        const auto z = random_vector(rng, 3);
        const auto a = layer_forward(merged, z, Activation::Tanh);
        const auto b = layer_forward(layer, linear_forward(lin, z), Activation::Tanh);
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LE(std::abs(a[k] - b[k]), 1e-12);
    }
    EXPECT_WF_ERROR(absorb_pre(random_linear(rng, 4, 3), layer), ErrorKind::DimensionMismatch);
}

TEST(AbsorbPost, IdentityAndZero) {
    Rng rng(5);
    const auto layer = random_layer(rng, 3, 2, 4);
    EXPECT_EQ(absorb_post(layer, LinearMap::identity(2)), layer);
    const auto zeroed = absorb_post(layer, LinearMap::zeros(2, 2));
    for (double v : zeroed.theta1_flat()) EXPECT_EQ(v, 0.0);
    const auto z = random_vector(rng, 3);
    for (double v : layer_forward(zeroed, z, Activation::Sigmoid)) EXPECT_EQ(v, 0.0);
}

TEST(AbsorbPost, EquivalentOnRandomInputs) {
    Rng rng(6);
    const auto layer = random_layer(rng, 3, 4, 6);
    const auto lin = random_linear(rng, 2, 4);
    const auto merged = absorb_post(layer, lin);
    EXPECT_EQ(merged.d_out(), 2u);
    for (int t = 0; t < 100; ++t) {
        const auto z = random_vector(rng, 3);
        const auto a = layer_forward(merged, z, Activation::Sigmoid);
        const auto b = linear_forward(lin, layer_forward(layer, z, Activation::Sigmoid));
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LE(std::abs(a[k] - b[k]), 1e-12);
    }
    EXPECT_WF_ERROR(absorb_post(layer, random_linear(rng, 2, 3)), ErrorKind::DimensionMismatch);
}

TEST(MergePass, IdentityPairsRestoreThinCore) {
    Rng rng(7);
    const auto thin = random_network(rng, 3, 4, 5, Activation::Tanh);
    const auto sbar = insert_linear_pairs(thin, 7, {true, Distribution::uniform(0.0, 0.0)}, 1);
    ASSERT_EQ(sbar.size(), 3 * 4 - 2);
    const auto merged = merge_pass(sbar);
    EXPECT_EQ(merged.net, thin);
    EXPECT_EQ(merged.plan.steps.size(), 2u * 3u);
}

TEST(MergePass, SingleLayerIsNoOp) {
    Rng rng(8);
    const auto thin = random_network(rng, 3, 1, 5, Activation::Tanh);
    const auto merged = merge_pass(thin);
    EXPECT_TRUE(merged.plan.empty());
    EXPECT_EQ(merged.net, thin);
}

TEST(MergePass, PlanShapeForInsertedPairs) {
    Rng rng(9);
    const auto sbar = noisy_pairs(random_network(rng, 2, 3, 4, Activation::Tanh), 6, 0.1, 2);
    const auto plan = merge_pass(sbar).plan;
    const std::vector<MergeStep> want{{MergeStep::Kind::Fuse, 1, 2},
                                      {MergeStep::Kind::AbsorbPre, 1, 2},
                                      {MergeStep::Kind::Fuse, 2, 3},
                                      {MergeStep::Kind::AbsorbPre, 2, 3}};
    EXPECT_EQ(plan.steps, want);
}

TEST(MergePass, TrainedStudentIsEquivalentOnThousandInputs) {
    Rng rng(10);
    const std::size_t d = 4, n = 4, m = 6;
    const auto thin = random_network(rng, d, n, m, Activation::Tanh);
    auto sbar = noisy_pairs(thin, 9, 0.3, 3);

    Dataset data;
    data.dim = d;
    data.xs = random_vector(rng, 64 * d, -0.4, 0.4);
    data.ys = random_vector(rng, 64, -0.5, 0.5);
    TrainConfig cfg;
    cfg.steps = 50;
    cfg.batch_size = 8;
    cfg.eta = 0.2;
    sbar = sgd_train(sbar, data, cfg).net;

    const auto merged = merge_pass(sbar);
    EXPECT_EQ(arch_of(merged.net), arch_of(thin));
    EXPECT_EQ(merged.net.size(), n);
    for (int t = 0; t < 1000; ++t) {
        const auto x = random_vector(rng, d);
        const double a = network_eval(merged.net, x)[0];
        const double b = network_eval(sbar, x)[0];
        EXPECT_TRUE(close_rel(a, b, 1e-10)) << a << " vs " << b;
    }
}

TEST(MergePass, EveryStepPreservesSemantics) {
    Rng rng(11);
    const auto sbar = noisy_pairs(random_network(rng, 3, 4, 5, Activation::Sigmoid), 8, 0.5, 4);
    const auto plan = merge_pass(sbar).plan;
    Network current = sbar;
    std::vector<std::vector<double>> probes;
    for (int t = 0; t < 50; ++t) probes.push_back(random_vector(rng, 3));
    for (const auto& step : plan.steps) {
        const Network next = apply_plan(current, MergePlan{{step}});
        EXPECT_EQ(next.size() + 1, current.size());
        EXPECT_EQ(next.input_dim(), current.input_dim());
        EXPECT_EQ(next.output_dim(), current.output_dim());
        for (const auto& x : probes)
            EXPECT_TRUE(close_rel(network_eval(next, x)[0], network_eval(current, x)[0], 1e-10));
        current = next;
    }
    EXPECT_EQ(current, merge_pass(sbar).net);
}

TEST(MergePass, Idempotent) {
    Rng rng(12);
    const auto merged = merge_pass(noisy_pairs(random_network(rng, 3, 3, 4, Activation::Tanh), 5, 0.2, 5)).net;
    const auto again = merge_pass(merged);
    EXPECT_TRUE(again.plan.empty());
    EXPECT_EQ(again.net, merged);
}

TEST(MergePass, TrailingLinearIsAbsorbedUpstream) {
    Rng rng(13);
    const auto layer = random_layer(rng, 3, 2, 4);
    const auto lin = random_linear(rng, 1, 2);
    const Network net(Activation::Tanh, {layer, lin});
    const auto merged = merge_pass(net);
    ASSERT_EQ(merged.plan.steps.size(), 1u);
    EXPECT_EQ(merged.plan.steps[0].kind, MergeStep::Kind::AbsorbPost);
    const auto x = random_vector(rng, 3);
    EXPECT_TRUE(close_rel(network_eval(merged.net, x)[0], network_eval(net, x)[0], 1e-12));
}

TEST(MergePass, LinearOnlyNetworkIsPatternMismatch) {
    Rng rng(14);
    const Network net(Activation::Tanh, {random_linear(rng, 3, 2), random_linear(rng, 1, 3)});
    try {
        merge_pass(net);
        FAIL() << "expected PatternMismatch";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PatternMismatch);
        EXPECT_NE(std::string(e.what()).find("position 0"), std::string::npos) << e.what();
    }
}

TEST(ApplyPlan, RejectsPlanThatDoesNotFit) {
    Rng rng(15);
    const auto thin = random_network(rng, 3, 2, 4, Activation::Tanh);
    EXPECT_WF_ERROR(apply_plan(thin, MergePlan{{{MergeStep::Kind::Fuse, 0, 1}}}), ErrorKind::PatternMismatch);
    EXPECT_WF_ERROR(apply_plan(thin, MergePlan{{{MergeStep::Kind::AbsorbPre, 5, 6}}}), ErrorKind::PatternMismatch);
}

} // namespace
} // namespace winforge
