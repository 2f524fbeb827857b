//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "helpers.hpp"

#include "winforge/merge.hpp"
#include "winforge/metrics.hpp"
#include "winforge/win.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace winforge {
namespace {

using test::random_layer;
using test::random_network;
using test::random_vector;

Dataset small_task(std::size_t dim, std::size_t n, std::uint64_t seed, bool zero_labels = false) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::SinOfProjection;
    spec.dim = dim;
    spec.n_train = n;
    spec.n_test = 8;
    spec.seed = seed;
    auto d = gen_dataset(spec).train;
    if (zero_labels) std::fill(d.ys.begin(), d.ys.end(), 0.0);
    return d;
}

WinConfig small_config() {
    WinConfig cfg;
    cfg.widen_factor = 4;
    cfg.init = {{Distribution::uniform(-1.0, 1.0), 2.0}, {}};
    cfg.teacher_train.eta = 0.1;
    cfg.teacher_train.steps = 40;
    cfg.teacher_train.batch_size = 8;
    cfg.teacher_train.width_scaled_lr = true;
    cfg.imitate_train = cfg.teacher_train;
    cfg.imitation_base_steps = 10;
    cfg.finetune = cfg.teacher_train;
    cfg.finetune.steps = 30;
    return cfg;
}

TEST(WidenSpec, Examples) {
    const auto thin = thin_arch(8, 3, 16);
    WinConfig cfg;
    cfg.widen_factor = 1;
    EXPECT_EQ(widen_spec(thin, cfg), thin);

    cfg.widen_factor = 4;
    const auto wide = widen_spec(thin, cfg);
    EXPECT_EQ(wide, thin_arch(8, 3, 64));

    cfg.mode = WinMode::Practical;
    cfg.wide_dim = 32;
    const auto practical = widen_spec(thin, cfg);
    const std::vector<LayerShape> want{{8, 32, 64}, {32, 32, 64}, {32, 1, 64}};
    EXPECT_EQ(practical.layers, want);
}

TEST(WidenSpec, RejectsInvalidConfigs) {
    const auto thin = thin_arch(8, 3, 16);
    WinConfig cfg;
    cfg.widen_factor = 0;
    EXPECT_WF_ERROR(widen_spec(thin, cfg), ErrorKind::InvalidConfig);
    cfg.widen_factor = 2;
    cfg.wide_dim = 16;
    EXPECT_WF_ERROR(widen_spec(thin, cfg), ErrorKind::InvalidConfig);
    cfg.mode = WinMode::Practical;
    cfg.wide_dim = 4;
    EXPECT_WF_ERROR(widen_spec(thin, cfg), ErrorKind::InvalidConfig);
}

TEST(InsertPairs, CountsAndSingleLayer) {
    Rng rng(1);
    const auto one = random_network(rng, 3, 1, 4, Activation::Tanh);
    EXPECT_EQ(insert_linear_pairs(one, 6, {}, 0), one);
    const auto three = random_network(rng, 3, 3, 4, Activation::Tanh);
    const auto sbar = insert_linear_pairs(three, 6, {}, 0);
    ASSERT_EQ(sbar.size(), 7u);
    for (std::size_t b : {1u, 2u, 4u, 5u}) EXPECT_TRUE(is_linear(sbar.block(b)));
    EXPECT_EQ(block_out_dim(sbar.block(1)), 6u);
    EXPECT_EQ(block_in_dim(sbar.block(2)), 6u);
    EXPECT_WF_ERROR(insert_linear_pairs(three, 2, {}, 0), ErrorKind::InvalidArgument);
}

TEST(InsertPairs, IdentityInsertionIsExact) {
    Rng rng(2);
    const auto thin = random_network(rng, 4, 4, 5, Activation::Sigmoid);
    for (std::size_t wide : {4u, 9u}) {
        const auto sbar = insert_linear_pairs(thin, wide, {}, 3);
        for (int t = 0; t < 50; ++t) {
            const auto x = random_vector(rng, 4);
            EXPECT_EQ(network_eval(sbar, x), network_eval(thin, x));
        }
    }
}

TEST(InsertPairs, NoiseIsSeeded) {
    Rng rng(3);
    const auto thin = random_network(rng, 3, 3, 4, Activation::Tanh);
    const PairInit noisy{true, Distribution::uniform(-0.1, 0.1)};
    EXPECT_EQ(insert_linear_pairs(thin, 5, noisy, 7), insert_linear_pairs(thin, 5, noisy, 7));
    EXPECT_NE(insert_linear_pairs(thin, 5, noisy, 7), insert_linear_pairs(thin, 5, noisy, 8));
}

TEST(Subsample, FullSampleWithoutReplacementIsTheSameLayer) {
    Rng rng(4);
    const auto wide = random_layer(rng, 3, 3, 50);
    const auto thin = subsample_init(wide, 50, SubsampleMode::WithoutReplacement, 9);
    EXPECT_EQ(thin, wide);
}

TEST(Subsample, SingleNeuronComputesThatNeuron) {
    Rng rng(5);
    const auto wide = random_layer(rng, 3, 2, 20);
    const auto idx = subsample_indices(20, 1, SubsampleMode::WithReplacement, 6);
    const auto thin = subsample_init(wide, 1, SubsampleMode::WithReplacement, 6);
    const auto n = wide.neuron(idx[0]);
    const auto z = random_vector(rng, 3);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i) s += n.theta0[i] * z[i];
    const auto y = layer_forward(thin, z, Activation::Tanh);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(y[k], n.theta1[k] * std::tanh(s));
}

TEST(Subsample, ConservationAndDistinctness) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(derive_seed(31, {s}));
        const std::size_t big_m = 1 + rng.below(200), m = 1 + rng.below(big_m);
        const auto wide = random_layer(rng, 2, 3, big_m);
        for (auto mode : {SubsampleMode::WithReplacement, SubsampleMode::WithoutReplacement}) {
            const auto thin = subsample_init(wide, m, mode, s);
            ASSERT_EQ(thin.width(), m);
            for (std::size_t j = 0; j < m; ++j) {
                bool found = false;
                for (std::size_t w = 0; w < big_m && !found; ++w) found = thin.neuron(j).theta0 == wide.neuron(w).theta0 && thin.neuron(j).theta1 == wide.neuron(w).theta1;
                EXPECT_TRUE(found);
            }
        }
        const auto idx = subsample_indices(big_m, m, SubsampleMode::WithoutReplacement, s);
        EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), m);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    }
    EXPECT_WF_ERROR(subsample_indices(5, 6, SubsampleMode::WithoutReplacement, 0), ErrorKind::InvalidArgument);
    EXPECT_EQ(subsample_indices(5, 6, SubsampleMode::WithReplacement, 0).size(), 6u);
}

TEST(Imitation, ExactCopyIsAFixedPoint) {
    Rng rng(6);
    const auto teacher = random_network(rng, 3, 4, 6, Activation::Tanh);
    const auto data = small_task(3, 32, 1);
    auto cfg = small_config();
    cfg.restarts = 0;
    const auto plain = imitation_stage(teacher, teacher, data, cfg, 5);
    EXPECT_EQ(plain.net, teacher);
    for (double l : plain.record.losses) EXPECT_EQ(l, 0.0);

    const auto sbar = insert_linear_pairs(teacher, 3, {}, 0);
    const auto paired = imitation_stage(sbar, teacher, data, cfg, 5);
    EXPECT_EQ(paired.net, sbar);
    ASSERT_EQ(paired.record.losses.size(), 3u);
    for (double l : paired.record.losses) EXPECT_EQ(l, 0.0);
}

TEST(Imitation, ScheduleIsLinearInBlockIndex) {
    auto cfg = small_config();
    cfg.imitation_base_steps = 7;
    Rng rng(7);
    const auto teacher = random_network(rng, 3, 4, 6, Activation::Tanh);
    const auto student = random_network(rng, 3, 4, 6, Activation::Tanh);
    const auto res = imitation_stage(student, teacher, small_task(3, 32, 2), cfg, 1);
    ASSERT_EQ(res.record.traces.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(res.record.traces[i].entries.back().step + 1, 7 * (i + 1));
}

TEST(Imitation, RestartsKeepTheBestCandidate) {
    const auto thin = thin_arch(3, 4, 6);
    auto cfg = small_config();
    cfg.mode = WinMode::Practical;
    cfg.wide_dim = 5;
    cfg.pair_init = {true, Distribution::uniform(-0.2, 0.2)};
    const auto data = small_task(3, 64, 3);
    const auto teacher = train_teacher(thin, data, cfg, 1).net;
    const auto sbar = insert_linear_pairs(init_network(thin, cfg.init, 2), 5, cfg.pair_init, 3);

    cfg.restarts = 0;
    const auto r0 = imitation_stage(sbar, teacher, data, cfg, 4);
    cfg.restarts = 2;
    const auto r2 = imitation_stage(sbar, teacher, data, cfg, 4);
    ASSERT_EQ(r2.record.losses.size(), 3u);
    for (std::size_t b = 0; b < 3; ++b) {
        const auto& c = r2.record.candidate_losses[b];
        ASSERT_EQ(c.size(), 3u);
        const auto best = std::min_element(c.begin(), c.end());
        EXPECT_EQ(r2.record.losses[b], *best);
        EXPECT_EQ(r2.record.chosen[b], static_cast<std::size_t>(best - c.begin()));
    }
    // Block 1 starts from the same state in both runs, so its candidates are a superset.
    EXPECT_EQ(r2.record.candidate_losses[0][0], r0.record.losses[0]);
    EXPECT_LE(r2.record.losses[0], r0.record.losses[0]);

    const auto layout = student_layout(r2.net);
    const double recomputed =
        dataset_loss(r2.net, data, LossSpec::imitation(teacher, 3, layout.handoff_end[3]));
    EXPECT_EQ(recomputed, r2.record.losses.back());
}

TEST(Imitation, FreezePreviousTrainsOnlyTheNewestGroup) {
    const auto thin = thin_arch(3, 3, 6);
    auto cfg = small_config();
    cfg.mode = WinMode::Practical;
    cfg.wide_dim = 5;
    cfg.freeze_previous = true;
    const auto data = small_task(3, 64, 5);
    const auto teacher = train_teacher(thin, data, cfg, 1).net;
    const auto sbar = insert_linear_pairs(init_network(thin, cfg.init, 2), 5, cfg.pair_init, 3);
    cfg.imitation_base_steps = 10;
    const auto after_one = [&] {
        auto c = cfg;
        return imitation_stage(sbar, teacher, data, c, 4).net;
    }();
    EXPECT_NE(after_one.block(0), sbar.block(0));
    EXPECT_NE(after_one.block(3), sbar.block(3));
    EXPECT_EQ(after_one.block(5), sbar.block(5));
}

TEST(Finetune, ZeroStepsAndDelegation) {
    Rng rng(8);
    const auto net = random_network(rng, 3, 3, 5, Activation::Tanh);
    const auto data = small_task(3, 32, 6);
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.steps = 0;
    EXPECT_EQ(finetune(net, data, cfg, 0).net, net);
    cfg.steps = 25;
    cfg.seed = 17;
    const auto direct = sgd_train(net, data, cfg);
    const auto ft = finetune(net, data, cfg, 0);
    EXPECT_EQ(ft.net, direct.net);
    EXPECT_EQ(ft.trace, direct.trace);
    EXPECT_EQ(ft.chosen, 0u);
}

TEST(Finetune, RestartsReturnMinimumTrainingLoss) {
    Rng rng(9);
    const auto net = random_network(rng, 3, 3, 5, Activation::Tanh);
    const auto data = small_task(3, 32, 7);
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.steps = 30;
    cfg.eta = 0.3;
    const auto ft = finetune(net, data, cfg, 3);
    ASSERT_EQ(ft.candidate_losses.size(), 4u);
    EXPECT_EQ(ft.trace.final_loss, *std::min_element(ft.candidate_losses.begin(), ft.candidate_losses.end()));
    EXPECT_EQ(dataset_loss(ft.net, data), ft.trace.final_loss);
}

TEST(WinRun, FullWidthTheoryStudentIsTheTeacher) {
    const auto thin = thin_arch(3, 3, 8);
    auto cfg = small_config();
    cfg.widen_factor = 1;
    cfg.finetune.steps = 0;
    const auto data = small_task(3, 32, 8);
    const auto art = win_run(thin, data, cfg, 11);
    EXPECT_EQ(art.merged, art.teacher);
    EXPECT_EQ(discrepancy(art.merged, art.teacher, data), 0.0);
    const auto scan = hybrid_scan(art.teacher, art.merged, data);
    for (double t : scan.terms) EXPECT_EQ(t, 0.0);
}

TEST(WinRun, TriangleHoldsOnZeroLabels) {
    const auto thin = thin_arch(3, 3, 6);
    const auto data = small_task(3, 32, 9, true);
    const auto art = win_run(thin, data, small_config(), 2);
    EXPECT_TRUE(art.triangle.holds);
    EXPECT_LE(art.triangle.student_rmse, art.triangle.teacher_rmse + art.triangle.discrepancy + 1e-12);
}

TEST(WinRun, PracticalModeRestoresThinArchitecture) {
    const auto thin = thin_arch(3, 3, 6);
    auto cfg = small_config();
    cfg.mode = WinMode::Practical;
    cfg.wide_dim = 6;
    cfg.pair_init = {true, Distribution::uniform(-0.1, 0.1)};
    const auto data = small_task(3, 48, 10);
    const auto art = win_run(thin, data, cfg, 3);
    EXPECT_EQ(arch_of(art.merged), thin);
    EXPECT_EQ(art.merged.size(), 3u);
    EXPECT_EQ(art.warmed.size(), 7u);
    Rng rng(10);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_vector(rng, 3, -0.5, 0.5);
        const double a = network_eval(art.merged, x)[0], b = network_eval(art.finetuned, x)[0];
        EXPECT_LE(std::abs(a - b), 1e-10 * std::max(std::abs(a), std::abs(b)) + 1e-15);
    }
    EXPECT_EQ(art.imitation.losses.size(), 2u);
}

TEST(WinRun, DeterministicAndEmitsJsonEvents) {
    const auto thin = thin_arch(3, 3, 6);
    auto cfg = small_config();
    cfg.imitate_in_theory = true;
    cfg.restarts = 1;
    const auto data = small_task(3, 32, 11);
    std::vector<std::string> ev1, ev2;
    const auto a = win_run(thin, data, cfg, 5, [&](const std::string& s) { ev1.push_back(s); });
    const auto b = win_run(thin, data, cfg, 5, [&](const std::string& s) { ev2.push_back(s); });
    EXPECT_EQ(a.teacher, b.teacher);
    EXPECT_EQ(a.warmed, b.warmed);
    EXPECT_EQ(a.merged, b.merged);
    EXPECT_EQ(a.plan, b.plan);
    EXPECT_EQ(a.teacher_trace, b.teacher_trace);
    EXPECT_EQ(a.imitation.losses, b.imitation.losses);
    EXPECT_EQ(a.finetune_info.trace, b.finetune_info.trace);
    EXPECT_EQ(ev1, ev2);
    ASSERT_FALSE(ev1.empty());
    for (const auto& line : ev1) EXPECT_TRUE(nlohmann::json::parse(line).contains("event")) << line;
    EXPECT_NE(win_run(thin, data, cfg, 6).merged, a.merged);
}

TEST(WinRun, FinetuneDoesNotIncreaseTrainingLossOnSeededRun) {
    const auto thin = thin_arch(3, 3, 6);
    auto cfg = small_config();
    cfg.finetune.eta = 0.02;
    cfg.finetune.steps = 60;
    const auto data = small_task(3, 64, 12);
    const auto art = win_run(thin, data, cfg, 8);
    EXPECT_LE(art.finetune_info.trace.final_loss, art.finetune_info.trace.initial_loss);
    EXPECT_DOUBLE_EQ(art.finetune_info.trace.initial_loss, dataset_loss(art.warmed, data));
}

TEST(WinRun, StageErrorsCarryTheStageLabel) {
    const auto thin = thin_arch(3, 2, 4);
    auto cfg = small_config();
    cfg.teacher_train.eta = 1e300;
    try {
        win_run(thin, small_task(3, 16, 13), cfg, 1);
        FAIL() << "expected divergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Diverged);
        EXPECT_NE(std::string(e.what()).find("stage 'teacher'"), std::string::npos) << e.what();
    }
}

TEST(WinRun, TotalStepBudget) {
    auto cfg = small_config();
    EXPECT_EQ(win_total_steps(cfg, 4), 40u + 30u);
    cfg.imitate_in_theory = true;
    cfg.restarts = 2;
    cfg.finetune_restarts = 1;
    EXPECT_EQ(win_total_steps(cfg, 4), 40u + 3u * (10u + 20u + 30u) + 2u * 30u);
    cfg.imitate_in_theory = false;
    cfg.mode = WinMode::Practical;
    EXPECT_EQ(win_total_steps(cfg, 4), 40u + 3u * 60u + 60u);
}

TEST(Scratch, SeededAndDistinctFromTeacherStreams) {
    const auto thin = thin_arch(3, 3, 6);
    const auto data = small_task(3, 32, 14);
    const auto cfg = small_config();
    const auto a = train_scratch(thin, data, cfg.init, cfg.finetune, 4);
    EXPECT_EQ(a.net, train_scratch(thin, data, cfg.init, cfg.finetune, 4).net);
    EXPECT_NE(a.net, train_scratch(thin, data, cfg.init, cfg.finetune, 5).net);
    EXPECT_EQ(a.trace.entries.size(), cfg.finetune.steps);
}

} // namespace
} // namespace winforge
