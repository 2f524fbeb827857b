//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/data.hpp"
#include "winforge/merge.hpp"
#include "winforge/metrics.hpp"
#include "winforge/net.hpp"
#include "winforge/train.hpp"
#include "winforge/win.hpp"

#include <benchmark/benchmark.h>

namespace winforge {
namespace {

Network make_net(std::size_t d, std::size_t n, std::size_t m, std::uint64_t seed = 1) {
    InitSpec init;
    init.base = {Distribution::uniform(-1.0, 1.0), 3.0};
    return init_network(thin_arch(d, n, m), init, seed);
}

std::vector<double> make_input(std::size_t d) {
    Rng rng(2);
    return sample_ball(rng, d, 1.0);
}

void BM_Forward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto net = make_net(8, 8, m);
    const auto x = make_input(8);
    for (auto _ : state) benchmark::DoNotOptimize(network_eval(net, x));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(net.parameter_count()));
}
BENCHMARK(BM_Forward)->RangeMultiplier(4)->Range(16, 4096);

void BM_ForwardBackward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto net = make_net(8, 8, m);
    const auto x = make_input(8);
    const std::vector<double> w{1.0};
    for (auto _ : state) {
        const auto fwd = network_forward(net, x);
        benchmark::DoNotOptimize(network_backward(net, fwd.cache, w));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(net.parameter_count()));
}
BENCHMARK(BM_ForwardBackward)->RangeMultiplier(4)->Range(16, 4096);

void BM_SgdSteps(benchmark::State& state) {
    GeneratorSpec g;
    g.kind = GeneratorKind::SinOfProjection;
    g.n_train = 256;
    g.n_test = 1;
    const auto train = gen_dataset(g).train;
    const auto net = make_net(8, 4, static_cast<std::size_t>(state.range(0)));
    TrainConfig cfg;
    cfg.eta = 0.05;
    cfg.steps = 100;
    cfg.batch_size = 32;
    cfg.log_every = 100;
    for (auto _ : state) benchmark::DoNotOptimize(sgd_train(net, train, cfg));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.steps));
}
BENCHMARK(BM_SgdSteps)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_MergePass(benchmark::State& state) {
    const auto wide = static_cast<std::size_t>(state.range(0));
    const auto sbar = insert_linear_pairs(make_net(8, 8, 64), wide, {true, Distribution::uniform(-0.1, 0.1)}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(merge_pass(sbar));
}
BENCHMARK(BM_MergePass)->Arg(8)->Arg(64)->Arg(256);

void BM_HybridScan(benchmark::State& state) {
    const auto teacher = make_net(8, 4, 1024);
    const auto student = make_net(8, 4, 32, 5);
    GeneratorSpec g;
    g.n_train = 128;
    g.n_test = 1;
    const auto eval = gen_dataset(g).train;
    for (auto _ : state) benchmark::DoNotOptimize(hybrid_scan(teacher, student, eval));
}
BENCHMARK(BM_HybridScan)->Unit(benchmark::kMillisecond);

} // namespace
} // namespace winforge

BENCHMARK_MAIN();
