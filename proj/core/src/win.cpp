//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/win.hpp"
#include "winforge/error.hpp"
#include "winforge/metrics.hpp"
#include "winforge/seed.hpp"

#include "json.hpp"

#include <algorithm>
#include <numeric>

namespace winforge {

namespace {

void emit(const EventSink& events, const nlohmann::json& j) {
    if (events) events(j.dump());
}

std::size_t hidden_dim(const ArchSpec& thin) {
    return thin.depth() > 1 ? thin.layers.front().d_out : thin.input_dim();
}

LinearMap make_pair_map(std::size_t rows, std::size_t cols, const PairInit& init, Rng& rng) {
    LinearMap lin = LinearMap::zeros(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            lin.at(r, c) = (init.identity && r == c ? 1.0 : 0.0) + init.noise.sample(rng);
    return lin;
}

template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        fail(e.kind(), std::string("stage '") + stage + "': " + e.what());
    }
}

} // namespace

std::string_view to_string(WinMode mode) { return mode == WinMode::Theory ? "theory" : "practical"; }

std::string_view to_string(SubsampleMode mode) {
    return mode == SubsampleMode::WithReplacement ? "with_replacement" : "without_replacement";
}

WinMode parse_win_mode(std::string_view name) {
    if (name == "theory") return WinMode::Theory;
    if (name == "practical") return WinMode::Practical;
    fail(ErrorKind::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

SubsampleMode parse_subsample_mode(std::string_view name) {
    if (name == "with_replacement") return SubsampleMode::WithReplacement;
    if (name == "without_replacement") return SubsampleMode::WithoutReplacement;
    fail(ErrorKind::InvalidConfig, "unknown subsample mode '" + std::string(name) + "'");
}

std::size_t WinConfig::resolved_wide_dim(const ArchSpec& thin) const {
    return wide_dim == 0 ? hidden_dim(thin) : wide_dim;
}

void WinConfig::validate(const ArchSpec& thin) const {
    thin.validate();
    require(widen_factor >= 1, ErrorKind::InvalidConfig, "widen_factor must be >= 1");
    const std::size_t d = hidden_dim(thin);
    for (std::size_t i = 0; i + 1 < thin.depth(); ++i)
        require(thin.layers[i].d_out == d, ErrorKind::InvalidConfig, "thin network hidden dims must all be equal");
    const std::size_t wide = resolved_wide_dim(thin);
    if (mode == WinMode::Theory)
        require(wide == d, ErrorKind::InvalidConfig,
                "theory mode needs wide_dim == thin dim (" + std::to_string(d) + "), got " + std::to_string(wide));
    else
        require(wide >= d, ErrorKind::InvalidConfig,
                "practical mode needs wide_dim >= thin dim (" + std::to_string(d) + "), got " + std::to_string(wide));
    init.validate();
    pair_init.noise.validate();
    teacher_train.validate();
    imitate_train.validate();
    finetune.validate();
}

ArchSpec widen_spec(const ArchSpec& thin, const WinConfig& cfg) {
    cfg.validate(thin);
    const std::size_t wide = cfg.resolved_wide_dim(thin);
    ArchSpec out{thin.activation, {}};
    const std::size_t n = thin.depth();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& l = thin.layers[i];
        LayerShape s{l.d_in, l.d_out, cfg.widen_factor * l.width};
        if (cfg.mode == WinMode::Practical) {
            s.d_in = i == 0 ? thin.input_dim() : wide;
            s.d_out = i + 1 == n ? thin.output_dim() : wide;
        }
        out.layers.push_back(s);
    }
    out.validate();
    return out;
}

Network insert_linear_pairs(const Network& thin, std::size_t wide_dim, const PairInit& init, std::uint64_t seed) {
    require(thin.mean_field_count() == thin.size(), ErrorKind::PatternMismatch,
            "insert_linear_pairs expects a network of mean-field layers only");
    init.noise.validate();
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < thin.size(); ++i) {
        blocks.push_back(thin.block(i));
        if (i + 1 == thin.size()) break;
        const std::size_t d = block_out_dim(thin.block(i));
        require(wide_dim >= d, ErrorKind::InvalidArgument,
                "wide_dim " + std::to_string(wide_dim) + " is smaller than layer dim " + std::to_string(d));
        Rng up(derive_seed(seed, {tag::kPairs, i, 1}));
        Rng down(derive_seed(seed, {tag::kPairs, i, 2}));
        blocks.emplace_back(make_pair_map(wide_dim, d, init, up));
        blocks.emplace_back(make_pair_map(d, wide_dim, init, down));
    }
    return Network(thin.activation(), std::move(blocks));
}

std::vector<std::size_t> subsample_indices(std::size_t big_m, std::size_t m, SubsampleMode mode, std::uint64_t seed) {
    require(m >= 1, ErrorKind::InvalidArgument, "subsample size must be positive");
    Rng rng(seed);
    std::vector<std::size_t> idx;
    if (mode == SubsampleMode::WithReplacement) {
        idx.resize(m);
        for (auto& i : idx) i = static_cast<std::size_t>(rng.below(big_m));
        return idx;
    }
    require(m <= big_m, ErrorKind::InvalidArgument,
            "cannot draw " + std::to_string(m) + " of " + std::to_string(big_m) + " neurons without replacement");
    std::vector<std::size_t> pool(big_m);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(big_m - i));
        std::swap(pool[i], pool[j]);
    }
    idx.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

MeanFieldLayer subsample_init(const MeanFieldLayer& wide, std::size_t m, SubsampleMode mode, std::uint64_t seed) {
    const auto idx = subsample_indices(wide.width(), m, mode, seed);
    std::vector<double> t0;
    std::vector<double> t1;
    t0.reserve(m * wide.d_in());
    t1.reserve(m * wide.d_out());
    for (std::size_t j : idx) {
        const auto a = wide.theta0(j);
        const auto b = wide.theta1(j);
        t0.insert(t0.end(), a.begin(), a.end());
        t1.insert(t1.end(), b.begin(), b.end());
    }
    return MeanFieldLayer(wide.d_in(), wide.d_out(), std::move(t0), std::move(t1));
}

ImitationResult imitation_stage(const Network& sbar, const Network& teacher, const Dataset& data,
                                const WinConfig& cfg, std::uint64_t seed, const EventSink& events) {
    const auto layout = student_layout(sbar);
    const std::size_t n = layout.depth;
    require(teacher.mean_field_count() == teacher.size() && teacher.size() == n, ErrorKind::DimensionMismatch,
            "teacher has " + std::to_string(teacher.size()) + " blocks, student " + std::to_string(n) + " layers");

    ImitationResult out{sbar, {}};
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t student_end = layout.handoff_end[i];
        // Blocks of the newest group: M_{i-1,2}, S_i, M_{i,1} (or just S_i).
        const std::size_t layer_block = layout.has_pairs ? 3 * (i - 1) : i - 1;
        const std::size_t group_first = layout.has_pairs && i > 1 ? layer_block - 1 : layer_block;
        TrainMask mask(sbar.size(), false);
        for (std::size_t b = cfg.freeze_previous ? group_first : 0; b < student_end; ++b) mask[b] = true;

        TrainConfig tc = cfg.imitate_train;
        tc.steps = cfg.imitation_steps(i);
        const auto loss = LossSpec::imitation(teacher, i, student_end);

        std::vector<double> losses;
        std::optional<TrainResult> best;
        std::size_t best_r = 0;
        for (std::size_t r = 0; r <= cfg.restarts; ++r) {
            Network cand = out.net;
            if (r > 0) {
                const auto& current = std::get<MeanFieldLayer>(cand.block(layer_block));
                if (layout.has_pairs) {
                    const LayerShape shape{current.d_in(), current.d_out(), current.width()};
                    cand.block(layer_block) =
                        init_layer(shape, cfg.init.for_layer(i - 1), derive_seed(seed, {tag::kRestart, i, r, 0}));
                    Rng up(derive_seed(seed, {tag::kRestart, i, r, 1}));
                    const auto& m1 = std::get<LinearMap>(cand.block(layer_block + 1));
                    cand.block(layer_block + 1) = make_pair_map(m1.rows(), m1.cols(), cfg.pair_init, up);
                    if (i > 1) {
                        Rng down(derive_seed(seed, {tag::kRestart, i, r, 2}));
                        const auto& m2 = std::get<LinearMap>(cand.block(layer_block - 1));
                        cand.block(layer_block - 1) = make_pair_map(m2.rows(), m2.cols(), cfg.pair_init, down);
                    }
                } else {
                    cand.block(layer_block) =
                        subsample_init(std::get<MeanFieldLayer>(teacher.block(i - 1)), current.width(), cfg.subsample,
                                       derive_seed(seed, {tag::kRestart, i, r}));
                }
            }
            tc.seed = derive_seed(seed, {tag::kImitate, i, r});
            auto res = sgd_train(std::move(cand), data, tc, loss, mask);
            const double final_loss = res.trace.final_loss;
            losses.push_back(final_loss);
            emit(events, {{"event", "imitation_candidate"}, {"block", i}, {"restart", r}, {"loss", final_loss}});
            if (!best || final_loss < best->trace.final_loss) {
                best = std::move(res);
                best_r = r;
            }
        }
        out.net = std::move(best->net);
        out.record.losses.push_back(best->trace.final_loss);
        out.record.candidate_losses.push_back(std::move(losses));
        out.record.chosen.push_back(best_r);
        out.record.traces.push_back(std::move(best->trace));
        emit(events, {{"event", "imitation_block"}, {"block", i}, {"loss", out.record.losses.back()}, {"chosen", best_r}});
    }
    return out;
}

FinetuneResult finetune(const Network& net, const Dataset& data, const TrainConfig& cfg, std::size_t restarts,
                        const EventSink& events) {
    std::optional<FinetuneResult> best;
    std::vector<double> losses;
    for (std::size_t r = 0; r <= restarts; ++r) {
        TrainConfig tc = cfg;
        if (r > 0) tc.seed = derive_seed(cfg.seed, {tag::kRestart, r});
        auto res = sgd_train(net, data, tc);
        losses.push_back(res.trace.final_loss);
        emit(events, {{"event", "finetune_candidate"}, {"restart", r}, {"loss", res.trace.final_loss}});
        if (!best || res.trace.final_loss < best->trace.final_loss)
            best = FinetuneResult{std::move(res.net), std::move(res.trace), {}, r};
    }
    best->candidate_losses = std::move(losses);
    return std::move(*best);
}

TriangleCheck triangle_check(const Network& teacher, const Network& student, const Dataset& data) {
    TriangleCheck t;
    t.teacher_rmse = rmse(teacher, data);
    t.student_rmse = rmse(student, data);
    t.discrepancy = discrepancy(student, teacher, data);
    t.holds = t.student_rmse <= t.teacher_rmse + t.discrepancy + 1e-12;
    return t;
}

TrainResult train_teacher(const ArchSpec& thin, const Dataset& train, const WinConfig& cfg, std::uint64_t seed) {
    const auto wide = widen_spec(thin, cfg);
    TrainConfig tc = cfg.teacher_train;
    tc.seed = derive_seed(seed, {tag::kTeacher, tag::kShuffle});
    return sgd_train(init_network(wide, cfg.init, derive_seed(seed, {tag::kTeacher})), train, tc);
}

WinArtifacts win_run(const ArchSpec& thin, const Dataset& train, const WinConfig& cfg, std::uint64_t seed,
                     const EventSink& events) {
    in_stage("config", [&] { cfg.validate(thin); });
    const std::size_t n = thin.depth();

    emit(events, {{"event", "stage_start"}, {"stage", "teacher"}});
    auto teacher = in_stage("teacher", [&] { return train_teacher(thin, train, cfg, seed); });
    emit(events, {{"event", "stage_done"}, {"stage", "teacher"}, {"loss", teacher.trace.final_loss}});

    emit(events, {{"event", "stage_start"}, {"stage", "narrow"}});
    ImitationResult narrow = in_stage("narrow", [&] {
        if (cfg.mode == WinMode::Theory) {
            std::vector<Block> layers;
            for (std::size_t i = 0; i < n; ++i)
                layers.emplace_back(subsample_init(std::get<MeanFieldLayer>(teacher.net.block(i)),
                                                   thin.layers[i].width, cfg.subsample,
                                                   derive_seed(seed, {tag::kSubsample, i})));
            Network student(thin.activation, std::move(layers));
            if (!cfg.imitate_in_theory) return ImitationResult{std::move(student), {}};
            return imitation_stage(student, teacher.net, train, cfg, seed, events);
        }
        const auto thin_net = init_network(thin, cfg.init, derive_seed(seed, {tag::kStudent}));
        const auto sbar = insert_linear_pairs(thin_net, cfg.resolved_wide_dim(thin), cfg.pair_init,
                                              derive_seed(seed, {tag::kPairs}));
        return imitation_stage(sbar, teacher.net, train, cfg, seed, events);
    });
    emit(events, {{"event", "stage_done"}, {"stage", "narrow"}});

    emit(events, {{"event", "stage_start"}, {"stage", "finetune"}});
    auto tuned = in_stage("finetune", [&] {
        TrainConfig tc = cfg.finetune;
        tc.seed = derive_seed(seed, {tag::kFinetune});
        return finetune(narrow.net, train, tc, cfg.finetune_restarts, events);
    });
    emit(events, {{"event", "stage_done"}, {"stage", "finetune"}, {"loss", tuned.trace.final_loss}});

    auto merged = in_stage("merge", [&] { return merge_pass(tuned.net); });
    emit(events, {{"event", "stage_done"}, {"stage", "merge"}, {"steps", merged.plan.steps.size()}});

    auto tri = in_stage("evaluate", [&] { return triangle_check(teacher.net, merged.net, train); });

    return WinArtifacts{std::move(teacher.net),  std::move(narrow.net),   tuned.net,
                        std::move(merged.net),   std::move(merged.plan),  std::move(teacher.trace),
                        std::move(narrow.record), std::move(tuned),       tri};
}

TrainResult train_scratch(const ArchSpec& thin, const Dataset& train, const InitSpec& init, const TrainConfig& cfg,
                          std::uint64_t seed) {
    TrainConfig tc = cfg;
    tc.seed = derive_seed(seed, {tag::kScratch, tag::kShuffle});
    return sgd_train(init_network(thin, init, derive_seed(seed, {tag::kScratch})), train, tc);
}

std::size_t win_total_steps(const WinConfig& cfg, std::size_t depth) {
    std::size_t total = cfg.teacher_train.steps;
    if (cfg.mode == WinMode::Practical || cfg.imitate_in_theory) {
        std::size_t imitation = 0;
        for (std::size_t i = 1; i < depth; ++i) imitation += cfg.imitation_steps(i);
        total += (cfg.restarts + 1) * imitation;
    }
    return total + (cfg.finetune_restarts + 1) * cfg.finetune.steps;
}

} // namespace winforge
