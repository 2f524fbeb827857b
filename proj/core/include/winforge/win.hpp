//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/data.hpp"
#include "winforge/merge.hpp"
#include "winforge/net.hpp"
#include "winforge/train.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace winforge {

enum class WinMode { Theory, Practical };
enum class SubsampleMode { WithReplacement, WithoutReplacement };

std::string_view to_string(WinMode mode);
std::string_view to_string(SubsampleMode mode);
WinMode parse_win_mode(std::string_view name);
SubsampleMode parse_subsample_mode(std::string_view name);

/// Initialization of an inserted linear pair: a padded identity
/// (M1 = [I; 0], M2 = [I, 0]) plus entrywise noise, or noise alone.
struct PairInit {
    bool identity = true;
    Distribution noise = Distribution::uniform(0.0, 0.0);

    bool operator==(const PairInit&) const = default;
};

struct WinConfig {
    std::size_t widen_factor = 4;
    /// Inter-layer dimension of the teacher; 0 means "same as the thin net".
    std::size_t wide_dim = 0;
    WinMode mode = WinMode::Theory;
    SubsampleMode subsample = SubsampleMode::WithoutReplacement;
    /// Block i (1-based) imitates for base * i steps.
    std::size_t imitation_base_steps = 200;
    std::size_t restarts = 0;
    std::size_t finetune_restarts = 0;
    /// Theory mode: run layerwise imitation on top of subsampling.
    bool imitate_in_theory = false;
    /// Train only the newest group S̄_i instead of the whole prefix.
    bool freeze_previous = false;

    InitSpec init;
    PairInit pair_init;
    TrainConfig teacher_train;
    TrainConfig imitate_train;
    TrainConfig finetune;

    std::size_t imitation_steps(std::size_t block) const { return imitation_base_steps * block; }
    std::size_t resolved_wide_dim(const ArchSpec& thin) const;
    void validate(const ArchSpec& thin) const;

    bool operator==(const WinConfig&) const = default;
};

/// Teacher architecture: width k*m; in practical mode hidden dims become wide_dim.
ArchSpec widen_spec(const ArchSpec& thin, const WinConfig& cfg);

/// S_1, M11, M12, S_2, ..., S_n with M_{i,1}: d -> wide_dim, M_{i,2}: wide_dim -> d.
Network insert_linear_pairs(const Network& thin, std::size_t wide_dim, const PairInit& init, std::uint64_t seed);

/// m neurons copied from the wide layer, drawn i.i.d. (with replacement) or
/// as a uniform m-subset kept in ascending index order (without).
MeanFieldLayer subsample_init(const MeanFieldLayer& wide, std::size_t m, SubsampleMode mode, std::uint64_t seed);

/// Source indices subsample_init would copy for these arguments.
std::vector<std::size_t> subsample_indices(std::size_t big_m, std::size_t m, SubsampleMode mode, std::uint64_t seed);

using EventSink = std::function<void(const std::string& json_line)>;

struct ImitationRecord {
    /// Best full-dataset imitation loss per block i = 1..n-1.
    std::vector<double> losses;
    /// candidate_losses[i-1][r]: final loss of restart candidate r.
    std::vector<std::vector<double>> candidate_losses;
    std::vector<std::size_t> chosen;
    std::vector<TrainTrace> traces;
};

struct ImitationResult {
    Network net;
    ImitationRecord record;
};

/// Layerwise imitation: for i = 1..n-1 train the student prefix through
/// its layer-i handoff to match teacher prefix B^{(i)}, keeping the best of
/// restarts + 1 candidates.
ImitationResult imitation_stage(const Network& sbar, const Network& teacher, const Dataset& data,
                                const WinConfig& cfg, std::uint64_t seed, const EventSink& events = {});

struct FinetuneResult {
    Network net;
    TrainTrace trace;
    std::vector<double> candidate_losses;
    std::size_t chosen = 0;
};

/// Task-loss SGD on all parameters; restart r > 0 reshuffles with a derived
/// seed and the candidate with the lowest final training loss wins.
FinetuneResult finetune(const Network& net, const Dataset& data, const TrainConfig& cfg, std::size_t restarts,
                        const EventSink& events = {});

struct TriangleCheck {
    double teacher_rmse = 0.0;
    double student_rmse = 0.0;
    double discrepancy = 0.0;
    bool holds = false;
};

TriangleCheck triangle_check(const Network& teacher, const Network& student, const Dataset& data);

struct WinArtifacts {
    Network teacher;
    /// Student at the end of Stage 2 (with pairs in practical mode).
    Network warmed;
    /// Student after fine-tuning, before merging.
    Network finetuned;
    Network merged;
    MergePlan plan;
    TrainTrace teacher_trace;
    ImitationRecord imitation;
    FinetuneResult finetune_info;
    TriangleCheck triangle;
};

/// Stage 1 alone: the widened network trained on the task loss, seeded
/// exactly as inside win_run.
TrainResult train_teacher(const ArchSpec& thin, const Dataset& train, const WinConfig& cfg, std::uint64_t seed);

/// All three stages, deterministic per seed. Stage training configs get
/// their shuffle seeds derived from `seed`.
WinArtifacts win_run(const ArchSpec& thin, const Dataset& train, const WinConfig& cfg, std::uint64_t seed,
                     const EventSink& events = {});

/// Plain SGD on the thin architecture from a fresh initialization.
TrainResult train_scratch(const ArchSpec& thin, const Dataset& train, const InitSpec& init, const TrainConfig& cfg,
                          std::uint64_t seed);

/// Total SGD steps one win_run spends across all stages and restarts.
std::size_t win_total_steps(const WinConfig& cfg, std::size_t depth);

} // namespace winforge
