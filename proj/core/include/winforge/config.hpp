//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/data.hpp"
#include "winforge/metrics.hpp"
#include "winforge/train.hpp"
#include "winforge/win.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace winforge {

/// Everything one `win` / `scratch` job needs besides its seed.
struct RunConfig {
    GeneratorSpec data;
    std::size_t depth = 8;
    std::size_t width = 16;
    Activation activation = Activation::Tanh;
    WinConfig win;
    /// Scratch baseline; steps == 0 means "match the WIN step budget".
    TrainConfig scratch;
    InitSpec scratch_init;
    EstimatorKind estimator = EstimatorKind::Pairs;
    ProbeConfig probes;
    JacobianConfig jacobian;

    ArchSpec thin() const { return thin_arch(data.dim, depth, width, activation); }
    TrainConfig scratch_train() const;
    void validate() const;

    bool operator==(const RunConfig&) const;
};

/// Unknown keys are rejected; missing keys keep their defaults.
RunConfig parse_run_config(std::string_view json_text);
/// Canonical (sorted-key, compact) JSON with every field spelled out.
std::string dump_run_config(const RunConfig& cfg);
/// SHA-256 of the canonical dump.
std::string config_hash(const RunConfig& cfg);

GeneratorSpec parse_generator_spec(std::string_view json_text);
std::string dump_generator_spec(const GeneratorSpec& spec);

struct SweepCell {
    std::size_t index = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t big_m = 0;
    std::uint64_t replicate = 0;
    /// derive_seed(master_seed, {tag::kCell, index}).
    std::uint64_t seed = 0;
    RunConfig config;
};

struct SweepConfig {
    RunConfig base;
    std::vector<std::size_t> depths;
    std::vector<std::size_t> widths;
    /// Teacher widths; when empty, widen_factors is used instead.
    std::vector<std::size_t> big_ms;
    std::vector<std::size_t> widen_factors;
    std::vector<std::uint64_t> seeds;
    std::optional<WinMode> mode;
    std::uint64_t master_seed = 0;
    std::string output = "sweep";

    /// Row-major over (n, m, M, seed), seeds varying fastest.
    std::vector<SweepCell> cells() const;
    void validate() const;
};

SweepConfig parse_sweep_config(std::string_view json_text);
std::string dump_sweep_config(const SweepConfig& cfg);

} // namespace winforge
