//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/config.hpp"
#include "winforge/io.hpp"
#include "winforge/win.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace winforge {

/// Headline numbers of one `win` job, written to summary.json.
struct WinSummary {
    double teacher_test_rmse = 0.0;
    double student_test_rmse = 0.0;
    /// D[merged student, teacher] on the test split.
    double discrepancy = 0.0;
    double teacher_train_loss = 0.0;
    double student_train_loss = 0.0;
    double ell_b = 0.0;
    bool triangle_holds = false;
};

/// Runs win_run for one (config, seed) and writes teacher/warmed/merged
/// models, traces, reports, summary.json, events.jsonl and manifest.json
/// under `dir`. With `compact`, the teacher and warmed models are skipped.
WinSummary run_win_job(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir, bool compact = false);

/// True when `dir` holds a manifest for exactly this (config, seed) whose
/// artifacts all verify.
bool job_complete(const fs::path& dir, const RunConfig& cfg, std::uint64_t seed);

WinSummary read_summary(const fs::path& path);

struct SweepOutcome {
    std::size_t ran = 0;
    std::size_t skipped = 0;
    /// "cell <index>: <message>" per failed cell.
    std::vector<std::string> failures;
    std::vector<GridRow> rows;
    /// Present when the grid has at least three depths and three widths.
    std::optional<BoundReport> report;
};

struct SweepOptions {
    std::size_t threads = 1;
    bool compact = false;
    /// Progress lines (JSON) go here when set.
    std::ostream* log = nullptr;
};

/// Cells go to out/cells/<index>; aggregates to out/cells.csv and, when the
/// grid allows a fit, out/bound_report.{csv,json}.
SweepOutcome run_sweep(const SweepConfig& cfg, const fs::path& out, const SweepOptions& options = {});

fs::path cell_dir(const fs::path& out, std::size_t index);

} // namespace winforge
