//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/data.hpp"
#include "winforge/merge.hpp"
#include "winforge/metrics.hpp"
#include "winforge/net.hpp"
#include "winforge/train.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace winforge {

namespace fs = std::filesystem;

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;
/// save_model switches to the binary container above this many parameters.
inline constexpr std::size_t kBinaryModelThreshold = 1'000'000;

std::string_view tool_version();

// --- raw files ----------------------------------------------------------------

/// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const fs::path& path, std::string_view bytes);
std::string read_file(const fs::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text);

// --- models -------------------------------------------------------------------

struct Provenance {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string tool_version;

    bool operator==(const Provenance&) const = default;
};

enum class ModelFormat { Auto, Json, Binary };

struct LoadedModel {
    Network net;
    Provenance provenance;
};

std::string encode_model_json(const Network& net, const Provenance& prov = {});
std::string encode_model_binary(const Network& net, const Provenance& prov = {});
/// Detects the "WFM1" magic; anything else is parsed as JSON.
LoadedModel decode_model(std::string_view bytes);

/// Auto picks JSON up to kBinaryModelThreshold parameters, binary above.
void save_model(const Network& net, const fs::path& path, const Provenance& prov = {},
                ModelFormat format = ModelFormat::Auto);
Network load_model(const fs::path& path);
LoadedModel load_model_full(const fs::path& path);

// --- datasets -----------------------------------------------------------------

enum class DataFormat { Auto, Csv, Binary };

std::string encode_dataset_csv(const Dataset& data);
std::string encode_dataset_binary(const Dataset& data);
/// Detects the "WFD1" magic; anything else is parsed as CSV.
Dataset decode_dataset(std::string_view bytes);

/// Auto picks binary for a ".wfd" extension and CSV otherwise.
void save_dataset(const Dataset& data, const fs::path& path, DataFormat format = DataFormat::Auto);
Dataset load_dataset(const fs::path& path);

// --- traces and reports ---------------------------------------------------------

/// Columns step, loss, eta.
std::string encode_trace_csv(const TrainTrace& trace);
void save_trace(const TrainTrace& trace, const fs::path& path);

enum class ReportFormat { Csv, Json };
ReportFormat parse_report_format(std::string_view name);

/// Grid coordinates stamped on per-k report rows.
struct ReportContext {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t big_m = 0;
    std::uint64_t seed = 0;
};

/// Fixed report column order; cells that do not apply are left empty (CSV)
/// or null (JSON).
inline constexpr std::string_view kReportColumns[] = {"n",     "m",       "M",         "seed",     "k",
                                                      "term",  "total",   "ell_hat",   "predictor", "residual"};

std::string render_report(const HybridScan& scan, const ReportContext& ctx, ReportFormat format);
std::string render_report(const LipschitzReport& report, const ReportContext& ctx, ReportFormat format);
/// The seed column holds the number of seeds averaged into each row.
std::string render_report(const BoundReport& report, ReportFormat format);

void write_report(const HybridScan& scan, const ReportContext& ctx, const fs::path& path, ReportFormat format);
void write_report(const LipschitzReport& report, const ReportContext& ctx, const fs::path& path,
                  ReportFormat format);
void write_report(const BoundReport& report, const fs::path& path, ReportFormat format);

std::string encode_plan_json(const MergePlan& plan);
MergePlan decode_plan_json(std::string_view bytes);

// --- run manifests --------------------------------------------------------------

struct ManifestArtifact {
    std::string name;
    /// Relative to the manifest's directory.
    std::string path;
    std::string sha256;

    bool operator==(const ManifestArtifact&) const = default;
};

struct RunManifest {
    std::uint64_t master_seed = 0;
    /// Full configuration snapshot as JSON text.
    std::string config;
    std::string config_hash;
    std::string tool_version;
    std::vector<ManifestArtifact> artifacts;

    /// Hashes `dir / relative` and records it.
    void add(const std::string& name, const fs::path& dir, const std::string& relative);

    bool operator==(const RunManifest&) const = default;
};

std::string encode_manifest(const RunManifest& manifest);
RunManifest decode_manifest(std::string_view bytes);
void save_manifest(const RunManifest& manifest, const fs::path& path);
RunManifest load_manifest(const fs::path& path);

struct ManifestCheck {
    /// Names of artifacts that are missing or whose hash differs.
    std::vector<std::string> mismatched;

    bool ok() const noexcept { return mismatched.empty(); }
};

ManifestCheck verify_manifest(const RunManifest& manifest, const fs::path& dir);

} // namespace winforge
