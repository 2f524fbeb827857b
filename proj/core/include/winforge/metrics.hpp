//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/data.hpp"
#include "winforge/net.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace winforge {

using VectorMap = std::function<std::vector<double>(std::span<const double>)>;

// --- discrepancy -----------------------------------------------------------

/// sqrt(mean_x ||f(x) - g(x)||^2) over the inputs of `eval` (labels unused).
/// Scalar outputs reduce to the usual root-mean-square difference.
double discrepancy(const Network& f, const Network& g, const Dataset& eval);
double discrepancy(const VectorMap& f, const VectorMap& g, const Dataset& eval);

/// sqrt(mean (net(x) - y)^2).
double rmse(const Network& net, const Dataset& data);

// --- hybrid networks --------------------------------------------------------

/// Where the student's layer-k output lives in teacher space. For a plain
/// thin student that is right after its k-th mean-field layer; for a
/// student with inserted pairs it is right after the up-projection M_{k,1}.
struct StudentLayout {
    std::size_t depth = 0;
    /// handoff_end[k] = number of student blocks in the prefix whose output
    /// is the teacher-space layer-k value, k = 1..depth (index 0 unused, 0).
    std::vector<std::size_t> handoff_end;
    bool has_pairs = false;
};

/// Recognizes either S_1..S_n or S_1, M11, M12, S_2, ..., S_n.
StudentLayout student_layout(const Network& student);

/// F_k = B_n o ... o B_{k+1} o (student prefix through handoff k).
/// F_0 is the teacher, F_n the student.
Network build_hybrid(const Network& teacher, const Network& student, std::size_t k);

struct HybridScan {
    /// terms[k-1] = D[F_k, F_{k-1}], k = 1..n.
    std::vector<double> terms;
    double total = 0.0;
    /// Max over samples of ||B_{[k+1:n]}(u) - B_{[k+1:n]}(v)|| / ||u - v||.
    std::vector<double> amplification;
    /// sqrt(mean ||u - v||^2): handoff discrepancy at layer k.
    std::vector<double> handoff;
    /// Samples with u == v (ratio undefined), per k.
    std::vector<std::size_t> skipped;
    std::size_t samples = 0;

    double term_sum() const;
};

HybridScan hybrid_scan(const Network& teacher, const Network& student, const Dataset& eval);

// --- Lipschitz estimation ---------------------------------------------------

struct ProbeConfig {
    /// Consecutive data pairs (x_i, x_{i+1}) used, capped at this count.
    std::size_t max_data_pairs = 256;
    /// Points around which local probes are placed, capped at this count.
    std::size_t max_local_points = 64;
    std::size_t random_directions = 4;
    bool axis_aligned = true;
    double delta = 1e-4;
    std::uint64_t seed = 0;
    bool data_pairs = true;
};

struct LipschitzEstimate {
    double value = 0.0;
    std::size_t probes = 0;
    std::size_t skipped = 0;
};

/// Largest realized ratio ||f(x) - f(x')|| / ||x - x'|| over data pairs and
/// local perturbations x' = x + delta * direction. A certified lower bound
/// on the Lipschitz constant of f over the probed region.
LipschitzEstimate lipschitz_pairs(const VectorMap& f, std::span<const std::vector<double>> points,
                                  const ProbeConfig& cfg);
LipschitzEstimate lipschitz_pairs(const VectorMap& f, const Dataset& eval, const ProbeConfig& cfg);

struct JacobianConfig {
    std::size_t max_iterations = 2000;
    double tolerance = 1e-10;
    std::uint64_t seed = 0;
};

/// Max over sample points of the spectral norm of the Jacobian of blocks
/// [first, last) of `net`, by power iteration on J^T J.
LipschitzEstimate lipschitz_jacobian(const Network& net, std::size_t first, std::size_t last,
                                     std::span<const std::vector<double>> points, const JacobianConfig& cfg);

enum class EstimatorKind { Pairs, Jacobian };
std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

struct LipschitzReport {
    /// suffix[k-1] = estimate for B_{[k+1:n]}, k = 1..n (k = n is the identity, 1).
    std::vector<double> suffix;
    double ell_b = 0.0;
    EstimatorKind kind = EstimatorKind::Pairs;
    std::vector<std::size_t> probes;
    std::vector<std::size_t> skipped;
};

/// Estimates every teacher suffix on the teacher's own layer-k features of
/// the evaluation inputs.
LipschitzReport suffix_lipschitz(const Network& teacher, const Dataset& eval, EstimatorKind kind,
                                 const ProbeConfig& probes = {}, const JacobianConfig& jac = {});

// --- per-neuron difference quotients -----------------------------------------

/// q_j = (sigma(x, theta_j) - sigma(x', theta_j)) / ||x - x'||, flat m x d_out.
std::vector<double> q_ratio(const MeanFieldLayer& neurons, std::span<const double> x, std::span<const double> xp,
                            Activation act);

/// ||q(theta) - q(theta')|| / ||theta - theta'|| for two single neurons.
double q_param_ratio(const NeuronParams& a, const NeuronParams& b, std::span<const double> x,
                     std::span<const double> xp, Activation act);

struct QSweepConfig {
    std::size_t d_in = 4;
    std::size_t d_out = 4;
    std::size_t probes = 10000;
    double radius = 1.0;
    double theta_delta = 1e-3;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
};

/// Max observed parameter-Lipschitz ratio of q over a bounded-domain sweep.
double q_lipschitz_sweep(const QSweepConfig& cfg);

/// |L(thin) - L(wide)| with both estimated on identical probes.
double layer_lipschitz_gap(const MeanFieldLayer& wide, const MeanFieldLayer& thin, Activation act,
                           std::span<const std::vector<double>> points, const ProbeConfig& cfg);

// --- bound report -------------------------------------------------------------

struct GridRow {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t big_m = 0;
    std::size_t seeds = 0;
    /// Measured D[S_WIN, B] (mean over seeds).
    double discrepancy = 0.0;
    double ell_hat = 0.0;
};

struct BoundRow {
    GridRow grid;
    /// ell_hat * n / sqrt(m).
    double predictor = 0.0;
    /// log(D) - log(C * predictor).
    double residual = 0.0;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    double constant = 0.0;
    double width_slope = 0.0;
    double depth_slope = 0.0;
};

/// Fits D ~ C * ell * n / sqrt(m) in log space and the pooled within-group
/// slopes of log D against log m (fixed n) and log n (fixed m).
BoundReport bound_report(std::span<const GridRow> rows);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace winforge
