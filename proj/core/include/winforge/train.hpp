//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/data.hpp"
#include "winforge/net.hpp"
#include "winforge/seed.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace winforge {

// --- architecture & initialization -----------------------------------------

struct LayerShape {
    std::size_t d_in = 0;
    std::size_t d_out = 0;
    std::size_t width = 0;

    bool operator==(const LayerShape&) const = default;
};

/// Mean-field-only architecture description.
struct ArchSpec {
    Activation activation = Activation::Tanh;
    std::vector<LayerShape> layers;

    std::size_t depth() const noexcept { return layers.size(); }
    std::size_t input_dim() const { return layers.front().d_in; }
    std::size_t output_dim() const { return layers.back().d_out; }
    void validate() const;

    bool operator==(const ArchSpec&) const = default;
};

/// d -> d -> ... -> d -> 1 with n layers of width m.
ArchSpec thin_arch(std::size_t input_dim, std::size_t depth, std::size_t width,
                   Activation act = Activation::Tanh);

/// Reads the mean-field layer shapes off a network (linear blocks ignored).
ArchSpec arch_of(const Network& net);

/// Bounded parameter distribution: uniform(lo, hi) or a normal with the
/// given sigma truncated to [-clip, clip].
struct Distribution {
    enum class Kind { Uniform, TruncatedNormal };

    Kind kind = Kind::Uniform;
    double p0 = -1.0;  // uniform: lo; truncated normal: sigma
    double p1 = 1.0;   // uniform: hi; truncated normal: clip

    static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static Distribution truncated_normal(double sigma, double clip) { return {Kind::TruncatedNormal, sigma, clip}; }

    void validate() const;
    double sample(Rng& rng) const;

    bool operator==(const Distribution&) const = default;
};

struct LayerInit {
    Distribution dist;
    /// Ties output weights to input weights within a neuron:
    /// theta1[k] = coupling * theta0[k mod d_in] + noise, noise ~ dist.
    /// 0 draws every entry independently.
    double coupling = 0.0;

    bool operator==(const LayerInit&) const = default;
};

struct InitSpec {
    LayerInit base;
    /// Keyed by mean-field layer index.
    std::map<std::size_t, LayerInit> per_layer;

    const LayerInit& for_layer(std::size_t index) const;
    void validate() const;

    bool operator==(const InitSpec&) const = default;
};

/// Draws neurons i.i.d. per layer from a stream derived from (seed, layer).
Network init_network(const ArchSpec& arch, const InitSpec& init, std::uint64_t seed);
MeanFieldLayer init_layer(const LayerShape& shape, const LayerInit& init, std::uint64_t stream_seed);

// --- objectives --------------------------------------------------------------

struct ScalarLoss {
    double loss;
    double grad;
};
/// (pred - y)^2 and its derivative 2 (pred - y).
ScalarLoss mse_loss(double pred, double y);

struct VectorLoss {
    double loss;
    std::vector<double> grad;
};
/// (1/D) ||s - t||^2 and its gradient (2/D)(s - t).
VectorLoss imitation_loss(std::span<const double> student_out, std::span<const double> teacher_out);

// --- SGD -------------------------------------------------------------------

enum class Schedule { Constant, Cosine };

struct TrainConfig {
    double eta = 0.05;
    std::size_t steps = 0;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    Schedule schedule = Schedule::Constant;
    double eta_final = 0.0;
    std::optional<double> param_bound;
    std::size_t log_every = 1;
    /// Multiplies the step for a mean-field layer by its width m, so each
    /// neuron moves O(eta) regardless of m (mean-field SGD scaling).
    bool width_scaled_lr = false;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

/// Step size in effect at step t (t == steps gives the schedule endpoint).
double learning_rate(const TrainConfig& cfg, std::size_t t);

struct TraceEntry {
    std::size_t step;
    double loss;
    double eta;

    bool operator==(const TraceEntry&) const = default;
};

struct TrainTrace {
    std::vector<TraceEntry> entries;
    /// Full-dataset objective after the last step.
    double final_loss = 0.0;
    /// Full-dataset objective before the first step.
    double initial_loss = 0.0;

    bool operator==(const TrainTrace&) const = default;
};

/// What sgd_train minimizes.
struct LossSpec {
    enum class Kind { Task, Imitation };

    Kind kind = Kind::Task;
    /// Imitation only: the frozen teacher and the prefix lengths (in blocks)
    /// whose outputs are compared.
    const Network* teacher = nullptr;
    std::size_t teacher_blocks = 0;
    std::size_t student_blocks = 0;

    static LossSpec task() { return {}; }
    static LossSpec imitation(const Network& teacher, std::size_t teacher_blocks, std::size_t student_blocks) {
        return {Kind::Imitation, &teacher, teacher_blocks, student_blocks};
    }
};

struct TrainResult {
    Network net;
    TrainTrace trace;
};

/// Per-block trainable flags; empty means "all blocks".
using TrainMask = std::vector<bool>;

/// Seeded minibatch SGD. Batches are consecutive slices of per-epoch
/// shuffles whose permutation depends only on (cfg.seed, epoch).
TrainResult sgd_train(Network net, const Dataset& data, const TrainConfig& cfg, const LossSpec& loss = {},
                      const TrainMask& mask = {});

/// Mean objective over the whole dataset.
double dataset_loss(const Network& net, const Dataset& data, const LossSpec& loss = {});

/// Epoch permutation used by sgd_train; exposed for the determinism tests.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

/// Radially projects v onto the ball of the given radius.
void project_to_ball(std::span<double> v, double radius);

} // namespace winforge
