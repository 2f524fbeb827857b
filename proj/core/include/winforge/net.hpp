//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace winforge {

enum class Activation { Tanh, Sigmoid };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view name);

double activate(Activation act, double s) noexcept;
/// First derivative expressed through the activation value a = act(s).
double activate_d1_from_value(Activation act, double a) noexcept;
double activate_d1(Activation act, double s) noexcept;
double activate_d2(Activation act, double s) noexcept;

/// One mean-field unit: scalar pre-activation <theta0, z>, vector output
/// theta1 * act(<theta0, z>).
struct NeuronParams {
    std::vector<double> theta0;
    std::vector<double> theta1;
};

/// Layer computing (1/m) * sum_j theta1_j * act(<theta0_j, z>).
///
/// Parameters are stored neuron-major in two flat arrays (m x d_in and
/// m x d_out). The width m is derived from the array length so it can never
/// disagree with the neuron count.
class MeanFieldLayer {
public:
    MeanFieldLayer(std::size_t d_in, std::size_t d_out, std::vector<double> theta0,
                   std::vector<double> theta1);

    static MeanFieldLayer zeros(std::size_t d_in, std::size_t d_out, std::size_t width);
    static MeanFieldLayer from_neurons(std::span<const NeuronParams> neurons);

    std::size_t d_in() const noexcept { return d_in_; }
    std::size_t d_out() const noexcept { return d_out_; }
    std::size_t width() const noexcept { return theta0_.size() / d_in_; }
    std::size_t parameter_count() const noexcept { return theta0_.size() + theta1_.size(); }

    std::span<const double> theta0(std::size_t j) const { return {theta0_.data() + j * d_in_, d_in_}; }
    std::span<double> theta0(std::size_t j) { return {theta0_.data() + j * d_in_, d_in_}; }
    std::span<const double> theta1(std::size_t j) const { return {theta1_.data() + j * d_out_, d_out_}; }
    std::span<double> theta1(std::size_t j) { return {theta1_.data() + j * d_out_, d_out_}; }

    std::span<const double> theta0_flat() const { return theta0_; }
    std::span<double> theta0_flat() { return theta0_; }
    std::span<const double> theta1_flat() const { return theta1_; }
    std::span<double> theta1_flat() { return theta1_; }

    NeuronParams neuron(std::size_t j) const;

    bool operator==(const MeanFieldLayer&) const = default;

private:
    std::size_t d_in_;
    std::size_t d_out_;
    std::vector<double> theta0_;
    std::vector<double> theta1_;
};

/// Bias-free linear map z -> A z, A stored row-major.
class LinearMap {
public:
    LinearMap(std::size_t rows, std::size_t cols, std::vector<double> a);

    static LinearMap identity(std::size_t n);
    static LinearMap zeros(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t parameter_count() const noexcept { return a_.size(); }

    double at(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }
    double& at(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    std::span<const double> data() const { return a_; }
    std::span<double> data() { return a_; }

    bool operator==(const LinearMap&) const = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> a_;
};

using Block = std::variant<MeanFieldLayer, LinearMap>;

std::size_t block_in_dim(const Block& block) noexcept;
std::size_t block_out_dim(const Block& block) noexcept;
std::size_t block_parameter_count(const Block& block) noexcept;
inline bool is_linear(const Block& block) noexcept { return std::holds_alternative<LinearMap>(block); }
inline bool is_mean_field(const Block& block) noexcept { return std::holds_alternative<MeanFieldLayer>(block); }

/// Ordered chain of blocks sharing one activation. The constructor checks
/// the dimension chain; input/output dims are read off the end blocks.
class Network {
public:
    Network(Activation activation, std::vector<Block> blocks);

    Activation activation() const noexcept { return activation_; }
    std::size_t size() const noexcept { return blocks_.size(); }
    std::size_t input_dim() const noexcept { return block_in_dim(blocks_.front()); }
    std::size_t output_dim() const noexcept { return block_out_dim(blocks_.back()); }
    std::size_t parameter_count() const noexcept;
    std::size_t mean_field_count() const noexcept;

    const Block& block(std::size_t i) const { return blocks_.at(i); }
    Block& block(std::size_t i) { return blocks_.at(i); }
    std::span<const Block> blocks() const noexcept { return blocks_; }

    /// Re-checks the dimension chain and finiteness of every parameter.
    void validate() const;

    bool operator==(const Network&) const = default;

private:
    Activation activation_;
    std::vector<Block> blocks_;
};

/// Per-block intermediates of one forward pass over blocks [first, first + inputs.size()).
struct ForwardCache {
    std::size_t first = 0;
    std::vector<std::vector<double>> inputs;
    /// Per-neuron pre-activations <theta0_j, z>; empty for linear blocks.
    std::vector<std::vector<double>> preacts;
    /// act(preacts), kept so the backward pass never re-evaluates the activation.
    std::vector<std::vector<double>> acts;
    std::vector<double> output;

    std::size_t size() const noexcept { return inputs.size(); }
};

/// Gradients shaped exactly like the network they came from.
struct GradientSet {
    std::vector<Block> blocks;
    std::vector<double> input;

    static GradientSet zeros_like(const Network& net);
    void clear();
};

// --- unit operations -------------------------------------------------------

std::vector<double> layer_forward(const MeanFieldLayer& layer, std::span<const double> z, Activation act);

struct LayerGradient {
    std::vector<double> theta0;  // m x d_in
    std::vector<double> theta1;  // m x d_out
    std::vector<double> z;
};
LayerGradient layer_backward(const MeanFieldLayer& layer, std::span<const double> z,
                             std::span<const double> upstream, Activation act);

std::vector<double> linear_forward(const LinearMap& lin, std::span<const double> z);

struct LinearGradient {
    std::vector<double> a;  // rows x cols
    std::vector<double> z;
};
LinearGradient linear_backward(const LinearMap& lin, std::span<const double> z, std::span<const double> upstream);

// --- network operations ----------------------------------------------------

struct ForwardResult {
    std::vector<double> y;
    ForwardCache cache;
};

ForwardResult network_forward(const Network& net, std::span<const double> x);
GradientSet network_backward(const Network& net, const ForwardCache& cache, std::span<const double> upstream);

/// Output only; no cache retained.
std::vector<double> network_eval(const Network& net, std::span<const double> x);

/// Evaluates blocks [first, last) on z. Buffers in `cache` are reused when
/// already sized, so calling this in a loop does not allocate.
void forward_range(const Network& net, std::size_t first, std::size_t last, std::span<const double> z,
                   ForwardCache& cache);
std::vector<double> eval_range(const Network& net, std::size_t first, std::size_t last, std::span<const double> z);

/// Reverse pass over the blocks recorded in `cache`. Parameter gradients
/// are added into `grads` (which must mirror `net`) for blocks at index
/// >= `lowest`; the pass stops below `lowest`. If `grad_input` is non-empty
/// it receives d/d(input of the first cached block) and `lowest` is ignored.
void backward_accumulate(const Network& net, const ForwardCache& cache, std::span<const double> upstream,
                         GradientSet& grads, std::size_t lowest, std::span<double> grad_input = {});

/// Jacobian-vector product J v of the cached range at the cached input.
std::vector<double> range_jvp(const Network& net, const ForwardCache& cache, std::span<const double> v);
/// Vector-Jacobian product J^T u of the cached range at the cached input.
std::vector<double> range_vjp(const Network& net, const ForwardCache& cache, std::span<const double> u);

/// Checks every entry is finite; throws ErrorKind::NonFinite naming `what`.
void require_finite(std::span<const double> values, std::string_view what);

} // namespace winforge
