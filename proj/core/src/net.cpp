//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/net.hpp"
#include "winforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace winforge {

namespace {

std::string dims(std::size_t expected, std::size_t actual) {
    return "expected " + std::to_string(expected) + ", got " + std::to_string(actual);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void mean_field_forward_into(const MeanFieldLayer& layer, std::span<const double> z, Activation act,
                             std::span<double> out, std::span<double> preact, std::span<double> acts) {
    const std::size_t m = layer.width();
    const std::size_t d_in = layer.d_in();
    const std::size_t d_out = layer.d_out();
    const double* t0 = layer.theta0_flat().data();
    const double* t1 = layer.theta1_flat().data();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j, t0 += d_in, t1 += d_out) {
        double s = 0.0;
        for (std::size_t i = 0; i < d_in; ++i) s += t0[i] * z[i];
        const double a = activate(act, s);
        preact[j] = s;
        acts[j] = a;
        for (std::size_t k = 0; k < d_out; ++k) out[k] += t1[k] * a;
    }
    const double md = static_cast<double>(m);
    for (double& v : out) v /= md;
}

void linear_forward_into(const LinearMap& lin, std::span<const double> z, std::span<double> out) {
    const double* a = lin.data().data();
    for (std::size_t r = 0; r < lin.rows(); ++r, a += lin.cols()) {
        double s = 0.0;
        for (std::size_t c = 0; c < lin.cols(); ++c) s += a[c] * z[c];
        out[r] = s;
    }
}

// Adds parameter gradients (if g0/g1 non-null) and writes grad_z (if non-empty).
void mean_field_backward_into(const MeanFieldLayer& layer, std::span<const double> z, std::span<const double> acts,
                              std::span<const double> upstream, Activation act, double* g0, double* g1,
                              std::span<double> grad_z) {
    const std::size_t m = layer.width();
    const std::size_t d_in = layer.d_in();
    const std::size_t d_out = layer.d_out();
    const double inv_m = 1.0 / static_cast<double>(m);
    const double* t0 = layer.theta0_flat().data();
    const double* t1 = layer.theta1_flat().data();
    std::fill(grad_z.begin(), grad_z.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j, t0 += d_in, t1 += d_out) {
        double c = 0.0;
        for (std::size_t k = 0; k < d_out; ++k) c += t1[k] * upstream[k];
        const double coef = c * activate_d1_from_value(act, acts[j]) * inv_m;
        if (g1 != nullptr) {
            const double w = acts[j] * inv_m;
            double* row = g1 + j * d_out;
            for (std::size_t k = 0; k < d_out; ++k) row[k] += w * upstream[k];
        }
        if (g0 != nullptr) {
            double* row = g0 + j * d_in;
            for (std::size_t i = 0; i < d_in; ++i) row[i] += coef * z[i];
        }
        if (!grad_z.empty()) {
            for (std::size_t i = 0; i < d_in; ++i) grad_z[i] += coef * t0[i];
        }
    }
}

void linear_backward_into(const LinearMap& lin, std::span<const double> z, std::span<const double> upstream,
                          double* ga, std::span<double> grad_z) {
    const std::size_t rows = lin.rows();
    const std::size_t cols = lin.cols();
    if (ga != nullptr) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += upstream[r] * z[c];
    }
    if (!grad_z.empty()) {
        std::fill(grad_z.begin(), grad_z.end(), 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double u = upstream[r];
            for (std::size_t c = 0; c < cols; ++c) grad_z[c] += lin.at(r, c) * u;
        }
    }
}

void check_block_input(const Block& block, std::size_t index, std::size_t actual) {
    const std::size_t expected = block_in_dim(block);
    if (expected != actual)
        fail(ErrorKind::DimensionMismatch, "block " + std::to_string(index) + " input: " + dims(expected, actual));
}

} // namespace

// --- activations -----------------------------------------------------------

std::string_view to_string(Activation act) { return act == Activation::Tanh ? "tanh" : "sigmoid"; }

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    fail(ErrorKind::InvalidConfig, "unknown activation '" + std::string(name) + "'");
}

double activate(Activation act, double s) noexcept {
    if (act == Activation::Tanh) return std::tanh(s);
    return 1.0 / (1.0 + std::exp(-s));
}

double activate_d1_from_value(Activation act, double a) noexcept {
    if (act == Activation::Tanh) return 1.0 - a * a;
    return a * (1.0 - a);
}

double activate_d1(Activation act, double s) noexcept { return activate_d1_from_value(act, activate(act, s)); }

double activate_d2(Activation act, double s) noexcept {
    const double a = activate(act, s);
    if (act == Activation::Tanh) return -2.0 * a * (1.0 - a * a);
    return a * (1.0 - a) * (1.0 - 2.0 * a);
}

// --- parameter containers --------------------------------------------------

MeanFieldLayer::MeanFieldLayer(std::size_t d_in, std::size_t d_out, std::vector<double> theta0,
                               std::vector<double> theta1)
    : d_in_(d_in), d_out_(d_out), theta0_(std::move(theta0)), theta1_(std::move(theta1)) {
    require(d_in_ > 0 && d_out_ > 0, ErrorKind::InvalidArgument, "mean-field layer dims must be positive");
    require(!theta0_.empty() && theta0_.size() % d_in_ == 0, ErrorKind::MalformedArray,
            "theta0 length " + std::to_string(theta0_.size()) + " is not a positive multiple of d_in " +
                std::to_string(d_in_));
    require(theta1_.size() == width() * d_out_, ErrorKind::MalformedArray,
            "theta1 length: " + dims(width() * d_out_, theta1_.size()));
}

MeanFieldLayer MeanFieldLayer::zeros(std::size_t d_in, std::size_t d_out, std::size_t width) {
    require(width > 0, ErrorKind::InvalidArgument, "mean-field layer width must be positive");
    return MeanFieldLayer(d_in, d_out, std::vector<double>(width * d_in), std::vector<double>(width * d_out));
}

MeanFieldLayer MeanFieldLayer::from_neurons(std::span<const NeuronParams> neurons) {
    require(!neurons.empty(), ErrorKind::InvalidArgument, "mean-field layer needs at least one neuron");
    const std::size_t d_in = neurons.front().theta0.size();
    const std::size_t d_out = neurons.front().theta1.size();
    std::vector<double> t0;
    std::vector<double> t1;
    t0.reserve(neurons.size() * d_in);
    t1.reserve(neurons.size() * d_out);
    for (std::size_t j = 0; j < neurons.size(); ++j) {
        const auto& n = neurons[j];
        require(n.theta0.size() == d_in && n.theta1.size() == d_out, ErrorKind::DimensionMismatch,
                "neuron " + std::to_string(j) + " shape differs from neuron 0");
        t0.insert(t0.end(), n.theta0.begin(), n.theta0.end());
        t1.insert(t1.end(), n.theta1.begin(), n.theta1.end());
    }
    return MeanFieldLayer(d_in, d_out, std::move(t0), std::move(t1));
}

NeuronParams MeanFieldLayer::neuron(std::size_t j) const {
    auto a = theta0(j);
    auto b = theta1(j);
    return {{a.begin(), a.end()}, {b.begin(), b.end()}};
}

LinearMap::LinearMap(std::size_t rows, std::size_t cols, std::vector<double> a)
    : rows_(rows), cols_(cols), a_(std::move(a)) {
    require(rows_ > 0 && cols_ > 0, ErrorKind::InvalidArgument, "linear map dims must be positive");
    require(a_.size() == rows_ * cols_, ErrorKind::MalformedArray,
            "linear map array length: " + dims(rows_ * cols_, a_.size()));
}

LinearMap LinearMap::identity(std::size_t n) {
    LinearMap lin = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) lin.at(i, i) = 1.0;
    return lin;
}

LinearMap LinearMap::zeros(std::size_t rows, std::size_t cols) {
    return LinearMap(rows, cols, std::vector<double>(rows * cols));
}

std::size_t block_in_dim(const Block& block) noexcept {
    return std::visit(overloaded{[](const MeanFieldLayer& l) { return l.d_in(); },
                                 [](const LinearMap& l) { return l.cols(); }},
                      block);
}

std::size_t block_out_dim(const Block& block) noexcept {
    return std::visit(overloaded{[](const MeanFieldLayer& l) { return l.d_out(); },
                                 [](const LinearMap& l) { return l.rows(); }},
                      block);
}

std::size_t block_parameter_count(const Block& block) noexcept {
    return std::visit([](const auto& b) { return b.parameter_count(); }, block);
}

Network::Network(Activation activation, std::vector<Block> blocks)
    : activation_(activation), blocks_(std::move(blocks)) {
    require(!blocks_.empty(), ErrorKind::InvalidArgument, "network needs at least one block");
    for (std::size_t i = 1; i < blocks_.size(); ++i) {
        const std::size_t out = block_out_dim(blocks_[i - 1]);
        const std::size_t in = block_in_dim(blocks_[i]);
        require(out == in, ErrorKind::DimensionChain,
                "block " + std::to_string(i - 1) + " outputs " + std::to_string(out) + " but block " +
                    std::to_string(i) + " takes " + std::to_string(in));
    }
}

std::size_t Network::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks_) n += block_parameter_count(b);
    return n;
}

std::size_t Network::mean_field_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(blocks_.begin(), blocks_.end(), is_mean_field));
}

void Network::validate() const {
    Network(activation_, blocks_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const std::string what = "block " + std::to_string(i) + " parameters";
        std::visit(overloaded{[&](const MeanFieldLayer& l) {
                                  require_finite(l.theta0_flat(), what);
                                  require_finite(l.theta1_flat(), what);
                              },
                              [&](const LinearMap& l) { require_finite(l.data(), what); }},
                   blocks_[i]);
    }
}

GradientSet GradientSet::zeros_like(const Network& net) {
    GradientSet g;
    g.blocks.reserve(net.size());
    for (const auto& b : net.blocks()) {
        g.blocks.push_back(std::visit(
            overloaded{[](const MeanFieldLayer& l) -> Block {
                           return MeanFieldLayer::zeros(l.d_in(), l.d_out(), l.width());
                       },
                       [](const LinearMap& l) -> Block { return LinearMap::zeros(l.rows(), l.cols()); }},
            b));
    }
    g.input.assign(net.input_dim(), 0.0);
    return g;
}

void GradientSet::clear() {
    for (auto& b : blocks) {
        std::visit(overloaded{[](MeanFieldLayer& l) {
                                  std::ranges::fill(l.theta0_flat(), 0.0);
                                  std::ranges::fill(l.theta1_flat(), 0.0);
                              },
                              [](LinearMap& l) { std::ranges::fill(l.data(), 0.0); }},
                   b);
    }
    std::ranges::fill(input, 0.0);
}

void require_finite(std::span<const double> values, std::string_view what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            fail(ErrorKind::NonFinite, std::string(what) + ": non-finite value at entry " + std::to_string(i));
    }
}

// --- unit operations -------------------------------------------------------

std::vector<double> layer_forward(const MeanFieldLayer& layer, std::span<const double> z, Activation act) {
    require(z.size() == layer.d_in(), ErrorKind::DimensionMismatch,
            "mean-field layer input: " + dims(layer.d_in(), z.size()));
    require_finite(z, "mean-field layer input");
    std::vector<double> out(layer.d_out());
    std::vector<double> pre(layer.width());
    std::vector<double> acts(layer.width());
    mean_field_forward_into(layer, z, act, out, pre, acts);
    require_finite(out, "mean-field layer output");
    return out;
}

LayerGradient layer_backward(const MeanFieldLayer& layer, std::span<const double> z,
                             std::span<const double> upstream, Activation act) {
    require(z.size() == layer.d_in(), ErrorKind::DimensionMismatch,
            "mean-field layer input: " + dims(layer.d_in(), z.size()));
    require(upstream.size() == layer.d_out(), ErrorKind::DimensionMismatch,
            "mean-field layer upstream: " + dims(layer.d_out(), upstream.size()));
    require_finite(upstream, "mean-field layer upstream");
    std::vector<double> out(layer.d_out());
    std::vector<double> pre(layer.width());
    std::vector<double> acts(layer.width());
    mean_field_forward_into(layer, z, act, out, pre, acts);
    LayerGradient g{std::vector<double>(layer.width() * layer.d_in()),
                    std::vector<double>(layer.width() * layer.d_out()), std::vector<double>(layer.d_in())};
    mean_field_backward_into(layer, z, acts, upstream, act, g.theta0.data(), g.theta1.data(), g.z);
    return g;
}

std::vector<double> linear_forward(const LinearMap& lin, std::span<const double> z) {
    require(z.size() == lin.cols(), ErrorKind::DimensionMismatch, "linear map input: " + dims(lin.cols(), z.size()));
    std::vector<double> out(lin.rows());
    linear_forward_into(lin, z, out);
    return out;
}

LinearGradient linear_backward(const LinearMap& lin, std::span<const double> z, std::span<const double> upstream) {
    require(z.size() == lin.cols(), ErrorKind::DimensionMismatch, "linear map input: " + dims(lin.cols(), z.size()));
    require(upstream.size() == lin.rows(), ErrorKind::DimensionMismatch,
            "linear map upstream: " + dims(lin.rows(), upstream.size()));
    LinearGradient g{std::vector<double>(lin.rows() * lin.cols()), std::vector<double>(lin.cols())};
    linear_backward_into(lin, z, upstream, g.a.data(), g.z);
    return g;
}

// --- network operations ----------------------------------------------------

void forward_range(const Network& net, std::size_t first, std::size_t last, std::span<const double> z,
                   ForwardCache& cache) {
    require(first < last && last <= net.size(), ErrorKind::InvalidArgument,
            "block range [" + std::to_string(first) + ", " + std::to_string(last) + ") outside network of " +
                std::to_string(net.size()) + " blocks");
    const std::size_t count = last - first;
    cache.first = first;
    cache.inputs.resize(count);
    cache.preacts.resize(count);
    cache.acts.resize(count);

    check_block_input(net.block(first), first, z.size());
    cache.inputs[0].assign(z.begin(), z.end());
    require_finite(cache.inputs[0], "block " + std::to_string(first) + " input");
    for (std::size_t b = first; b < last; ++b) {
        const Block& block = net.block(b);
        const std::size_t slot = b - first;
        const auto& in = cache.inputs[slot];
        check_block_input(block, b, in.size());
        auto& out = (b + 1 < last) ? cache.inputs[slot + 1] : cache.output;
        out.resize(block_out_dim(block));
        if (const auto* layer = std::get_if<MeanFieldLayer>(&block)) {
            cache.preacts[slot].resize(layer->width());
            cache.acts[slot].resize(layer->width());
            mean_field_forward_into(*layer, in, net.activation(), out, cache.preacts[slot], cache.acts[slot]);
        } else {
            cache.preacts[slot].clear();
            cache.acts[slot].clear();
            linear_forward_into(std::get<LinearMap>(block), in, out);
        }
        for (double v : out) {
            if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "block " + std::to_string(b) + " produced a non-finite value");
        }
    }
}

ForwardResult network_forward(const Network& net, std::span<const double> x) {
    ForwardResult r;
    forward_range(net, 0, net.size(), x, r.cache);
    r.y = r.cache.output;
    return r;
}

std::vector<double> eval_range(const Network& net, std::size_t first, std::size_t last, std::span<const double> z) {
    ForwardCache cache;
    forward_range(net, first, last, z, cache);
    return std::move(cache.output);
}

std::vector<double> network_eval(const Network& net, std::span<const double> x) {
    return eval_range(net, 0, net.size(), x);
}

void backward_accumulate(const Network& net, const ForwardCache& cache, std::span<const double> upstream,
                         GradientSet& grads, std::size_t lowest, std::span<double> grad_input) {
    const std::size_t first = cache.first;
    const std::size_t last = first + cache.size();
    require(cache.size() > 0 && last <= net.size(), ErrorKind::DimensionMismatch,
            "forward cache does not match network");
    require(grads.blocks.size() == net.size(), ErrorKind::DimensionMismatch,
            "gradient set does not mirror network");
    require(upstream.size() == cache.output.size(), ErrorKind::DimensionMismatch,
            "upstream: " + dims(cache.output.size(), upstream.size()));
    require_finite(upstream, "upstream gradient");
    const bool want_input = !grad_input.empty();
    if (want_input) {
        require(grad_input.size() == cache.inputs.front().size(), ErrorKind::DimensionMismatch,
                "input gradient: " + dims(cache.inputs.front().size(), grad_input.size()));
        lowest = first;
    }
    lowest = std::max(lowest, first);

    std::vector<double> up(upstream.begin(), upstream.end());
    std::vector<double> down;
    for (std::size_t b = last; b-- > lowest;) {
        const std::size_t slot = b - first;
        const Block& block = net.block(b);
        require(cache.inputs[slot].size() == block_in_dim(block), ErrorKind::DimensionMismatch,
                "forward cache does not match block " + std::to_string(b));
        const bool need_down = b > lowest || want_input;
        down.assign(need_down ? block_in_dim(block) : 0, 0.0);
        if (const auto* layer = std::get_if<MeanFieldLayer>(&block)) {
            require(cache.acts[slot].size() == layer->width(), ErrorKind::DimensionMismatch,
                    "forward cache does not match block " + std::to_string(b));
            auto& g = std::get<MeanFieldLayer>(grads.blocks[b]);
            mean_field_backward_into(*layer, cache.inputs[slot], cache.acts[slot], up, net.activation(),
                                     g.theta0_flat().data(), g.theta1_flat().data(), down);
        } else {
            auto& g = std::get<LinearMap>(grads.blocks[b]);
            linear_backward_into(std::get<LinearMap>(block), cache.inputs[slot], up, g.data().data(), down);
        }
        for (double v : down) {
            if (!std::isfinite(v))
                fail(ErrorKind::NonFinite, "backward pass produced a non-finite value at block " + std::to_string(b));
        }
        up.swap(down);
    }
    if (want_input) std::copy(up.begin(), up.end(), grad_input.begin());
}

GradientSet network_backward(const Network& net, const ForwardCache& cache, std::span<const double> upstream) {
    require(cache.first == 0 && cache.size() == net.size(), ErrorKind::DimensionMismatch,
            "forward cache covers " + std::to_string(cache.size()) + " blocks, network has " +
                std::to_string(net.size()));
    GradientSet g = GradientSet::zeros_like(net);
    backward_accumulate(net, cache, upstream, g, 0, g.input);
    return g;
}

std::vector<double> range_jvp(const Network& net, const ForwardCache& cache, std::span<const double> v) {
    require(cache.size() > 0, ErrorKind::InvalidArgument, "empty forward cache");
    require(v.size() == cache.inputs.front().size(), ErrorKind::DimensionMismatch,
            "tangent: " + dims(cache.inputs.front().size(), v.size()));
    std::vector<double> cur(v.begin(), v.end());
    std::vector<double> next;
    for (std::size_t slot = 0; slot < cache.size(); ++slot) {
        const Block& block = net.block(cache.first + slot);
        next.assign(block_out_dim(block), 0.0);
        if (const auto* layer = std::get_if<MeanFieldLayer>(&block)) {
            const std::size_t m = layer->width();
            for (std::size_t j = 0; j < m; ++j) {
                const auto t0 = layer->theta0(j);
                double s = 0.0;
                for (std::size_t i = 0; i < t0.size(); ++i) s += t0[i] * cur[i];
                const double w = s * activate_d1_from_value(net.activation(), cache.acts[slot][j]);
                const auto t1 = layer->theta1(j);
                for (std::size_t k = 0; k < t1.size(); ++k) next[k] += t1[k] * w;
            }
            const double md = static_cast<double>(m);
            for (double& x : next) x /= md;
        } else {
            linear_forward_into(std::get<LinearMap>(block), cur, next);
        }
        cur.swap(next);
    }
    return cur;
}

std::vector<double> range_vjp(const Network& net, const ForwardCache& cache, std::span<const double> u) {
    require(cache.size() > 0, ErrorKind::InvalidArgument, "empty forward cache");
    require(u.size() == cache.output.size(), ErrorKind::DimensionMismatch,
            "cotangent: " + dims(cache.output.size(), u.size()));
    std::vector<double> up(u.begin(), u.end());
    std::vector<double> down;
    for (std::size_t slot = cache.size(); slot-- > 0;) {
        const Block& block = net.block(cache.first + slot);
        down.assign(block_in_dim(block), 0.0);
        if (const auto* layer = std::get_if<MeanFieldLayer>(&block)) {
            mean_field_backward_into(*layer, cache.inputs[slot], cache.acts[slot], up, net.activation(), nullptr,
                                     nullptr, down);
        } else {
            linear_backward_into(std::get<LinearMap>(block), cache.inputs[slot], up, nullptr, down);
        }
        up.swap(down);
    }
    return up;
}

} // namespace winforge
