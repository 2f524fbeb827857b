//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/train.hpp"
#include "winforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace winforge {

// --- architecture & initialization -----------------------------------------

void ArchSpec::validate() const {
    require(!layers.empty(), ErrorKind::InvalidConfig, "architecture has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        require(l.d_in > 0 && l.d_out > 0 && l.width > 0, ErrorKind::InvalidConfig,
                "layer " + std::to_string(i) + " has a zero dimension or width");
        if (i > 0)
            require(layers[i - 1].d_out == l.d_in, ErrorKind::DimensionChain,
                    "layer " + std::to_string(i - 1) + " outputs " + std::to_string(layers[i - 1].d_out) +
                        " but layer " + std::to_string(i) + " takes " + std::to_string(l.d_in));
    }
}

ArchSpec thin_arch(std::size_t input_dim, std::size_t depth, std::size_t width, Activation act) {
    require(depth > 0, ErrorKind::InvalidConfig, "depth must be positive");
    ArchSpec arch{act, {}};
    for (std::size_t i = 0; i < depth; ++i)
        arch.layers.push_back({input_dim, i + 1 == depth ? std::size_t{1} : input_dim, width});
    arch.validate();
    return arch;
}

ArchSpec arch_of(const Network& net) {
    ArchSpec arch{net.activation(), {}};
    for (const auto& b : net.blocks()) {
        if (const auto* l = std::get_if<MeanFieldLayer>(&b)) arch.layers.push_back({l->d_in(), l->d_out(), l->width()});
    }
    return arch;
}

void Distribution::validate() const {
    require(std::isfinite(p0) && std::isfinite(p1), ErrorKind::InvalidConfig,
            "initialization distribution parameters must be finite");
    if (kind == Kind::Uniform) {
        require(p0 <= p1, ErrorKind::InvalidConfig, "uniform initialization needs lo <= hi");
    } else {
        require(p0 >= 0.0, ErrorKind::InvalidConfig, "truncated normal sigma must be non-negative");
        require(p1 > 0.0, ErrorKind::InvalidConfig, "truncated normal clip must be positive");
    }
}

double Distribution::sample(Rng& rng) const {
    if (kind == Kind::Uniform) return rng.uniform(p0, p1);
    if (p0 == 0.0) return 0.0;
    for (;;) {
        const double v = p0 * rng.normal();
        if (std::abs(v) <= p1) return v;
    }
}

const LayerInit& InitSpec::for_layer(std::size_t index) const {
    auto it = per_layer.find(index);
    return it == per_layer.end() ? base : it->second;
}

void InitSpec::validate() const {
    base.dist.validate();
    require(std::isfinite(base.coupling), ErrorKind::InvalidConfig, "coupling must be finite");
    for (const auto& [idx, li] : per_layer) {
        li.dist.validate();
        require(std::isfinite(li.coupling), ErrorKind::InvalidConfig,
                "coupling for layer " + std::to_string(idx) + " must be finite");
    }
}

MeanFieldLayer init_layer(const LayerShape& shape, const LayerInit& init, std::uint64_t stream_seed) {
    init.dist.validate();
    Rng rng(stream_seed);
    std::vector<double> t0(shape.width * shape.d_in);
    std::vector<double> t1(shape.width * shape.d_out);
    for (std::size_t j = 0; j < shape.width; ++j) {
        double* a = t0.data() + j * shape.d_in;
        double* b = t1.data() + j * shape.d_out;
        for (std::size_t i = 0; i < shape.d_in; ++i) a[i] = init.dist.sample(rng);
        for (std::size_t k = 0; k < shape.d_out; ++k) b[k] = init.coupling * a[k % shape.d_in] + init.dist.sample(rng);
    }
    return MeanFieldLayer(shape.d_in, shape.d_out, std::move(t0), std::move(t1));
}

Network init_network(const ArchSpec& arch, const InitSpec& init, std::uint64_t seed) {
    arch.validate();
    init.validate();
    std::vector<Block> blocks;
    blocks.reserve(arch.depth());
    for (std::size_t i = 0; i < arch.depth(); ++i)
        blocks.emplace_back(init_layer(arch.layers[i], init.for_layer(i), derive_seed(seed, {tag::kInit, i})));
    return Network(arch.activation, std::move(blocks));
}

// --- objectives --------------------------------------------------------------

ScalarLoss mse_loss(double pred, double y) {
    require(std::isfinite(pred) && std::isfinite(y), ErrorKind::NonFinite, "mse_loss: non-finite input");
    const double r = pred - y;
    return {r * r, 2.0 * r};
}

VectorLoss imitation_loss(std::span<const double> student_out, std::span<const double> teacher_out) {
    require(student_out.size() == teacher_out.size() && !student_out.empty(), ErrorKind::DimensionMismatch,
            "imitation_loss: student has " + std::to_string(student_out.size()) + " outputs, teacher " +
                std::to_string(teacher_out.size()));
    const double inv_d = 1.0 / static_cast<double>(student_out.size());
    VectorLoss out{0.0, std::vector<double>(student_out.size())};
    for (std::size_t i = 0; i < student_out.size(); ++i) {
        const double r = student_out[i] - teacher_out[i];
        out.loss += r * r;
        out.grad[i] = 2.0 * inv_d * r;
    }
    out.loss *= inv_d;
    require(std::isfinite(out.loss), ErrorKind::NonFinite, "imitation_loss: non-finite loss");
    return out;
}

namespace {

/// Per-sample objective with imitation targets precomputed once (the
/// teacher is frozen for the whole call).
class Objective {
public:
    Objective(const Network& student, const Dataset& data, const LossSpec& spec) : data_(data), kind_(spec.kind) {
        require(data.dim == student.input_dim(), ErrorKind::DimensionMismatch,
                "dataset dim " + std::to_string(data.dim) + " != network input " + std::to_string(student.input_dim()));
        if (kind_ == LossSpec::Kind::Task) {
            end_ = student.size();
            require(student.output_dim() == 1, ErrorKind::DimensionMismatch, "task loss needs a scalar-output network");
            return;
        }
        require(spec.teacher != nullptr, ErrorKind::InvalidArgument, "imitation loss without a teacher");
        const Network& teacher = *spec.teacher;
        require(spec.teacher_blocks >= 1 && spec.teacher_blocks <= teacher.size(), ErrorKind::InvalidArgument,
                "teacher prefix length out of range");
        require(spec.student_blocks >= 1 && spec.student_blocks <= student.size(), ErrorKind::InvalidArgument,
                "student prefix length out of range");
        require(teacher.input_dim() == data.dim, ErrorKind::DimensionMismatch, "teacher input dim != dataset dim");
        end_ = spec.student_blocks;
        width_ = block_out_dim(teacher.block(spec.teacher_blocks - 1));
        require(block_out_dim(student.block(end_ - 1)) == width_, ErrorKind::DimensionMismatch,
                "student prefix output " + std::to_string(block_out_dim(student.block(end_ - 1))) +
                    " != teacher prefix output " + std::to_string(width_));
        targets_.resize(data.size() * width_);
        ForwardCache cache;
        for (std::size_t i = 0; i < data.size(); ++i) {
            forward_range(teacher, 0, spec.teacher_blocks, data.x(i), cache);
            std::copy(cache.output.begin(), cache.output.end(), targets_.begin() + static_cast<std::ptrdiff_t>(i * width_));
        }
    }

    std::size_t end() const noexcept { return end_; }

    /// Forward sample i, return its loss and write d(loss)/d(output) into grad.
    double sample(const Network& net, std::size_t i, ForwardCache& cache, std::vector<double>& grad) const {
        forward_range(net, 0, end_, data_.x(i), cache);
        if (kind_ == LossSpec::Kind::Task) {
            const auto l = mse_loss(cache.output[0], data_.y(i));
            grad.assign(1, l.grad);
            return l.loss;
        }
        auto l = imitation_loss(cache.output, {targets_.data() + i * width_, width_});
        grad = std::move(l.grad);
        return l.loss;
    }

    double mean(const Network& net) const {
        ForwardCache cache;
        std::vector<double> grad;
        double total = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) total += sample(net, i, cache, grad);
        return total / static_cast<double>(data_.size());
    }

private:
    const Dataset& data_;
    LossSpec::Kind kind_;
    std::size_t end_ = 0;
    std::size_t width_ = 1;
    std::vector<double> targets_;
};

template <class F>
void for_each_param_block(Block& params, Block& grads, F&& f) {
    if (auto* l = std::get_if<MeanFieldLayer>(&params)) {
        auto& g = std::get<MeanFieldLayer>(grads);
        f(l->theta0_flat(), g.theta0_flat(), l->d_in(), static_cast<double>(l->width()));
        f(l->theta1_flat(), g.theta1_flat(), l->d_out(), static_cast<double>(l->width()));
    } else {
        auto& lin = std::get<LinearMap>(params);
        f(lin.data(), std::get<LinearMap>(grads).data(), lin.cols(), 1.0);
    }
}

void clear_block(Block& b) {
    if (auto* l = std::get_if<MeanFieldLayer>(&b)) {
        std::ranges::fill(l->theta0_flat(), 0.0);
        std::ranges::fill(l->theta1_flat(), 0.0);
    } else {
        std::ranges::fill(std::get<LinearMap>(b).data(), 0.0);
    }
}

} // namespace

// --- SGD -------------------------------------------------------------------

void TrainConfig::validate() const {
    require(std::isfinite(eta) && eta > 0.0, ErrorKind::InvalidConfig, "eta must be positive");
    require(batch_size > 0, ErrorKind::InvalidConfig, "batch_size must be positive");
    require(log_every > 0, ErrorKind::InvalidConfig, "log_every must be positive");
    require(std::isfinite(eta_final) && eta_final >= 0.0, ErrorKind::InvalidConfig, "eta_final must be >= 0");
    if (param_bound)
        require(std::isfinite(*param_bound) && *param_bound > 0.0, ErrorKind::InvalidConfig,
                "param_bound must be positive");
}

double learning_rate(const TrainConfig& cfg, std::size_t t) {
    if (cfg.schedule == Schedule::Constant || cfg.steps == 0) return cfg.eta;
    if (t >= cfg.steps) return cfg.eta_final;
    const double progress = static_cast<double>(t) / static_cast<double>(cfg.steps);
    return cfg.eta_final + 0.5 * (cfg.eta - cfg.eta_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {tag::kShuffle, epoch}));
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

void project_to_ball(std::span<double> v, double radius) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm <= radius) return;
    const double s = radius / norm;
    for (double& x : v) x *= s;
}

double dataset_loss(const Network& net, const Dataset& data, const LossSpec& loss) {
    require(data.size() > 0, ErrorKind::InvalidArgument, "dataset is empty");
    return Objective(net, data, loss).mean(net);
}

TrainResult sgd_train(Network net, const Dataset& data, const TrainConfig& cfg, const LossSpec& loss,
                      const TrainMask& mask_in) {
    cfg.validate();
    require(data.size() > 0, ErrorKind::InvalidArgument, "dataset is empty");
    require(cfg.batch_size <= data.size(), ErrorKind::InvalidConfig,
            "batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " + std::to_string(data.size()));
    TrainMask mask = mask_in.empty() ? TrainMask(net.size(), true) : mask_in;
    require(mask.size() == net.size(), ErrorKind::InvalidArgument,
            "mask has " + std::to_string(mask.size()) + " entries for " + std::to_string(net.size()) + " blocks");
    const auto first_trainable = std::find(mask.begin(), mask.end(), true);
    require(first_trainable != mask.end(), ErrorKind::InvalidArgument, "trainable mask is empty");
    const std::size_t lowest = static_cast<std::size_t>(first_trainable - mask.begin());

    const Objective objective(net, data, loss);
    TrainResult result{std::move(net), {}};
    Network& model = result.net;
    result.trace.initial_loss = objective.mean(model);
    if (cfg.steps == 0) {
        result.trace.final_loss = result.trace.initial_loss;
        return result;
    }

    GradientSet grads = GradientSet::zeros_like(model);
    ForwardCache cache;
    std::vector<double> dloss;
    std::vector<std::size_t> order;
    std::size_t epoch = 0;
    std::size_t cursor = 0;
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const double eta = learning_rate(cfg, t);
        for (std::size_t b = lowest; b < model.size(); ++b)
            if (mask[b]) clear_block(grads.blocks[b]);

        double batch_loss = 0.0;
        try {
            for (std::size_t s = 0; s < cfg.batch_size; ++s) {
                if (cursor == order.size()) {
                    order = epoch_order(cfg.seed, epoch++, data.size());
                    cursor = 0;
                }
                const std::size_t i = order[cursor++];
                batch_loss += objective.sample(model, i, cache, dloss);
                for (double& g : dloss) g *= inv_batch;
                backward_accumulate(model, cache, dloss, grads, lowest);
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NonFinite) throw;
            fail(ErrorKind::Diverged, "training diverged at step " + std::to_string(t) + ": " + e.what());
        }
        batch_loss *= inv_batch;
        if (!std::isfinite(batch_loss))
            fail(ErrorKind::Diverged, "non-finite loss at step " + std::to_string(t));
        if (t % cfg.log_every == 0 || t + 1 == cfg.steps) result.trace.entries.push_back({t, batch_loss, eta});

        for (std::size_t b = lowest; b < model.size(); ++b) {
            if (!mask[b]) continue;
            for_each_param_block(model.block(b), grads.blocks[b],
                                 [&](std::span<double> p, std::span<double> g, std::size_t row, double width) {
                                     const double lr = cfg.width_scaled_lr ? eta * width : eta;
                                     for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
                                     if (cfg.param_bound) {
                                         for (std::size_t r = 0; r < p.size(); r += row)
                                             project_to_ball(p.subspan(r, row), *cfg.param_bound);
                                     }
                                 });
        }
    }
    try {
        result.trace.final_loss = objective.mean(model);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonFinite) throw;
        fail(ErrorKind::Diverged, std::string("training diverged after the last step: ") + e.what());
    }
    return result;
}

} // namespace winforge
