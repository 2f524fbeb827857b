//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/net.hpp"
#include "winforge/seed.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace winforge {

/// Bounded regression samples: ||x_i|| <= bound and |y_i| <= bound.
struct Dataset {
    std::size_t dim = 0;
    std::vector<double> xs;  // size() x dim, row-major
    std::vector<double> ys;
    double bound = 1.0;
    std::string descriptor;

    std::size_t size() const noexcept { return ys.size(); }
    std::span<const double> x(std::size_t i) const { return {xs.data() + i * dim, dim}; }
    double y(std::size_t i) const { return ys[i]; }

    /// Hard check of shape, finiteness and the norm bounds.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

enum class GeneratorKind { TeacherNet, SinOfProjection, TanhOfProjection, NormSqSaturated };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view name);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::TeacherNet;
    std::size_t dim = 8;
    // teacher_net ground truth: depth mean-field layers of the given width.
    std::size_t teacher_depth = 2;
    std::size_t teacher_width = 8;
    std::uint64_t teacher_seed = 0;
    Activation teacher_activation = Activation::Tanh;
    /// Labels are rescaled so the noiseless target has this RMS over a fixed
    /// reference sample (teacher_net only; <= 0 disables rescaling).
    double target_rms = 0.5;
    double noise_sigma = 0.0;
    std::size_t n_train = 512;
    std::size_t n_test = 512;
    double c = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    std::string descriptor() const;
};

struct DatasetSplit {
    Dataset train;
    Dataset test;
};

/// Samples x uniformly in the radius-c ball, y = g*(x) + noise clipped to
/// [-c, c]. Train and test come from independent streams.
DatasetSplit gen_dataset(const GeneratorSpec& spec);

/// The noiseless ground-truth map of a generator spec (before clipping).
class GroundTruth {
public:
    explicit GroundTruth(const GeneratorSpec& spec);
    double operator()(std::span<const double> x) const;

private:
    GeneratorSpec spec_;
    std::vector<double> direction_;
    std::optional<Network> net_;
    double scale_ = 1.0;
};

/// Uniform sample from the radius-r ball in R^d (Gaussian direction, radius r * U^(1/d)).
std::vector<double> sample_ball(Rng& rng, std::size_t d, double r);

} // namespace winforge
