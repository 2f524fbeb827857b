//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/data.hpp"
#include "winforge/error.hpp"
#include "winforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace winforge {

namespace {

// Stream labels under tag::kData.
constexpr std::uint64_t kTrainInputs = 0;
constexpr std::uint64_t kTestInputs = 1;
constexpr std::uint64_t kTrainNoise = 2;
constexpr std::uint64_t kReference = 3;
constexpr std::uint64_t kTestNoise = 4;
constexpr std::uint64_t kDirection = 5;
constexpr std::size_t kReferenceSize = 1024;

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Dataset sample_split(const GeneratorSpec& spec, const GroundTruth& truth, std::size_t n, std::uint64_t input_stream,
                     std::uint64_t noise_stream) {
    Rng inputs(derive_seed(spec.seed, {tag::kData, input_stream}));
    Rng noise(derive_seed(spec.seed, {tag::kData, noise_stream}));
    Dataset d;
    d.dim = spec.dim;
    d.bound = spec.c;
    d.descriptor = spec.descriptor();
    d.xs.reserve(n * spec.dim);
    d.ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = sample_ball(inputs, spec.dim, spec.c);
        double y = truth(x);
        if (spec.noise_sigma > 0.0) y += spec.noise_sigma * noise.normal();
        d.xs.insert(d.xs.end(), x.begin(), x.end());
        d.ys.push_back(std::clamp(y, -spec.c, spec.c));
    }
    return d;
}

} // namespace

void Dataset::validate() const {
    require(dim > 0, ErrorKind::InvalidArgument, "dataset dim must be positive");
    require(!ys.empty(), ErrorKind::InvalidArgument, "dataset is empty");
    require(xs.size() == ys.size() * dim, ErrorKind::MalformedArray,
            "dataset holds " + std::to_string(xs.size()) + " input values for " + std::to_string(ys.size()) +
                " samples of dim " + std::to_string(dim));
    require(std::isfinite(bound) && bound > 0.0, ErrorKind::InvalidArgument, "dataset bound must be positive");
    require_finite(xs, "dataset inputs");
    require_finite(ys, "dataset labels");
    // Tolerate the last-ulp overshoot of the ball sampler's radius scaling.
    const double slack = bound * (1.0 + 1e-12);
    for (std::size_t i = 0; i < size(); ++i) {
        require(norm(x(i)) <= slack, ErrorKind::InvalidArgument, "sample " + std::to_string(i) + ": ||x|| exceeds bound");
        require(std::abs(ys[i]) <= bound, ErrorKind::InvalidArgument, "sample " + std::to_string(i) + ": |y| exceeds bound");
    }
}

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::TeacherNet: return "teacher_net";
    case GeneratorKind::SinOfProjection: return "sin_of_projection";
    case GeneratorKind::TanhOfProjection: return "tanh_of_projection";
    case GeneratorKind::NormSqSaturated: return "norm_sq_saturated";
    }
    return "unknown";
}

GeneratorKind parse_generator_kind(std::string_view name) {
    for (auto k : {GeneratorKind::TeacherNet, GeneratorKind::SinOfProjection, GeneratorKind::TanhOfProjection,
                   GeneratorKind::NormSqSaturated})
        if (to_string(k) == name) return k;
    fail(ErrorKind::InvalidConfig, "unknown generator kind '" + std::string(name) + "'");
}

void GeneratorSpec::validate() const {
    require(dim > 0, ErrorKind::InvalidConfig, "generator dim must be positive");
    require(n_train > 0 && n_test > 0, ErrorKind::InvalidConfig, "n_train and n_test must be positive");
    require(std::isfinite(c) && c > 0.0, ErrorKind::InvalidConfig, "bound c must be positive");
    require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, ErrorKind::InvalidConfig, "noise_sigma must be >= 0");
    require(std::isfinite(target_rms), ErrorKind::InvalidConfig, "target_rms must be finite");
    if (kind == GeneratorKind::TeacherNet)
        require(teacher_depth > 0 && teacher_width > 0, ErrorKind::InvalidConfig, "teacher_net needs depth and width");
}

std::string GeneratorSpec::descriptor() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == GeneratorKind::TeacherNet)
        os << "(depth=" << teacher_depth << ",width=" << teacher_width << ",seed=" << teacher_seed
           << ",act=" << to_string(teacher_activation) << ",rms=" << target_rms << ")";
    os << ";noise=" << noise_sigma << ";seed=" << seed;
    return os.str();
}

std::vector<double> sample_ball(Rng& rng, std::size_t d, double r) {
    std::vector<double> v(d);
    double sq = 0.0;
    do {
        sq = 0.0;
        for (double& x : v) {
            x = rng.normal();
            sq += x * x;
        }
    } while (sq == 0.0);
    const double radius = r * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    const double s = radius / std::sqrt(sq);
    for (double& x : v) x *= s;
    return v;
}

GroundTruth::GroundTruth(const GeneratorSpec& spec) : spec_(spec) {
    spec_.validate();
    if (spec_.kind == GeneratorKind::TeacherNet) {
        InitSpec init;
        net_ = init_network(thin_arch(spec_.dim, spec_.teacher_depth, spec_.teacher_width, spec_.teacher_activation),
                            init, spec_.teacher_seed);
        if (spec_.target_rms > 0.0) {
            Rng ref(derive_seed(spec_.seed, {tag::kData, kReference}));
            double sq = 0.0;
            for (std::size_t i = 0; i < kReferenceSize; ++i) {
                const double v = network_eval(*net_, sample_ball(ref, spec_.dim, spec_.c))[0];
                sq += v * v;
            }
            const double rms = std::sqrt(sq / static_cast<double>(kReferenceSize));
            if (rms > 0.0) scale_ = spec_.target_rms * spec_.c / rms;
        }
        return;
    }
    Rng rng(derive_seed(spec_.seed, {tag::kData, kDirection}));
    direction_.resize(spec_.dim);
    double sq = 0.0;
    do {
        sq = 0.0;
        for (double& x : direction_) {
            x = rng.normal();
            sq += x * x;
        }
    } while (sq == 0.0);
    for (double& x : direction_) x /= std::sqrt(sq);
}

double GroundTruth::operator()(std::span<const double> x) const {
    const double c = spec_.c;
    switch (spec_.kind) {
    case GeneratorKind::TeacherNet: return scale_ * network_eval(*net_, x)[0];
    case GeneratorKind::SinOfProjection:
    case GeneratorKind::TanhOfProjection: {
        double p = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) p += direction_[i] * x[i];
        p *= 2.0 / c;
        return c * (spec_.kind == GeneratorKind::SinOfProjection ? std::sin(std::numbers::pi * 0.5 * p) : std::tanh(p));
    }
    case GeneratorKind::NormSqSaturated: {
        double sq = 0.0;
        for (double v : x) sq += v * v;
        return c * std::tanh(2.0 * sq / (c * c) - 0.5);
    }
    }
    return 0.0;
}

DatasetSplit gen_dataset(const GeneratorSpec& spec) {
    const GroundTruth truth(spec);
    DatasetSplit out{sample_split(spec, truth, spec.n_train, kTrainInputs, kTrainNoise),
                     sample_split(spec, truth, spec.n_test, kTestInputs, kTestNoise)};
    out.train.validate();
    out.test.validate();
    return out;
}

} // namespace winforge
