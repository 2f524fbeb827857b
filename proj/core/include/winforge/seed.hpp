//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace winforge {

/// SplitMix64 finalizer. Used as the mixing step for every derived seed.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a path of
/// integer labels, e.g. derive_seed(seed, {tag::kSubsample, layer}).
/// Pure function; pinned by tests so run outputs stay stable across versions.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Stream labels used with derive_seed. Values are part of the on-disk
/// reproducibility contract; never renumber.
namespace tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kSubsample = 3;
inline constexpr std::uint64_t kRestart = 4;
inline constexpr std::uint64_t kTeacher = 5;
inline constexpr std::uint64_t kStudent = 6;
inline constexpr std::uint64_t kFinetune = 7;
inline constexpr std::uint64_t kImitate = 8;
inline constexpr std::uint64_t kPairs = 9;
inline constexpr std::uint64_t kData = 10;
inline constexpr std::uint64_t kProbe = 11;
inline constexpr std::uint64_t kCell = 12;
inline constexpr std::uint64_t kScratch = 13;
} // namespace tag

/// Seeded generator with toolchain-independent sampling. std distributions
/// are implementation-defined, so the few we need are written out here on
/// top of the (fully specified) mt19937_64 engine.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace winforge
