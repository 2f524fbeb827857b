//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/error.hpp"
#include "winforge/net.hpp"
#include "winforge/seed.hpp"
#include "winforge/train.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace winforge::test {

#define EXPECT_WF_ERROR(stmt, expected_kind)                                                     \
    do {                                                                                          \
        try {                                                                                     \
            stmt;                                                                                 \
            ADD_FAILURE() << "expected " << ::winforge::to_string(expected_kind) << " from " #stmt; \
        } catch (const ::winforge::Error& e) {                                                    \
            EXPECT_EQ(e.kind(), expected_kind) << e.what();                                       \
        }                                                                                         \
    } while (0)

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline MeanFieldLayer random_layer(Rng& rng, std::size_t d_in, std::size_t d_out, std::size_t m) {
    return MeanFieldLayer(d_in, d_out, random_vector(rng, m * d_in), random_vector(rng, m * d_out));
}

inline LinearMap random_linear(Rng& rng, std::size_t rows, std::size_t cols) {
    return LinearMap(rows, cols, random_vector(rng, rows * cols));
}

/// Mean-field net d -> h -> ... -> 1 with random parameters.
inline Network random_network(Rng& rng, std::size_t d, std::size_t n, std::size_t m, Activation act) {
    std::vector<Block> blocks;
    for (std::size_t i = 0; i < n; ++i) blocks.emplace_back(random_layer(rng, d, i + 1 == n ? 1 : d, m));
    return Network(act, std::move(blocks));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Fresh, empty directory under the build tree's temp area.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("winforge_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace winforge::test

namespace winforge::test {

/// Every trainable scalar of a block, in storage order.
inline std::span<double> block_params(Block& b, int part) {
    if (auto* l = std::get_if<MeanFieldLayer>(&b)) return part == 0 ? l->theta0_flat() : l->theta1_flat();
    auto& lin = std::get<LinearMap>(b);
    return part == 0 ? lin.data() : std::span<double>{};
}

inline std::span<const double> block_params(const Block& b, int part) {
    return block_params(const_cast<Block&>(b), part);
}

/// Worst error of analytic gradients of L = <w, net(x)> against central
/// differences with step h. Error is |a - fd| / max(|a|, |fd|, floor).
inline double gradient_fd_error(Network net, std::span<const double> x, std::span<const double> w, double h = 1e-5,
                                double floor = 1e-5) {
    auto loss = [&](const Network& n) {
        const auto y = network_eval(n, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
        return s;
    };
    const auto fwd = network_forward(net, x);
    const auto grads = network_backward(net, fwd.cache, w);
    double worst = 0.0;
    for (std::size_t b = 0; b < net.size(); ++b)
        for (int part = 0; part < 2; ++part) {
            auto p = block_params(net.block(b), part);
            const auto g = block_params(grads.blocks[b], part);
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double keep = p[i];
                p[i] = keep + h;
                const double up = loss(net);
                p[i] = keep - h;
                const double down = loss(net);
                p[i] = keep;
                const double fd = (up - down) / (2 * h);
                worst = std::max(worst, std::abs(g[i] - fd) / std::max({std::abs(g[i]), std::abs(fd), floor}));
            }
        }
    return worst;
}

} // namespace winforge::test
