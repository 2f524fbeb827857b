//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#include "winforge/merge.hpp"
#include "winforge/error.hpp"

#include <string>

namespace winforge {

std::string_view to_string(MergeStep::Kind kind) {
    switch (kind) {
    case MergeStep::Kind::Fuse: return "fuse";
    case MergeStep::Kind::AbsorbPre: return "absorb_pre";
    case MergeStep::Kind::AbsorbPost: return "absorb_post";
    }
    return "unknown";
}

LinearMap fuse_linear(const LinearMap& first, const LinearMap& second) {
    require(second.cols() == first.rows(), ErrorKind::DimensionMismatch,
            "fuse_linear: second takes " + std::to_string(second.cols()) + " inputs, first produces " +
                std::to_string(first.rows()));
    LinearMap out = LinearMap::zeros(second.rows(), first.cols());
    for (std::size_t r = 0; r < second.rows(); ++r)
        for (std::size_t c = 0; c < first.cols(); ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < second.cols(); ++k) s += second.at(r, k) * first.at(k, c);
            out.at(r, c) = s;
        }
    return out;
}

MeanFieldLayer absorb_pre(const LinearMap& lin, const MeanFieldLayer& layer) {
    require(lin.rows() == layer.d_in(), ErrorKind::DimensionMismatch,
            "absorb_pre: linear map produces " + std::to_string(lin.rows()) + " values, layer takes " +
                std::to_string(layer.d_in()));
    const std::size_t m = layer.width();
    std::vector<double> t0(m * lin.cols());
    for (std::size_t j = 0; j < m; ++j) {
        const auto old = layer.theta0(j);
        double* row = t0.data() + j * lin.cols();
        for (std::size_t c = 0; c < lin.cols(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < lin.rows(); ++r) s += lin.at(r, c) * old[r];
            row[c] = s;
        }
    }
    auto t1 = layer.theta1_flat();
    return MeanFieldLayer(lin.cols(), layer.d_out(), std::move(t0), {t1.begin(), t1.end()});
}

MeanFieldLayer absorb_post(const MeanFieldLayer& layer, const LinearMap& lin) {
    require(lin.cols() == layer.d_out(), ErrorKind::DimensionMismatch,
            "absorb_post: linear map takes " + std::to_string(lin.cols()) + " values, layer produces " +
                std::to_string(layer.d_out()));
    const std::size_t m = layer.width();
    std::vector<double> t1(m * lin.rows());
    for (std::size_t j = 0; j < m; ++j) {
        const auto old = layer.theta1(j);
        double* row = t1.data() + j * lin.rows();
        for (std::size_t r = 0; r < lin.rows(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < lin.cols(); ++c) s += lin.at(r, c) * old[c];
            row[r] = s;
        }
    }
    auto t0 = layer.theta0_flat();
    return MeanFieldLayer(layer.d_in(), lin.rows(), {t0.begin(), t0.end()}, std::move(t1));
}

namespace {

void apply_step(std::vector<Block>& blocks, const MergeStep& step) {
    const std::size_t i = step.first;
    require(step.second == i + 1 && step.second < blocks.size(), ErrorKind::PatternMismatch,
            "merge step addresses blocks " + std::to_string(i) + "," + std::to_string(step.second) + " of " +
                std::to_string(blocks.size()));
    const auto pos = blocks.begin() + static_cast<std::ptrdiff_t>(i);
    switch (step.kind) {
    case MergeStep::Kind::Fuse: {
        const auto* a = std::get_if<LinearMap>(&blocks[i]);
        const auto* b = std::get_if<LinearMap>(&blocks[i + 1]);
        require(a && b, ErrorKind::PatternMismatch, "fuse expects two linear maps at position " + std::to_string(i));
        blocks[i] = fuse_linear(*a, *b);
        break;
    }
    case MergeStep::Kind::AbsorbPre: {
        const auto* a = std::get_if<LinearMap>(&blocks[i]);
        const auto* l = std::get_if<MeanFieldLayer>(&blocks[i + 1]);
        require(a && l, ErrorKind::PatternMismatch,
                "absorb_pre expects linear then mean-field at position " + std::to_string(i));
        blocks[i] = absorb_pre(*a, *l);
        break;
    }
    case MergeStep::Kind::AbsorbPost: {
        const auto* l = std::get_if<MeanFieldLayer>(&blocks[i]);
        const auto* a = std::get_if<LinearMap>(&blocks[i + 1]);
        require(a && l, ErrorKind::PatternMismatch,
                "absorb_post expects mean-field then linear at position " + std::to_string(i));
        blocks[i] = absorb_post(*l, *a);
        break;
    }
    }
    blocks.erase(pos + 1);
}

} // namespace

MergeResult merge_pass(const Network& net) {
    std::vector<Block> blocks(net.blocks().begin(), net.blocks().end());
    MergePlan plan;
    auto run = [&](MergeStep step) {
        apply_step(blocks, step);
        plan.steps.push_back(step);
    };

    std::size_t i = 0;
    while (i < blocks.size()) {
        if (!is_linear(blocks[i])) {
            ++i;
            continue;
        }
        while (i + 1 < blocks.size() && is_linear(blocks[i + 1])) run({MergeStep::Kind::Fuse, i, i + 1});
        if (i + 1 < blocks.size()) {
            run({MergeStep::Kind::AbsorbPre, i, i + 1});
            ++i;
        } else if (i > 0) {
            run({MergeStep::Kind::AbsorbPost, i - 1, i});
        } else {
            fail(ErrorKind::PatternMismatch,
                 "unexpected block pattern at position " + std::to_string(i) +
                     ": linear map with no adjacent mean-field layer to absorb it");
        }
    }
    return {Network(net.activation(), std::move(blocks)), std::move(plan)};
}

Network apply_plan(const Network& net, const MergePlan& plan) {
    std::vector<Block> blocks(net.blocks().begin(), net.blocks().end());
    for (const auto& step : plan.steps) apply_step(blocks, step);
    return Network(net.activation(), std::move(blocks));
}

} // namespace winforge
