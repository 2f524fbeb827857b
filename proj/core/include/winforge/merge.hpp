//
// Copyright (C) 2026 The winforge Authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "winforge/net.hpp"

#include <string_view>
#include <vector>

namespace winforge {

/// One rewrite applied by merge_pass. Indices refer to block positions in
/// the network as it was immediately before this step ran.
struct MergeStep {
    enum class Kind { Fuse, AbsorbPre, AbsorbPost };

    Kind kind;
    std::size_t first;   // fuse: first linear; absorb_pre: the linear; absorb_post: the layer
    std::size_t second;  // first + 1

    bool operator==(const MergeStep&) const = default;
};

std::string_view to_string(MergeStep::Kind kind);

struct MergePlan {
    std::vector<MergeStep> steps;

    bool empty() const noexcept { return steps.empty(); }
    bool operator==(const MergePlan&) const = default;
};

/// second o first as one map: matrix second.a * first.a.
LinearMap fuse_linear(const LinearMap& first, const LinearMap& second);

/// Layer computing layer(A z): each theta0_j becomes A^T theta0_j.
MeanFieldLayer absorb_pre(const LinearMap& lin, const MeanFieldLayer& layer);

/// Layer computing A layer(z): each theta1_j becomes A theta1_j.
MeanFieldLayer absorb_post(const MeanFieldLayer& layer, const LinearMap& lin);

struct MergeResult {
    Network net;
    MergePlan plan;
};

/// Removes every LinearMap: runs of adjacent linear maps are fused, then
/// the fused map is absorbed into the following mean-field layer's input
/// weights (or, for a trailing map, the preceding layer's output weights).
/// A network of only linear maps cannot be restored and is rejected.
MergeResult merge_pass(const Network& net);

/// Replays a plan on a network; used to audit a serialized plan.
Network apply_plan(const Network& net, const MergePlan& plan);

} // namespace winforge
