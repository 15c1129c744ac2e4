// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Independent reference implementations used for differential and
// exhaustive testing. Nothing here shares code with select.cpp.

#include <cstddef>
#include <span>
#include <vector>

#include "d2p/core.hpp"
#include "d2p/graph.hpp"
#include "d2p/select.hpp"

namespace d2p::oracle {

struct ObjectiveParams {
    /// Weight of the diversity term; must be finite and >= 0.
    double lambda = 0.0;
};

/// Largest N exhaustive_select will enumerate.
inline constexpr std::size_t kMaxExhaustiveSize = 20;

/// sum of scores over `kept` + lambda * Div(kept), where Div is minus the
/// number of graph edges with both endpoints in `kept`. Scores are summed in
/// ascending index order.
double objective_score(const AttentionGrid& scores, const AdjacencyGraph& graph,
                       std::span<const std::size_t> kept, const ObjectiveParams& params);

/// Brute-force maximiser of objective_score over all size-n subsets. Ties go
/// to the lexicographically smallest sorted index tuple.
std::vector<std::size_t> exhaustive_select(const AttentionGrid& scores, const AdjacencyGraph& graph,
                                           std::size_t budget, const ObjectiveParams& params);

/// Naive quadratic re-implementation of select_tokens with the same contract.
SelectionResult reference_select(const AttentionGrid& scores, const AdjacencyGraph& graph,
                                 std::size_t budget, double pivot_ratio);

/// Indices of the n largest scores (lower index wins ties), ascending.
std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t budget);

}  // namespace d2p::oracle
