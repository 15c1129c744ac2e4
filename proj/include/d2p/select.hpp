// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "d2p/core.hpp"
#include "d2p/graph.hpp"

namespace d2p {

enum class Provenance : unsigned char {
    kPivot,
    kMis,
    kFallback,
};

std::string_view to_string(Provenance tag);

struct SelectionResult {
    /// Retained cell indices, ascending.
    std::vector<std::size_t> kept;
    /// Pivot cell indices, ascending.
    std::vector<std::size_t> pivots;
    /// provenance[k] describes kept[k].
    std::vector<Provenance> provenance;
    /// Cells marked as a neighbour of a pivot or MIS pick and never chosen
    /// by either stage.
    std::size_t excluded_count = 0;

    bool operator==(const SelectionResult&) const = default;
};

/// floor(n * pivot_ratio).
std::size_t pivot_count(std::size_t budget, double pivot_ratio);

/// Pivot-seeded greedy independent-set selection.
///
/// 1. The floor(n * pivot_ratio) highest-scoring cells become pivots; their
///    graph neighbours are excluded from stage 2 (pivots do not exclude
///    each other).
/// 2. Repeatedly take the best cell that is neither selected nor excluded
///    and exclude its neighbours, until n cells are kept or none remain.
/// 3. Any shortfall is filled with the best unselected cells regardless of
///    exclusion.
///
/// Ordering is by score descending, lower index first on ties.
SelectionResult select_tokens(const AttentionGrid& scores, const AdjacencyGraph& graph,
                              std::size_t budget, double pivot_ratio);

/// Cells ordered by (score desc, index asc).
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

}  // namespace d2p
