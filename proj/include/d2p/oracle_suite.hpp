// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "d2p/core.hpp"
#include "d2p/graph.hpp"
#include "d2p/select.hpp"

namespace d2p::oracle {

/// One randomized selection problem. Scores are multiples of 1/64 so that
/// ties are common and sums are exact.
struct Instance {
    TokenSet tokens;
    AttentionGrid scores;
    PruneConfig config;
    std::size_t budget;
    AdjacencyGraph graph;
};

/// Deterministic in (seed, index). Grid dimensions are drawn so that
/// 1 <= h*w <= max_cells; alpha in {0, .5, 1}, theta in {.5, .8},
/// pivot ratio in {0, .5, .7, 1}.
Instance random_instance(std::uint64_t seed, std::uint32_t index, std::size_t max_cells);

/// Violations of the selection contract found by direct inspection.
struct ContractCheck {
    bool budget_ok = true;
    bool mis_ok = true;
    bool pivots_ok = true;
    bool ok() const { return budget_ok && mis_ok && pivots_ok; }
};

ContractCheck check_selection(const AttentionGrid& scores, const AdjacencyGraph& graph,
                              std::size_t budget, double pivot_ratio, const SelectionResult& result);

struct DifferentialReport {
    std::size_t cases = 0;
    std::size_t budget_violations = 0;
    std::size_t mis_violations = 0;
    std::size_t pivot_violations = 0;
    std::size_t reference_mismatches = 0;
    std::size_t failures() const {
        return budget_violations + mis_violations + pivot_violations + reference_mismatches;
    }
};

DifferentialReport run_differential_suite(std::uint64_t seed, std::size_t cases,
                                          std::size_t max_cells);

struct RatioSummary {
    double lambda = 0.0;
    std::size_t samples = 0;
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
};

struct ExhaustiveReport {
    std::size_t cases = 0;
    std::size_t importance_only_mismatches = 0;
    std::size_t edgeless_mismatches = 0;
    /// Greedy / optimal objective ratios; diagnostic only.
    std::vector<RatioSummary> ratios;
    std::size_t failures() const { return importance_only_mismatches + edgeless_mismatches; }
};

/// Checks against exhaustive_select on instances with N <= max_cells.
ExhaustiveReport run_exhaustive_suite(std::uint64_t seed, std::size_t cases, std::size_t max_cells);

}  // namespace d2p::oracle
