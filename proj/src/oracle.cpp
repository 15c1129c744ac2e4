// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace d2p::oracle {

namespace {

void check_params(const ObjectiveParams& params) {
    if (!std::isfinite(params.lambda) || params.lambda < 0.0) {
        fail(ErrorCode::kInvalidArgument, "lambda must be finite and nonnegative");
    }
}

void check_sizes(const AttentionGrid& scores, const AdjacencyGraph& graph, std::size_t budget) {
    if (graph.size() != scores.size()) {
        fail(ErrorCode::kDimensionMismatch, "graph and score sizes differ");
    }
    if (budget < 1 || budget > scores.size()) {
        fail(ErrorCode::kOutOfRange, "budget outside [1, N]");
    }
}

// True when a outranks b: higher score, lower index on ties.
bool outranks(std::span<const double> s, std::size_t a, std::size_t b) {
    return s[a] > s[b] || (s[a] == s[b] && a < b);
}

// Linear scan for the best cell satisfying `eligible`; N if none.
template <typename Pred>
std::size_t best_where(std::span<const double> s, Pred eligible) {
    std::size_t best = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (eligible(i) && (best == s.size() || outranks(s, i, best))) {
            best = i;
        }
    }
    return best;
}

}  // namespace

double objective_score(const AttentionGrid& scores, const AdjacencyGraph& graph,
                       std::span<const std::size_t> kept, const ObjectiveParams& params) {
    check_params(params);
    if (graph.size() != scores.size()) {
        fail(ErrorCode::kDimensionMismatch, "graph and score sizes differ");
    }
    std::vector<std::size_t> sorted(kept.begin(), kept.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (sorted[k] >= scores.size()) {
            fail(ErrorCode::kOutOfRange, "index " + std::to_string(sorted[k]) + " outside grid");
        }
        if (k > 0 && sorted[k] == sorted[k - 1]) {
            fail(ErrorCode::kInvalidArgument, "duplicate index " + std::to_string(sorted[k]));
        }
    }

    double importance = 0.0;
    std::size_t internal_edges = 0;
    for (std::size_t a = 0; a < sorted.size(); ++a) {
        importance += scores[sorted[a]];
        for (std::size_t b = a + 1; b < sorted.size(); ++b) {
            internal_edges += graph.has_edge(sorted[a], sorted[b]) ? 1 : 0;
        }
    }
    return importance - params.lambda * static_cast<double>(internal_edges);
}

std::vector<std::size_t> exhaustive_select(const AttentionGrid& scores, const AdjacencyGraph& graph,
                                           std::size_t budget, const ObjectiveParams& params) {
    check_params(params);
    if (scores.size() > kMaxExhaustiveSize) {
        fail(ErrorCode::kEnumerationLimit, "exhaustive search limited to N <= " +
                                               std::to_string(kMaxExhaustiveSize));
    }
    check_sizes(scores, graph, budget);

    const std::size_t n = scores.size();
    // Lexicographic enumeration of combinations; strict improvement keeps the
    // earliest tuple on ties.
    std::vector<std::size_t> current(budget);
    for (std::size_t k = 0; k < budget; ++k) {
        current[k] = k;
    }
    std::vector<std::size_t> best = current;
    double best_score = objective_score(scores, graph, current, params);
    while (true) {
        std::size_t pos = budget;
        while (pos > 0 && current[pos - 1] == n - budget + pos - 1) {
            --pos;
        }
        if (pos == 0) {
            break;
        }
        ++current[pos - 1];
        for (std::size_t k = pos; k < budget; ++k) {
            current[k] = current[k - 1] + 1;
        }
        const double score = objective_score(scores, graph, current, params);
        if (score > best_score) {
            best_score = score;
            best = current;
        }
    }
    return best;
}

SelectionResult reference_select(const AttentionGrid& scores, const AdjacencyGraph& graph,
                                 std::size_t budget, double pivot_ratio) {
    check_sizes(scores, graph, budget);
    if (!(pivot_ratio >= 0.0 && pivot_ratio <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "pivot ratio must lie in [0, 1]");
    }
    const std::size_t n = scores.size();
    const auto s = scores.values();
    const auto pivots =
        static_cast<std::size_t>(std::floor(static_cast<double>(budget) * pivot_ratio));

    std::vector<bool> chosen(n, false);
    std::vector<bool> blocked(n, false);
    std::vector<Provenance> tag(n, Provenance::kFallback);

    for (std::size_t p = 0; p < pivots; ++p) {
        const std::size_t cell = best_where(s, [&](std::size_t i) { return !chosen[i]; });
        chosen[cell] = true;
        tag[cell] = Provenance::kPivot;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (chosen[i] && tag[i] == Provenance::kPivot && graph.has_edge(i, j)) {
                blocked[j] = true;
            }
        }
    }

    std::size_t count = pivots;
    while (count < budget) {
        const std::size_t cell =
            best_where(s, [&](std::size_t i) { return !chosen[i] && !blocked[i]; });
        if (cell == n) {
            break;
        }
        chosen[cell] = true;
        tag[cell] = Provenance::kMis;
        ++count;
        for (std::size_t j = 0; j < n; ++j) {
            if (graph.has_edge(cell, j)) {
                blocked[j] = true;
            }
        }
    }

    SelectionResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (blocked[i] && !chosen[i]) {
            ++result.excluded_count;
        }
    }
    while (count < budget) {
        const std::size_t cell = best_where(s, [&](std::size_t i) { return !chosen[i]; });
        chosen[cell] = true;
        tag[cell] = Provenance::kFallback;
        ++count;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) {
            result.kept.push_back(i);
            result.provenance.push_back(tag[i]);
            if (tag[i] == Provenance::kPivot) {
                result.pivots.push_back(i);
            }
        }
    }
    return result;
}

std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t budget) {
    if (budget > scores.size()) {
        fail(ErrorCode::kOutOfRange, "budget exceeds candidate count");
    }
    // Selection by repeated scan keeps this independent of rank_by_score.
    std::vector<bool> taken(scores.size(), false);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < budget; ++k) {
        const std::size_t cell = best_where(scores, [&](std::size_t i) { return !taken[i]; });
        taken[cell] = true;
        out.push_back(cell);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace d2p::oracle
