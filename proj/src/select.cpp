// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace d2p {

std::string_view to_string(Provenance tag) {
    switch (tag) {
        case Provenance::kPivot: return "pivot";
        case Provenance::kMis: return "mis";
        case Provenance::kFallback: return "fallback";
    }
    return "unknown";
}

std::size_t pivot_count(std::size_t budget, double pivot_ratio) {
    if (!(pivot_ratio >= 0.0 && pivot_ratio <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "pivot ratio must lie in [0, 1]");
    }
    return static_cast<std::size_t>(std::floor(static_cast<double>(budget) * pivot_ratio));
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return a < b;
    });
    return order;
}

SelectionResult select_tokens(const AttentionGrid& scores, const AdjacencyGraph& graph,
                              std::size_t budget, double pivot_ratio) {
    const std::size_t n = scores.size();
    if (graph.size() != n) {
        fail(ErrorCode::kDimensionMismatch, "graph has " + std::to_string(graph.size()) +
                                                " nodes but scores cover " + std::to_string(n));
    }
    if (budget < 1 || budget > n) {
        fail(ErrorCode::kOutOfRange,
             "budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    }
    const std::size_t pivots = pivot_count(budget, pivot_ratio);

    enum class State : unsigned char { kFree, kExcluded, kSelected };
    std::vector<State> state(n, State::kFree);
    std::vector<Provenance> tag(n, Provenance::kFallback);
    const std::vector<std::size_t> order = rank_by_score(scores.values());

    auto exclude_neighbors = [&](std::size_t cell) {
        for (std::uint32_t nb : graph.neighbors(cell)) {
            if (state[nb] == State::kFree) {
                state[nb] = State::kExcluded;
            }
        }
    };

    std::size_t taken = 0;
    // Pivots are claimed before any exclusion is applied.
    for (; taken < pivots; ++taken) {
        state[order[taken]] = State::kSelected;
        tag[order[taken]] = Provenance::kPivot;
    }
    for (std::size_t k = 0; k < pivots; ++k) {
        exclude_neighbors(order[k]);
    }

    // Exclusions only grow, so one pass over the ranking suffices.
    for (std::size_t k = pivots; k < n && taken < budget; ++k) {
        const std::size_t cell = order[k];
        if (state[cell] != State::kFree) {
            continue;
        }
        state[cell] = State::kSelected;
        tag[cell] = Provenance::kMis;
        ++taken;
        exclude_neighbors(cell);
    }

    SelectionResult result;
    result.excluded_count = static_cast<std::size_t>(
        std::count(state.begin(), state.end(), State::kExcluded));

    for (std::size_t k = 0; k < n && taken < budget; ++k) {
        const std::size_t cell = order[k];
        if (state[cell] != State::kSelected) {
            state[cell] = State::kSelected;
            tag[cell] = Provenance::kFallback;
            ++taken;
        }
    }

    result.kept.reserve(budget);
    result.provenance.reserve(budget);
    for (std::size_t i = 0; i < n; ++i) {
        if (state[i] == State::kSelected) {
            result.kept.push_back(i);
            result.provenance.push_back(tag[i]);
            if (tag[i] == Provenance::kPivot) {
                result.pivots.push_back(i);
            }
        }
    }
    return result;
}

}  // namespace d2p
