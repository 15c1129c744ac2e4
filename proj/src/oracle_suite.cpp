// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "d2p/oracle.hpp"
#include "d2p/synth.hpp"

namespace d2p::oracle {

namespace {

constexpr std::uint32_t kStreamShape = 11;
constexpr std::uint32_t kStreamFeatures = 12;
constexpr std::uint32_t kStreamScores = 13;
constexpr std::uint32_t kStreamEdgeless = 14;

std::size_t draw(const synth::Philox4x32& rng, std::uint32_t index, std::uint32_t slot,
                 std::size_t lo, std::size_t hi) {
    const double u = rng.uniform({kStreamShape, index, slot, 0});
    return lo + static_cast<std::size_t>(u * static_cast<double>(hi - lo + 1));
}

}  // namespace

Instance random_instance(std::uint64_t seed, std::uint32_t index, std::size_t max_cells) {
    if (max_cells == 0) {
        fail(ErrorCode::kInvalidArgument, "max_cells must be positive");
    }
    const synth::Philox4x32 rng(seed);
    const std::size_t height = draw(rng, index, 0, 1, std::min<std::size_t>(max_cells, 16));
    const std::size_t width = draw(rng, index, 1, 1, std::max<std::size_t>(1, max_cells / height));
    const std::size_t dim = draw(rng, index, 2, 1, 16);
    const GridShape shape{height, width};
    const std::size_t n = shape.cells();

    // A handful of prototypes plus noise gives both similar and dissimilar
    // pairs, so thresholded graphs are neither empty nor complete.
    const std::size_t prototypes = draw(rng, index, 3, 1, 4);
    std::vector<double> features(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto proto = static_cast<std::uint32_t>(
            rng.uniform({kStreamFeatures, index, static_cast<std::uint32_t>(i), 0xffffffffu}) *
            static_cast<double>(prototypes));
        for (std::size_t d = 0; d < dim; ++d) {
            const double base = rng.normal({kStreamFeatures, index, proto, static_cast<std::uint32_t>(d)});
            const double noise = rng.normal(
                {kStreamFeatures, index, static_cast<std::uint32_t>(1000 + i),
                 static_cast<std::uint32_t>(d)});
            features[i * dim + d] = base + 0.3 * noise;
        }
    }

    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform({kStreamScores, index, static_cast<std::uint32_t>(i), 0});
        scores[i] = std::floor(u * 256.0) / 64.0;
    }

    static constexpr double kAlphas[] = {0.0, 0.5, 1.0};
    static constexpr double kThetas[] = {0.5, 0.8};
    static constexpr double kPivotRatios[] = {0.0, 0.5, 0.7, 1.0};
    PruneConfig config;
    config.alpha = kAlphas[draw(rng, index, 4, 0, 2)];
    config.theta_sim = kThetas[draw(rng, index, 5, 0, 1)];
    config.pivot_ratio = kPivotRatios[draw(rng, index, 6, 0, 3)];
    const std::size_t budget = draw(rng, index, 7, 1, n);
    config.budget = Budget::absolute(budget);

    TokenSet tokens(shape, dim, std::move(features));
    AdjacencyGraph graph = build_graph(tokens, config);
    return Instance{std::move(tokens), AttentionGrid(shape, std::move(scores)), config, budget,
                    std::move(graph)};
}

ContractCheck check_selection(const AttentionGrid& scores, const AdjacencyGraph& graph,
                              std::size_t budget, double pivot_ratio, const SelectionResult& result) {
    ContractCheck check;
    check.budget_ok = result.kept.size() == budget && result.provenance.size() == budget &&
                      std::is_sorted(result.kept.begin(), result.kept.end()) &&
                      std::adjacent_find(result.kept.begin(), result.kept.end()) == result.kept.end();

    const std::size_t np = pivot_count(budget, pivot_ratio);
    check.pivots_ok = result.pivots == top_n(scores.values(), np);

    // A MIS pick may not touch any pivot nor any MIS pick that outranks it
    // (those were chosen before it).
    const auto s = scores.values();
    auto outranks = [&](std::size_t a, std::size_t b) {
        return s[a] > s[b] || (s[a] == s[b] && a < b);
    };
    for (std::size_t a = 0; a < result.kept.size() && check.mis_ok; ++a) {
        if (result.provenance[a] != Provenance::kMis) {
            continue;
        }
        const std::size_t m = result.kept[a];
        for (std::size_t b = 0; b < result.kept.size(); ++b) {
            const std::size_t other = result.kept[b];
            const bool earlier = result.provenance[b] == Provenance::kPivot ||
                                 (result.provenance[b] == Provenance::kMis && outranks(other, m));
            if (earlier && graph.has_edge(m, other)) {
                check.mis_ok = false;
                break;
            }
        }
    }
    return check;
}

DifferentialReport run_differential_suite(std::uint64_t seed, std::size_t cases,
                                          std::size_t max_cells) {
    DifferentialReport report;
    for (std::size_t c = 0; c < cases; ++c) {
        const Instance inst = random_instance(seed, static_cast<std::uint32_t>(c), max_cells);
        const double ratio = inst.config.pivot_ratio;
        const SelectionResult fast = select_tokens(inst.scores, inst.graph, inst.budget, ratio);
        const SelectionResult slow = reference_select(inst.scores, inst.graph, inst.budget, ratio);
        const ContractCheck check = check_selection(inst.scores, inst.graph, inst.budget, ratio, fast);
        ++report.cases;
        report.budget_violations += check.budget_ok ? 0 : 1;
        report.mis_violations += check.mis_ok ? 0 : 1;
        report.pivot_violations += check.pivots_ok ? 0 : 1;
        report.reference_mismatches += fast == slow ? 0 : 1;
    }
    return report;
}

ExhaustiveReport run_exhaustive_suite(std::uint64_t seed, std::size_t cases, std::size_t max_cells) {
    max_cells = std::min(max_cells, kMaxExhaustiveSize);
    static constexpr double kLambdas[] = {0.0, 0.1, 1.0};
    ExhaustiveReport report;
    std::vector<std::vector<double>> ratios(std::size(kLambdas));

    for (std::size_t c = 0; c < cases; ++c) {
        const auto index = static_cast<std::uint32_t>(c);
        const Instance inst = random_instance(seed, index, max_cells);
        const double ratio = inst.config.pivot_ratio;
        ++report.cases;

        const auto optimal_importance =
            exhaustive_select(inst.scores, inst.graph, inst.budget, ObjectiveParams{0.0});
        if (optimal_importance != top_n(inst.scores.values(), inst.budget)) {
            ++report.importance_only_mismatches;
        }

        const AdjacencyGraph edgeless(inst.scores.size());
        const synth::Philox4x32 rng(seed);
        const double lambda = kLambdas[static_cast<std::size_t>(
            rng.uniform({kStreamEdgeless, index, 0, 0}) * std::size(kLambdas))];
        const auto greedy_edgeless = select_tokens(inst.scores, edgeless, inst.budget, ratio);
        const auto optimal_edgeless =
            exhaustive_select(inst.scores, edgeless, inst.budget, ObjectiveParams{lambda});
        if (greedy_edgeless.kept != optimal_edgeless) {
            ++report.edgeless_mismatches;
        }

        const auto greedy = select_tokens(inst.scores, inst.graph, inst.budget, ratio);
        for (std::size_t l = 0; l < std::size(kLambdas); ++l) {
            const ObjectiveParams params{kLambdas[l]};
            const auto best = exhaustive_select(inst.scores, inst.graph, inst.budget, params);
            const double opt = objective_score(inst.scores, inst.graph, best, params);
            if (opt > 0.0) {
                ratios[l].push_back(objective_score(inst.scores, inst.graph, greedy.kept, params) / opt);
            }
        }
    }

    for (std::size_t l = 0; l < std::size(kLambdas); ++l) {
        RatioSummary summary;
        summary.lambda = kLambdas[l];
        summary.samples = ratios[l].size();
        if (!ratios[l].empty()) {
            summary.min = *std::min_element(ratios[l].begin(), ratios[l].end());
            summary.max = *std::max_element(ratios[l].begin(), ratios[l].end());
            double total = 0.0;
            for (double r : ratios[l]) {
                total += r;
            }
            summary.mean = total / static_cast<double>(ratios[l].size());
        }
        report.ratios.push_back(summary);
    }
    return report;
}

}  // namespace d2p::oracle
