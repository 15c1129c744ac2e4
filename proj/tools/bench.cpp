// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "d2p/graph.hpp"
#include "d2p/select.hpp"
#include "d2p/synth.hpp"

namespace d2p::bench {

GridShape grid_for(std::size_t n) {
    std::size_t h = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (h > 1 && n % h != 0) {
        --h;
    }
    h = std::max<std::size_t>(h, 1);
    return {h, n / h};
}

double median(std::vector<double> samples) {
    if (samples.empty()) {
        return 0.0;
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t mid = samples.size() / 2;
    return samples.size() % 2 == 1 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
}

Timing time_pipeline(std::size_t tokens, std::size_t dim, std::size_t repeats, unsigned threads,
                     std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    const GridShape shape = grid_for(tokens);
    const synth::Philox4x32 rng(seed);

    std::vector<double> features(tokens * dim);
    for (std::size_t k = 0; k < features.size(); ++k) {
        features[k] = rng.normal({21, static_cast<std::uint32_t>(k), 0, 0});
    }
    std::vector<double> scores(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        scores[i] = rng.uniform({22, static_cast<std::uint32_t>(i), 0, 0});
    }
    const TokenSet ts(shape, dim, std::move(features));
    const AttentionGrid rel(shape, std::move(scores));
    const PruneConfig config;
    const std::size_t budget = resolve_budget(config, tokens);

    std::vector<double> build_ms;
    std::vector<double> select_ms;
    std::size_t edges = 0;
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
        const auto t0 = Clock::now();
        const AdjacencyGraph graph = build_graph(ts, config, threads);
        const auto t1 = Clock::now();
        const SelectionResult sel = select_tokens(rel, graph, budget, config.pivot_ratio);
        const auto t2 = Clock::now();
        edges = graph.edge_count();
        build_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        select_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
        if (sel.kept.size() != budget) {
            fail(ErrorCode::kInvalidArgument, "selection missed its budget");
        }
    }
    return Timing{tokens, shape, dim, edges, median(build_ms), median(select_ms)};
}

double growth_exponent(std::span<const Timing> rows, std::size_t min_tokens) {
    std::vector<std::pair<double, double>> pts;
    for (const Timing& t : rows) {
        if (t.tokens >= min_tokens && t.build_graph_ms > 0.0) {
            pts.emplace_back(std::log(static_cast<double>(t.tokens)), std::log(t.build_graph_ms));
        }
    }
    if (pts.size() < 2) {
        return std::nan("");
    }
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::nan("");
}

}  // namespace d2p::bench
