// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "d2p/core.hpp"

namespace d2p::bench {

struct Timing {
    std::size_t tokens = 0;
    GridShape grid;
    std::size_t dim = 0;
    std::size_t edges = 0;
    double build_graph_ms = 0.0;   // median
    double select_ms = 0.0;        // median
};

/// Most square h x w factorisation of n (h <= w).
GridShape grid_for(std::size_t n);

/// Times build_graph and select_tokens with default hyperparameters on
/// random Gaussian tokens; reports medians over `repeats` runs.
Timing time_pipeline(std::size_t tokens, std::size_t dim, std::size_t repeats, unsigned threads,
                     std::uint64_t seed);

/// Least-squares slope of log(build time) against log(N) over rows with
/// N >= min_tokens.
double growth_exponent(std::span<const Timing> rows, std::size_t min_tokens);

double median(std::vector<double> samples);

}  // namespace d2p::bench
