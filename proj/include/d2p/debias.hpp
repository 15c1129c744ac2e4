// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "d2p/core.hpp"

namespace d2p {

/// Content-agnostic attention profile averaged over a calibration set.
class BiasPrior {
public:
    BiasPrior(AttentionGrid grid, std::size_t sample_count);

    const AttentionGrid& grid() const noexcept { return m_grid; }
    const GridShape& shape() const noexcept { return m_grid.shape(); }
    std::size_t sample_count() const noexcept { return m_sample_count; }

private:
    AttentionGrid m_grid;
    std::size_t m_sample_count;
};

/// Elementwise mean of the calibration maps. Each cell is summed exactly and
/// rounded once, so the result does not depend on the order of `maps`.
BiasPrior calibrate_bias(std::span<const AttentionGrid> maps);

/// Bilinear resize with align-corners sampling. An axis collapsed to a
/// single cell takes the mean along that source axis.
BiasPrior resize_bias(const BiasPrior& prior, std::size_t target_height, std::size_t target_width);

/// A_rel(i) = A_ori(i) / (A_bias(i) + epsilon).
AttentionGrid relative_attention(const AttentionGrid& raw, const BiasPrior& prior, double epsilon);

namespace detail {

/// Correctly rounded sum of `values` (Shewchuk / fsum partials).
double exact_sum(std::span<const double> values);

}  // namespace detail

}  // namespace d2p
