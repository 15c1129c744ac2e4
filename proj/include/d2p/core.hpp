// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "d2p/error.hpp"

namespace d2p {

/// Height x width of a patch grid. Cells are addressed row-major:
/// index = row * width + col.
struct GridShape {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t cells() const noexcept { return height * width; }
    std::size_t row(std::size_t index) const noexcept { return index / width; }
    std::size_t col(std::size_t index) const noexcept { return index % width; }
    std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * width + col; }

    bool operator==(const GridShape&) const = default;
};

/// Throws kInvalidArgument unless both extents are positive.
void validate_shape(const GridShape& shape);

/// Grid of D-dimensional token features, stored N x D row-major.
class TokenSet {
public:
    TokenSet(GridShape shape, std::size_t dim, std::vector<double> features);

    const GridShape& shape() const noexcept { return m_shape; }
    std::size_t size() const noexcept { return m_shape.cells(); }
    std::size_t dim() const noexcept { return m_dim; }

    std::span<const double> token(std::size_t index) const {
        return {m_features.data() + index * m_dim, m_dim};
    }
    std::span<const double> features() const noexcept { return m_features; }

private:
    GridShape m_shape;
    std::size_t m_dim;
    std::vector<double> m_features;
};

/// One nonnegative scalar per grid cell. Used for raw attention, the
/// positional bias prior and relative attention alike.
class AttentionGrid {
public:
    AttentionGrid(GridShape shape, std::vector<double> values);

    const GridShape& shape() const noexcept { return m_shape; }
    std::size_t size() const noexcept { return m_values.size(); }
    std::span<const double> values() const noexcept { return m_values; }
    double operator[](std::size_t index) const { return m_values[index]; }

private:
    GridShape m_shape;
    std::vector<double> m_values;
};

/// Number of retained tokens, either as an absolute count or a fraction of N.
class Budget {
public:
    static Budget absolute(std::size_t count);
    static Budget ratio(double fraction);

    bool is_ratio() const noexcept { return m_is_ratio; }
    std::size_t count() const noexcept { return m_count; }
    double fraction() const noexcept { return m_fraction; }

private:
    Budget(bool is_ratio, std::size_t count, double fraction)
        : m_is_ratio(is_ratio), m_count(count), m_fraction(fraction) {}

    bool m_is_ratio;
    std::size_t m_count;
    double m_fraction;
};

struct PruneConfig {
    double epsilon = 1e-7;
    double alpha = 1.0;
    double theta_sim = 0.8;
    double pivot_ratio = 0.7;
    Budget budget = Budget::ratio(0.333);
    // Layer at which pruning would be applied inside a model; carried as
    // metadata only.
    std::uint32_t layer = 2;

    /// Throws kInvalidArgument on any out-of-range hyperparameter.
    void validate() const;
};

/// Absolute budgets are returned as-is (1 <= n <= N enforced); ratios are
/// floored and clamped to [1, N].
std::size_t resolve_budget(const PruneConfig& config, std::size_t token_count);

/// 8-connected neighbours of `index`, ascending.
std::vector<std::size_t> grid_neighbors(std::size_t index, const GridShape& shape);

}  // namespace d2p
