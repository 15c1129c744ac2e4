// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace d2p {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument: return "invalid argument";
        case ErrorCode::kOutOfRange: return "out of range";
        case ErrorCode::kDimensionMismatch: return "dimension mismatch";
        case ErrorCode::kNonFinite: return "non-finite value";
        case ErrorCode::kNegativeValue: return "negative value";
        case ErrorCode::kEmptyInput: return "empty input";
        case ErrorCode::kBadMagic: return "bad magic";
        case ErrorCode::kUnsupportedVersion: return "unsupported version";
        case ErrorCode::kTruncated: return "truncated payload";
        case ErrorCode::kTrailingData: return "trailing data";
        case ErrorCode::kIoFailure: return "i/o failure";
        case ErrorCode::kEnumerationLimit: return "enumeration limit exceeded";
    }
    return "unknown";
}

void validate_shape(const GridShape& shape) {
    if (shape.height == 0 || shape.width == 0) {
        fail(ErrorCode::kInvalidArgument, "grid extents must be positive, got " +
                                              std::to_string(shape.height) + "x" +
                                              std::to_string(shape.width));
    }
}

TokenSet::TokenSet(GridShape shape, std::size_t dim, std::vector<double> features)
    : m_shape(shape), m_dim(dim), m_features(std::move(features)) {
    validate_shape(m_shape);
    if (m_dim == 0) {
        fail(ErrorCode::kInvalidArgument, "feature dimension must be positive");
    }
    if (m_features.size() != m_shape.cells() * m_dim) {
        fail(ErrorCode::kDimensionMismatch,
             "expected " + std::to_string(m_shape.cells() * m_dim) + " feature values, got " +
                 std::to_string(m_features.size()));
    }
    for (std::size_t k = 0; k < m_features.size(); ++k) {
        if (!std::isfinite(m_features[k])) {
            fail(ErrorCode::kNonFinite,
                 "feature of token " + std::to_string(k / m_dim) + " is not finite");
        }
    }
}

AttentionGrid::AttentionGrid(GridShape shape, std::vector<double> values)
    : m_shape(shape), m_values(std::move(values)) {
    validate_shape(m_shape);
    if (m_values.size() != m_shape.cells()) {
        fail(ErrorCode::kDimensionMismatch,
             "expected " + std::to_string(m_shape.cells()) + " attention values, got " +
                 std::to_string(m_values.size()));
    }
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (!std::isfinite(m_values[i])) {
            fail(ErrorCode::kNonFinite, "attention at cell " + std::to_string(i) + " is not finite");
        }
        if (m_values[i] < 0.0) {
            fail(ErrorCode::kNegativeValue, "attention at cell " + std::to_string(i) + " is negative");
        }
    }
}

Budget Budget::absolute(std::size_t count) {
    if (count == 0) {
        fail(ErrorCode::kInvalidArgument, "absolute budget must be at least 1");
    }
    return Budget(false, count, 0.0);
}

Budget Budget::ratio(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "budget ratio must lie in (0, 1]");
    }
    return Budget(true, 0, fraction);
}

namespace {

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void PruneConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
    }
    if (!in_unit_interval(alpha)) {
        fail(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
    }
    if (!in_unit_interval(theta_sim)) {
        fail(ErrorCode::kInvalidArgument, "theta_sim must lie in [0, 1]");
    }
    if (!in_unit_interval(pivot_ratio)) {
        fail(ErrorCode::kInvalidArgument, "pivot_ratio must lie in [0, 1]");
    }
}

std::size_t resolve_budget(const PruneConfig& config, std::size_t token_count) {
    if (token_count == 0) {
        fail(ErrorCode::kInvalidArgument, "token count must be positive");
    }
    config.validate();
    const Budget& budget = config.budget;
    if (!budget.is_ratio()) {
        if (budget.count() < 1 || budget.count() > token_count) {
            fail(ErrorCode::kOutOfRange, "budget " + std::to_string(budget.count()) +
                                             " outside [1, " + std::to_string(token_count) + "]");
        }
        return budget.count();
    }
    const double scaled = std::floor(budget.fraction() * static_cast<double>(token_count));
    if (scaled < 1.0) {
        return 1;
    }
    return std::min(static_cast<std::size_t>(scaled), token_count);
}

std::vector<std::size_t> grid_neighbors(std::size_t index, const GridShape& shape) {
    validate_shape(shape);
    if (index >= shape.cells()) {
        fail(ErrorCode::kOutOfRange, "cell " + std::to_string(index) + " outside grid of " +
                                         std::to_string(shape.cells()) + " cells");
    }
    const std::size_t row = shape.row(index);
    const std::size_t col = shape.col(index);
    const std::size_t r0 = row == 0 ? 0 : row - 1;
    const std::size_t r1 = std::min(row + 1, shape.height - 1);
    const std::size_t c0 = col == 0 ? 0 : col - 1;
    const std::size_t c1 = std::min(col + 1, shape.width - 1);

    std::vector<std::size_t> out;
    out.reserve(8);
    for (std::size_t r = r0; r <= r1; ++r) {
        for (std::size_t c = c0; c <= c1; ++c) {
            if (r != row || c != col) {
                out.push_back(shape.index(r, c));
            }
        }
    }
    return out;
}

}  // namespace d2p
