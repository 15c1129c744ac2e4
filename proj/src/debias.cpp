// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/debias.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace d2p {

BiasPrior::BiasPrior(AttentionGrid grid, std::size_t sample_count)
    : m_grid(std::move(grid)), m_sample_count(sample_count) {
    if (m_sample_count == 0) {
        fail(ErrorCode::kInvalidArgument, "bias prior sample count must be at least 1");
    }
}

namespace detail {

double exact_sum(std::span<const double> values) {
    std::vector<double> partials;
    for (double x : values) {
        std::size_t kept = 0;
        for (double y : partials) {
            if (std::fabs(x) < std::fabs(y)) {
                std::swap(x, y);
            }
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) {
                partials[kept++] = lo;
            }
            x = hi;
        }
        partials.resize(kept);
        partials.push_back(x);
    }

    if (partials.empty()) {
        return 0.0;
    }
    std::size_t n = partials.size();
    double hi = partials[--n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials[--n];
        hi = x + y;
        lo = y - (hi - x);
        if (lo != 0.0) {
            break;
        }
    }
    // Round-half-even correction when the remaining partials push the
    // residual past the halfway point.
    if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        if (y == x - hi) {
            hi = x;
        }
    }
    return hi;
}

}  // namespace detail

BiasPrior calibrate_bias(std::span<const AttentionGrid> maps) {
    if (maps.empty()) {
        fail(ErrorCode::kEmptyInput, "calibration requires at least one attention map");
    }
    const GridShape shape = maps.front().shape();
    for (std::size_t m = 1; m < maps.size(); ++m) {
        if (maps[m].shape() != shape) {
            fail(ErrorCode::kDimensionMismatch,
                 "calibration map " + std::to_string(m) + " is " +
                     std::to_string(maps[m].shape().height) + "x" +
                     std::to_string(maps[m].shape().width) + ", expected " +
                     std::to_string(shape.height) + "x" + std::to_string(shape.width));
        }
    }

    const double count = static_cast<double>(maps.size());
    std::vector<double> column(maps.size());
    std::vector<double> mean(shape.cells());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        for (std::size_t m = 0; m < maps.size(); ++m) {
            column[m] = maps[m][i];
        }
        mean[i] = detail::exact_sum(column) / count;
    }
    return BiasPrior(AttentionGrid(shape, std::move(mean)), maps.size());
}

namespace {

struct AxisSample {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

// Align-corners sample positions; the multiply-before-divide keeps both end
// points exact integers.
std::vector<AxisSample> axis_samples(std::size_t source, std::size_t target) {
    std::vector<AxisSample> out(target);
    for (std::size_t t = 0; t < target; ++t) {
        if (source == 1) {
            out[t] = {0, 0, 0.0};
            continue;
        }
        const double pos =
            static_cast<double>(t) * static_cast<double>(source - 1) / static_cast<double>(target - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        if (lo > source - 1) {
            lo = source - 1;
        }
        const std::size_t hi = std::min(lo + 1, source - 1);
        out[t] = {lo, hi, pos - static_cast<double>(lo)};
    }
    return out;
}

// Resample every line of `src` (lines x length, stride-addressed) to
// `target` entries.
std::vector<double> resample_axis(const std::vector<double>& src, std::size_t lines,
                                  std::size_t length, std::size_t line_stride,
                                  std::size_t elem_stride, std::size_t target,
                                  std::size_t out_line_stride, std::size_t out_elem_stride) {
    std::vector<double> out(lines * target);
    if (target == 1) {
        std::vector<double> line(length);
        for (std::size_t l = 0; l < lines; ++l) {
            for (std::size_t k = 0; k < length; ++k) {
                line[k] = src[l * line_stride + k * elem_stride];
            }
            out[l * out_line_stride] = detail::exact_sum(line) / static_cast<double>(length);
        }
        return out;
    }
    const auto samples = axis_samples(length, target);
    for (std::size_t l = 0; l < lines; ++l) {
        for (std::size_t t = 0; t < target; ++t) {
            const AxisSample& s = samples[t];
            const double a = src[l * line_stride + s.lo * elem_stride];
            const double b = src[l * line_stride + s.hi * elem_stride];
            out[l * out_line_stride + t * out_elem_stride] = (1.0 - s.frac) * a + s.frac * b;
        }
    }
    return out;
}

}  // namespace

BiasPrior resize_bias(const BiasPrior& prior, std::size_t target_height, std::size_t target_width) {
    if (target_height == 0 || target_width == 0) {
        fail(ErrorCode::kInvalidArgument, "resize target extents must be positive");
    }
    const GridShape src = prior.shape();
    if (src.height == target_height && src.width == target_width) {
        return prior;
    }

    const auto values = prior.grid().values();
    std::vector<double> source(values.begin(), values.end());

    // Columns first: height x target_width.
    std::vector<double> horizontal =
        resample_axis(source, src.height, src.width, src.width, 1, target_width, target_width, 1);
    // Then rows: target_height x target_width.
    std::vector<double> resized = resample_axis(horizontal, target_width, src.height, 1,
                                                target_width, target_height, 1, target_width);
    for (double& v : resized) {
        if (v < 0.0) {
            v = 0.0;
        }
    }
    return BiasPrior(AttentionGrid({target_height, target_width}, std::move(resized)),
                     prior.sample_count());
}

AttentionGrid relative_attention(const AttentionGrid& raw, const BiasPrior& prior, double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(ErrorCode::kInvalidArgument, "epsilon must be positive and finite");
    }
    if (raw.shape() != prior.shape()) {
        fail(ErrorCode::kDimensionMismatch, "attention and bias prior grids differ; resize first");
    }
    std::vector<double> out(raw.size());
    const auto bias = prior.grid().values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = raw[i] / (bias[i] + epsilon);
    }
    return AttentionGrid(raw.shape(), std::move(out));
}

}  // namespace d2p
