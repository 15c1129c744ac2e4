// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace d2p::synth {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

// Counter-block streams.
constexpr std::uint32_t kStreamPlacement = 1;
constexpr std::uint32_t kStreamCentroid = 2;
constexpr std::uint32_t kStreamFeature = 3;

constexpr std::size_t kPlacementAttempts = 10000;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t{a} * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

double to_binary32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
    Key key = m_key;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

double Philox4x32::uniform(Counter counter) const {
    const Counter r = (*this)(counter);
    const std::uint64_t bits = (std::uint64_t{r[0]} << 21) ^ (r[1] >> 11);
    return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1p-53;
}

double Philox4x32::normal(Counter counter) const {
    const Counter r = (*this)(counter);
    const std::uint64_t a = (std::uint64_t{r[0]} << 21) ^ (r[1] >> 11);
    const std::uint64_t b = (std::uint64_t{r[2]} << 21) ^ (r[3] >> 11);
    const double u1 = (static_cast<double>(a & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1p-53;
    const double u2 = (static_cast<double>(b & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string_view to_string(BiasProfile profile) {
    switch (profile) {
        case BiasProfile::kUniform: return "uniform";
        case BiasProfile::kBottomHeavy: return "bottom_heavy";
        case BiasProfile::kPeripheryHeavy: return "periphery_heavy";
    }
    return "unknown";
}

BiasProfile parse_bias_profile(std::string_view name) {
    if (name == "uniform") return BiasProfile::kUniform;
    if (name == "bottom_heavy") return BiasProfile::kBottomHeavy;
    if (name == "periphery_heavy") return BiasProfile::kPeripheryHeavy;
    fail(ErrorCode::kInvalidArgument, "unknown bias profile '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
    validate_shape({height, width});
    if (dim == 0) {
        fail(ErrorCode::kInvalidArgument, "scene feature dimension must be positive");
    }
    if (!std::isfinite(noise_sigma) || noise_sigma < 0.0) {
        fail(ErrorCode::kInvalidArgument, "noise sigma must be finite and nonnegative");
    }
    if (!std::isfinite(bias_strength) || bias_strength < 1.0) {
        fail(ErrorCode::kInvalidArgument, "bias strength must be at least 1");
    }
    const std::size_t extent = 2 * object_radius + 1;
    const std::size_t rows = placement == Placement::kTopHalf ? height / 2 : height;
    if (object_count > 0 && (extent > rows || extent > width)) {
        fail(ErrorCode::kInvalidArgument, "objects of radius " + std::to_string(object_radius) +
                                              " do not fit the grid");
    }
}

AttentionGrid bias_grid(const GridShape& shape, BiasProfile profile, double strength) {
    validate_shape(shape);
    std::vector<double> out(shape.cells(), 1.0);
    if (profile == BiasProfile::kBottomHeavy && shape.height > 1) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double t =
                static_cast<double>(shape.row(i)) / static_cast<double>(shape.height - 1);
            out[i] = 1.0 + (strength - 1.0) * t;
        }
    } else if (profile == BiasProfile::kPeripheryHeavy) {
        const double cr = (static_cast<double>(shape.height) - 1.0) / 2.0;
        const double cc = (static_cast<double>(shape.width) - 1.0) / 2.0;
        const double reach = std::max(cr, cc);
        if (reach > 0.0) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                const double d = std::max(std::fabs(static_cast<double>(shape.row(i)) - cr),
                                          std::fabs(static_cast<double>(shape.col(i)) - cc));
                out[i] = 1.0 + (strength - 1.0) * (d / reach);
            }
        }
    }
    for (double& v : out) {
        v = to_binary32(v);
    }
    return AttentionGrid(shape, std::move(out));
}

namespace {

bool in_disc(std::size_t row, std::size_t col, const ObjectPlacement& o, std::size_t radius) {
    const auto dr = static_cast<std::int64_t>(row) - static_cast<std::int64_t>(o.row);
    const auto dc = static_cast<std::int64_t>(col) - static_cast<std::int64_t>(o.col);
    const auto r = static_cast<std::int64_t>(radius);
    return dr * dr + dc * dc <= r * r;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    const GridShape shape{spec.height, spec.width};
    const Philox4x32 rng(spec.seed);
    const auto seed_word = static_cast<std::uint32_t>(spec.seed >> 32) ^ 0x5eedu;

    // Disjoint discs by rejection; discs are disjoint when centres are more
    // than 2r apart in Euclidean distance.
    const std::size_t r = spec.object_radius;
    const std::size_t row_span =
        (spec.placement == Placement::kTopHalf ? spec.height / 2 : spec.height) - 2 * r;
    const std::size_t col_span = spec.width - 2 * r;
    std::vector<ObjectPlacement> objects;
    std::uint32_t attempt = 0;
    while (objects.size() < spec.object_count) {
        if (attempt >= kPlacementAttempts) {
            fail(ErrorCode::kInvalidArgument, "could not place " +
                                                  std::to_string(spec.object_count) +
                                                  " disjoint objects on the grid");
        }
        const double ur = rng.uniform({kStreamPlacement, attempt, 0, seed_word});
        const double uc = rng.uniform({kStreamPlacement, attempt, 1, seed_word});
        ++attempt;
        const ObjectPlacement cand{r + static_cast<std::size_t>(ur * static_cast<double>(row_span)),
                                   r + static_cast<std::size_t>(uc * static_cast<double>(col_span))};
        const bool clear = std::none_of(objects.begin(), objects.end(), [&](const ObjectPlacement& o) {
            const auto dr = static_cast<double>(cand.row) - static_cast<double>(o.row);
            const auto dc = static_cast<double>(cand.col) - static_cast<double>(o.col);
            return std::sqrt(dr * dr + dc * dc) <= 2.0 * static_cast<double>(r);
        });
        if (clear) {
            objects.push_back(cand);
        }
    }

    std::vector<std::vector<double>> centroids(objects.size(), std::vector<double>(spec.dim));
    for (std::size_t k = 0; k < objects.size(); ++k) {
        double norm_sq = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) {
            const double g = rng.normal({kStreamCentroid, static_cast<std::uint32_t>(k),
                                         static_cast<std::uint32_t>(d), seed_word});
            centroids[k][d] = g;
            norm_sq += g * g;
        }
        const double norm = std::sqrt(norm_sq);
        for (double& v : centroids[k]) {
            v /= norm;
        }
    }

    const double background_scale = 1.0 / std::sqrt(static_cast<double>(spec.dim));
    std::vector<double> features(shape.cells() * spec.dim);
    std::vector<double> saliency(shape.cells(), 1.0);
    std::vector<std::size_t> salient;
    for (std::size_t i = 0; i < shape.cells(); ++i) {
        const std::size_t row = shape.row(i);
        const std::size_t col = shape.col(i);
        const auto owner = std::find_if(objects.begin(), objects.end(), [&](const ObjectPlacement& o) {
            return in_disc(row, col, o, r);
        });
        const bool on_object = owner != objects.end();
        if (on_object) {
            saliency[i] = 5.0;
            salient.push_back(i);
        }
        for (std::size_t d = 0; d < spec.dim; ++d) {
            const double g = rng.normal({kStreamFeature, static_cast<std::uint32_t>(i),
                                         static_cast<std::uint32_t>(d), seed_word});
            const double v =
                on_object ? centroids[static_cast<std::size_t>(owner - objects.begin())][d] +
                                spec.noise_sigma * g
                          : background_scale * g;
            features[i * spec.dim + d] = to_binary32(v);
        }
    }

    AttentionGrid bias = bias_grid(shape, spec.bias_profile, spec.bias_strength);
    std::vector<double> attention(shape.cells());
    for (std::size_t i = 0; i < attention.size(); ++i) {
        attention[i] = to_binary32(saliency[i] * bias[i]);
    }

    return Scene{TokenSet(shape, spec.dim, std::move(features)),
                 AttentionGrid(shape, std::move(attention)), std::move(bias), std::move(salient),
                 std::move(objects)};
}

}  // namespace d2p::synth
