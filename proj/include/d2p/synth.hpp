// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "d2p/core.hpp"

namespace d2p::synth {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(Key key) : m_key(key) {}
    explicit Philox4x32(std::uint64_t seed)
        : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Counter operator()(Counter counter) const;

    /// Uniform in the open interval (0, 1) with 53 random bits.
    double uniform(Counter counter) const;
    /// Standard normal via Box-Muller on one counter block.
    double normal(Counter counter) const;

private:
    Key m_key;
};

inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

enum class BiasProfile { kUniform, kBottomHeavy, kPeripheryHeavy };
enum class Placement { kAnywhere, kTopHalf };

std::string_view to_string(BiasProfile profile);
BiasProfile parse_bias_profile(std::string_view name);

struct SceneSpec {
    std::uint64_t seed = 0;
    std::size_t height = 24;
    std::size_t width = 24;
    std::size_t dim = 64;
    std::size_t object_count = 3;
    std::size_t object_radius = 2;
    double noise_sigma = 0.05;
    BiasProfile bias_profile = BiasProfile::kBottomHeavy;
    double bias_strength = 4.0;
    Placement placement = Placement::kAnywhere;

    void validate() const;
};

struct ObjectPlacement {
    std::size_t row;
    std::size_t col;
};

struct Scene {
    TokenSet tokens;
    AttentionGrid attention;
    AttentionGrid true_bias;
    /// Cells covered by an object, ascending.
    std::vector<std::size_t> salient;
    std::vector<ObjectPlacement> objects;
};

/// Multiplicative bias profile with peak multiplier `strength`.
AttentionGrid bias_grid(const GridShape& shape, BiasProfile profile, double strength);

/// Deterministic scene: disjoint disc-shaped objects with shared unit-norm
/// centroids plus feature noise, Gaussian background tokens, saliency 5 on
/// object cells and 1 elsewhere, attention = saliency * bias. All reals are
/// representable in binary32 so scenes survive dump export unchanged.
Scene generate_scene(const SceneSpec& spec);

}  // namespace d2p::synth
