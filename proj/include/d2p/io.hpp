// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// On-disk formats. All multi-byte fields are little-endian, reals are
// IEEE-754 binary32, there is no padding.
//
//   token dump  : "D2TD" u8(1) u32 h u32 w u32 D f32[h*w*D] features f32[h*w] attention
//   bias prior  : "D2BP" u8(1) u32 h u32 w u32 samples f32[h*w] values
//
// Selection reports are canonical JSON (sorted keys, reals printed with nine
// significant digits) so that re-reading and re-writing is byte-stable.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "d2p/core.hpp"
#include "d2p/debias.hpp"
#include "d2p/select.hpp"

namespace d2p::io {

inline constexpr char kDumpMagic[4] = {'D', '2', 'T', 'D'};
inline constexpr char kPriorMagic[4] = {'D', '2', 'B', 'P'};
inline constexpr std::uint8_t kFormatVersion = 1;

struct TokenDump {
    TokenSet tokens;
    AttentionGrid attention;
};

std::vector<std::uint8_t> encode_dump(const TokenSet& tokens, const AttentionGrid& attention);
TokenDump decode_dump(std::span<const std::uint8_t> bytes);
void write_dump(const std::filesystem::path& path, const TokenSet& tokens,
                const AttentionGrid& attention);
TokenDump read_dump(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_prior(const BiasPrior& prior);
BiasPrior decode_prior(std::span<const std::uint8_t> bytes);
void write_prior(const std::filesystem::path& path, const BiasPrior& prior);
BiasPrior read_prior(const std::filesystem::path& path);

/// Everything a prune run records about its decision.
struct SelectionReport {
    GridShape grid;
    double epsilon = 0.0;
    double alpha = 0.0;
    double theta_sim = 0.0;
    double pivot_ratio = 0.0;
    std::size_t budget = 0;
    std::uint32_t layer = 0;
    std::size_t edge_count = 0;
    bool prior_resized = false;
    SelectionResult selection;

    bool operator==(const SelectionReport&) const = default;
};

nlohmann::json to_json(const SelectionReport& report);
SelectionReport report_from_json(const nlohmann::json& doc);

/// Canonical text form of any JSON document: sorted keys, two-space
/// indentation, scalar arrays on one line, reals as %.9g.
std::string canonical_json(const nlohmann::json& doc);

void write_selection_report(const std::filesystem::path& path, const SelectionReport& report);
SelectionReport read_selection_report(const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255) of a grid, min-max scaled; constant grids
/// render as mid-grey 128.
std::vector<std::uint8_t> encode_pgm(const AttentionGrid& grid);
/// Binary PGM of a selection mask: kept cells 255, pruned cells 0.
std::vector<std::uint8_t> encode_mask_pgm(const GridShape& shape, std::span<const std::size_t> kept);
void render_pgm(const std::filesystem::path& path, const AttentionGrid& grid);
void render_mask_pgm(const std::filesystem::path& path, const GridShape& shape,
                     std::span<const std::size_t> kept);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace d2p::io
