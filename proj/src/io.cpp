// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace d2p::io {

namespace {

class Writer {
public:
    void bytes(const char* data, std::size_t n) {
        m_out.insert(m_out.end(), reinterpret_cast<const std::uint8_t*>(data),
                     reinterpret_cast<const std::uint8_t*>(data) + n);
    }
    void u8(std::uint8_t v) { m_out.push_back(v); }
    void u32(std::uint32_t v) {
        for (int shift = 0; shift < 32; shift += 8) {
            m_out.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

    std::vector<std::uint8_t> take() && { return std::move(m_out); }

private:
    std::vector<std::uint8_t> m_out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : m_data(data) {}

    std::size_t remaining() const { return m_data.size() - m_pos; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            fail(ErrorCode::kTruncated, std::string("file ends inside ") + what);
        }
    }
    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto out = m_data.subspan(m_pos, n);
        m_pos += n;
        return out;
    }
    std::uint8_t u8(const char* what) { return take(1, what)[0]; }
    std::uint32_t u32(const char* what) {
        auto b = take(4, what);
        return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
               (std::uint32_t{b[3]} << 24);
    }
    double f32(const char* what) { return std::bit_cast<float>(u32(what)); }

private:
    std::span<const std::uint8_t> m_data;
    std::size_t m_pos = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > UINT32_MAX) {
        fail(ErrorCode::kOutOfRange, std::string(what) + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

void read_header(Reader& in, const char (&magic)[4], const char* kind) {
    auto got = in.take(4, "magic");
    if (std::memcmp(got.data(), magic, 4) != 0) {
        fail(ErrorCode::kBadMagic, std::string("not a ") + kind + " file");
    }
    const std::uint8_t version = in.u8("version");
    if (version != kFormatVersion) {
        fail(ErrorCode::kUnsupportedVersion,
             std::string(kind) + " version " + std::to_string(version) + " is not supported");
    }
}

GridShape read_shape(Reader& in) {
    GridShape shape;
    shape.height = in.u32("header");
    shape.width = in.u32("header");
    return shape;
}

void check_payload(const Reader& in, std::uint64_t expected) {
    if (in.remaining() < expected) {
        fail(ErrorCode::kTruncated, "payload is " + std::to_string(in.remaining()) +
                                        " bytes, expected " + std::to_string(expected));
    }
    if (in.remaining() > expected) {
        fail(ErrorCode::kTrailingData, std::to_string(in.remaining() - expected) +
                                           " unexpected bytes after payload");
    }
}

// Values are checked here (rather than by the grid constructor) so the
// reported code distinguishes non-finite from negative.
std::vector<double> read_reals(Reader& in, std::size_t count, bool nonnegative, const char* what) {
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double v = in.f32(what);
        if (!std::isfinite(v)) {
            fail(ErrorCode::kNonFinite,
                 std::string(what) + " value " + std::to_string(k) + " is not finite");
        }
        if (nonnegative && v < 0.0) {
            fail(ErrorCode::kNegativeValue,
                 std::string(what) + " value " + std::to_string(k) + " is negative");
        }
        out[k] = v;
    }
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_dump(const TokenSet& tokens, const AttentionGrid& attention) {
    if (tokens.shape() != attention.shape()) {
        fail(ErrorCode::kDimensionMismatch, "token grid and attention grid differ");
    }
    Writer out;
    out.bytes(kDumpMagic, 4);
    out.u8(kFormatVersion);
    out.u32(checked_u32(tokens.shape().height, "height"));
    out.u32(checked_u32(tokens.shape().width, "width"));
    out.u32(checked_u32(tokens.dim(), "dim"));
    for (double v : tokens.features()) {
        out.f32(v);
    }
    for (double v : attention.values()) {
        out.f32(v);
    }
    return std::move(out).take();
}

TokenDump decode_dump(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    read_header(in, kDumpMagic, "token dump");
    const GridShape shape = read_shape(in);
    const std::size_t dim = in.u32("header");
    if (shape.height == 0 || shape.width == 0 || dim == 0) {
        fail(ErrorCode::kInvalidArgument, "dump header has a zero extent");
    }
    const std::uint64_t cells = std::uint64_t{shape.height} * shape.width;
    check_payload(in, 4 * cells * dim + 4 * cells);

    auto features = read_reals(in, cells * dim, false, "feature");
    auto attention = read_reals(in, cells, true, "attention");
    return TokenDump{TokenSet(shape, dim, std::move(features)),
                     AttentionGrid(shape, std::move(attention))};
}

void write_dump(const std::filesystem::path& path, const TokenSet& tokens,
                const AttentionGrid& attention) {
    write_file(path, encode_dump(tokens, attention));
}

TokenDump read_dump(const std::filesystem::path& path) { return decode_dump(read_file(path)); }

std::vector<std::uint8_t> encode_prior(const BiasPrior& prior) {
    Writer out;
    out.bytes(kPriorMagic, 4);
    out.u8(kFormatVersion);
    out.u32(checked_u32(prior.shape().height, "height"));
    out.u32(checked_u32(prior.shape().width, "width"));
    out.u32(checked_u32(prior.sample_count(), "sample count"));
    for (double v : prior.grid().values()) {
        out.f32(v);
    }
    return std::move(out).take();
}

BiasPrior decode_prior(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    read_header(in, kPriorMagic, "bias prior");
    const GridShape shape = read_shape(in);
    const std::size_t samples = in.u32("header");
    if (shape.height == 0 || shape.width == 0) {
        fail(ErrorCode::kInvalidArgument, "prior header has a zero extent");
    }
    if (samples == 0) {
        fail(ErrorCode::kInvalidArgument, "prior sample count is zero");
    }
    const std::uint64_t cells = std::uint64_t{shape.height} * shape.width;
    check_payload(in, 4 * cells);
    return BiasPrior(AttentionGrid(shape, read_reals(in, cells, true, "prior")), samples);
}

void write_prior(const std::filesystem::path& path, const BiasPrior& prior) {
    write_file(path, encode_prior(prior));
}

BiasPrior read_prior(const std::filesystem::path& path) { return decode_prior(read_file(path)); }

nlohmann::json to_json(const SelectionReport& r) {
    nlohmann::json tags = nlohmann::json::array();
    for (Provenance p : r.selection.provenance) {
        tags.push_back(std::string(to_string(p)));
    }
    return {
        {"grid", {{"height", r.grid.height}, {"width", r.grid.width}}},
        {"config",
         {{"epsilon", r.epsilon},
          {"alpha", r.alpha},
          {"theta_sim", r.theta_sim},
          {"pivot_ratio", r.pivot_ratio},
          {"n", r.budget},
          {"layer", r.layer}}},
        {"kept", r.selection.kept},
        {"pivots", r.selection.pivots},
        {"provenance", tags},
        {"edge_count", r.edge_count},
        {"excluded_count", r.selection.excluded_count},
        {"prior_resized", r.prior_resized},
    };
}

SelectionReport report_from_json(const nlohmann::json& doc) {
    try {
        SelectionReport r;
        r.grid.height = doc.at("grid").at("height").get<std::size_t>();
        r.grid.width = doc.at("grid").at("width").get<std::size_t>();
        const auto& cfg = doc.at("config");
        r.epsilon = cfg.at("epsilon").get<double>();
        r.alpha = cfg.at("alpha").get<double>();
        r.theta_sim = cfg.at("theta_sim").get<double>();
        r.pivot_ratio = cfg.at("pivot_ratio").get<double>();
        r.budget = cfg.at("n").get<std::size_t>();
        r.layer = cfg.at("layer").get<std::uint32_t>();
        r.selection.kept = doc.at("kept").get<std::vector<std::size_t>>();
        r.selection.pivots = doc.at("pivots").get<std::vector<std::size_t>>();
        for (const auto& tag : doc.at("provenance")) {
            const auto name = tag.get<std::string>();
            if (name == "pivot") {
                r.selection.provenance.push_back(Provenance::kPivot);
            } else if (name == "mis") {
                r.selection.provenance.push_back(Provenance::kMis);
            } else if (name == "fallback") {
                r.selection.provenance.push_back(Provenance::kFallback);
            } else {
                fail(ErrorCode::kInvalidArgument, "unknown provenance tag '" + name + "'");
            }
        }
        r.edge_count = doc.at("edge_count").get<std::size_t>();
        r.selection.excluded_count = doc.at("excluded_count").get<std::size_t>();
        r.prior_resized = doc.at("prior_resized").get<bool>();
        if (r.selection.provenance.size() != r.selection.kept.size()) {
            fail(ErrorCode::kInvalidArgument, "provenance and kept lists differ in length");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::kInvalidArgument, std::string("malformed selection report: ") + e.what());
    }
}

namespace {

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

bool is_scalar(const nlohmann::json& v) { return !v.is_object() && !v.is_array(); }

void emit(const nlohmann::json& v, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (v.type()) {
        case nlohmann::json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            // nlohmann's default object type is an ordered std::map.
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) {
                    out += ",\n";
                }
                first = false;
                out += inner + nlohmann::json(it.key()).dump() + ": ";
                emit(it.value(), indent + 1, out);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            const bool flat = std::all_of(v.begin(), v.end(), is_scalar);
            if (v.empty() || flat) {
                out += "[";
                for (std::size_t k = 0; k < v.size(); ++k) {
                    if (k > 0) {
                        out += ", ";
                    }
                    emit(v[k], indent + 1, out);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (k > 0) {
                    out += ",\n";
                }
                out += inner;
                emit(v[k], indent + 1, out);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
            out += format_real(v.get<double>());
            return;
        default:
            out += v.dump();
            return;
    }
}

}  // namespace

std::string canonical_json(const nlohmann::json& doc) {
    std::string out;
    emit(doc, 0, out);
    out += "\n";
    return out;
}

void write_selection_report(const std::filesystem::path& path, const SelectionReport& report) {
    write_text(path, canonical_json(to_json(report)));
}

SelectionReport read_selection_report(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (doc.is_discarded()) {
        fail(ErrorCode::kInvalidArgument, "selection report " + path.string() + " is not JSON");
    }
    return report_from_json(doc);
}

namespace {

std::vector<std::uint8_t> pgm_header(const GridShape& shape) {
    const std::string header =
        "P5\n" + std::to_string(shape.width) + " " + std::to_string(shape.height) + "\n255\n";
    return {header.begin(), header.end()};
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const AttentionGrid& grid) {
    auto out = pgm_header(grid.shape());
    const auto values = grid.values();
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    for (double v : values) {
        if (!(hi > lo)) {
            out.push_back(128);
            continue;
        }
        const double scaled = std::round(255.0 * (v - lo) / (hi - lo));
        out.push_back(static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0)));
    }
    return out;
}

std::vector<std::uint8_t> encode_mask_pgm(const GridShape& shape, std::span<const std::size_t> kept) {
    validate_shape(shape);
    auto out = pgm_header(shape);
    const std::size_t offset = out.size();
    out.resize(offset + shape.cells(), 0);
    for (std::size_t cell : kept) {
        if (cell >= shape.cells()) {
            fail(ErrorCode::kOutOfRange, "kept cell " + std::to_string(cell) + " outside grid");
        }
        out[offset + cell] = 255;
    }
    return out;
}

void render_pgm(const std::filesystem::path& path, const AttentionGrid& grid) {
    write_file(path, encode_pgm(grid));
}

void render_mask_pgm(const std::filesystem::path& path, const GridShape& shape,
                     std::span<const std::size_t> kept) {
    write_file(path, encode_mask_pgm(shape, kept));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::kIoFailure, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::kIoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::kIoFailure, "short write to " + path.string());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace d2p::io
