// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "d2p/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <thread>

namespace d2p {

class GraphBuilder {
public:
    explicit GraphBuilder(std::size_t size)
        : m_size(size), m_words((size + 63) / 64), m_bits(size * m_words, 0) {}

    void add(std::size_t i, std::size_t j) {
        m_bits[i * m_words + j / 64] |= std::uint64_t{1} << (j % 64);
        m_bits[j * m_words + i / 64] |= std::uint64_t{1} << (i % 64);
    }

    AdjacencyGraph finish() && {
        AdjacencyGraph g(0);
        g.m_size = m_size;
        g.m_words = m_words;
        g.m_offsets.assign(m_size + 1, 0);
        std::size_t total = 0;
        for (std::size_t i = 0; i < m_size; ++i) {
            for (std::size_t w = 0; w < m_words; ++w) {
                total += static_cast<std::size_t>(std::popcount(m_bits[i * m_words + w]));
            }
            g.m_offsets[i + 1] = total;
        }
        g.m_neighbors.resize(total);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < m_size; ++i) {
            for (std::size_t w = 0; w < m_words; ++w) {
                std::uint64_t word = m_bits[i * m_words + w];
                while (word != 0) {
                    const int bit = std::countr_zero(word);
                    g.m_neighbors[pos++] = static_cast<std::uint32_t>(w * 64 + bit);
                    word &= word - 1;
                }
            }
        }
        g.m_bits = std::move(m_bits);
        return g;
    }

private:
    std::size_t m_size;
    std::size_t m_words;
    std::vector<std::uint64_t> m_bits;
};

SimilarityMatrix::SimilarityMatrix(std::size_t size, std::vector<double> values)
    : m_size(size), m_values(std::move(values)) {
    if (m_values.size() != m_size * m_size) {
        fail(ErrorCode::kDimensionMismatch, "similarity matrix needs " +
                                                std::to_string(m_size * m_size) + " values, got " +
                                                std::to_string(m_values.size()));
    }
    for (std::size_t i = 0; i < m_size; ++i) {
        for (std::size_t j = 0; j < m_size; ++j) {
            const double v = m_values[i * m_size + j];
            if (!std::isfinite(v)) {
                fail(ErrorCode::kNonFinite, "similarity entry is not finite");
            }
            if (j > i && v != m_values[j * m_size + i]) {
                fail(ErrorCode::kInvalidArgument, "similarity matrix is not symmetric at (" +
                                                      std::to_string(i) + ", " + std::to_string(j) +
                                                      ")");
            }
        }
    }
}

AdjacencyGraph::AdjacencyGraph(std::size_t size)
    : m_size(size), m_words((size + 63) / 64), m_bits(size * m_words, 0), m_offsets(size + 1, 0) {}

AdjacencyGraph AdjacencyGraph::from_edges(
    std::size_t size, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    GraphBuilder builder(size);
    for (const auto& [i, j] : edges) {
        if (i >= size || j >= size) {
            fail(ErrorCode::kOutOfRange, "edge endpoint outside graph");
        }
        if (i == j) {
            fail(ErrorCode::kInvalidArgument, "self-loop on node " + std::to_string(i));
        }
        builder.add(i, j);
    }
    return std::move(builder).finish();
}

std::vector<std::size_t> AdjacencyGraph::degrees() const {
    std::vector<std::size_t> out(m_size);
    for (std::size_t i = 0; i < m_size; ++i) {
        out[i] = degree(i);
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> AdjacencyGraph::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edge_count());
    for (std::size_t i = 0; i < m_size; ++i) {
        for (std::uint32_t j : neighbors(i)) {
            if (j > i) {
                out.emplace_back(i, j);
            }
        }
    }
    return out;
}

namespace {

// Eight interleaved partial sums combined in a fixed tree, so every entry
// has one accumulation order regardless of blocking or threading.
inline double dot(const double* a, const double* b, std::size_t dim) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t k = 0;
    for (; k + 8 <= dim; k += 8) {
        for (std::size_t l = 0; l < 8; ++l) {
            acc[l] += a[k + l] * b[k + l];
        }
    }
    double tail = 0.0;
    for (; k < dim; ++k) {
        tail += a[k] * b[k];
    }
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
}

inline double cosine(double dot_ij, double sq_i, double sq_j) {
    if (sq_i == 0.0 || sq_j == 0.0) {
        return 0.0;
    }
    double denom = std::sqrt(sq_i * sq_j);
    if (denom == 0.0 || !std::isfinite(denom)) {
        denom = std::sqrt(sq_i) * std::sqrt(sq_j);
    }
    return std::clamp(dot_ij / denom, -1.0, 1.0);
}

template <typename Fn>
void parallel_rows(std::size_t rows, unsigned threads, Fn&& body) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < rows; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < rows; i += workers) {
                body(i);
            }
        });
    }
}

// Full cosine matrix, diagonal 1.
std::vector<double> cosine_matrix(const TokenSet& tokens, unsigned threads) {
    const std::size_t n = tokens.size();
    const std::size_t dim = tokens.dim();
    const double* feats = tokens.features().data();

    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        sq[i] = dot(feats + i * dim, feats + i * dim, dim);
    }

    std::vector<double> out(n * n);
    parallel_rows(n, threads, [&](std::size_t i) {
        const double* hi = feats + i * dim;
        out[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            out[i * n + j] = cosine(dot(hi, feats + j * dim, dim), sq[i], sq[j]);
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            out[i * n + j] = out[j * n + i];
        }
    }
    return out;
}

struct Range {
    double lo;
    double hi;
    bool degenerate() const { return !(hi > lo); }
};

Range offdiagonal_range(const std::vector<double>& m, std::size_t n) {
    Range r{0.0, 0.0};
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = m[i * n + j];
            if (first) {
                r = {v, v};
                first = false;
            } else {
                r.lo = std::min(r.lo, v);
                r.hi = std::max(r.hi, v);
            }
        }
    }
    return r;
}

inline double normalize_entry(double v, const Range& r) { return (v - r.lo) / (r.hi - r.lo); }

inline double fuse_entry(double semantic, double spatial, double alpha) {
    return alpha * semantic + (1.0 - alpha) * spatial;
}

inline bool spatially_adjacent(std::size_t i, std::size_t j, const GridShape& shape) {
    const auto ri = static_cast<std::ptrdiff_t>(shape.row(i));
    const auto rj = static_cast<std::ptrdiff_t>(shape.row(j));
    const auto ci = static_cast<std::ptrdiff_t>(shape.col(i));
    const auto cj = static_cast<std::ptrdiff_t>(shape.col(j));
    return i != j && std::abs(ri - rj) <= 1 && std::abs(ci - cj) <= 1;
}

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, std::string(name) + " must lie in [0, 1]");
    }
}

}  // namespace

SimilarityMatrix semantic_similarity(const TokenSet& tokens, unsigned threads) {
    return SimilarityMatrix(SimilarityMatrix::Trusted{}, tokens.size(),
                            cosine_matrix(tokens, threads));
}

SimilarityMatrix minmax_normalize(const SimilarityMatrix& sim) {
    const std::size_t n = sim.size();
    const Range range = offdiagonal_range(sim.m_values, n);
    std::vector<double> out(n * n, 0.0);
    if (!range.degenerate()) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    out[i * n + j] = normalize_entry(sim.m_values[i * n + j], range);
                }
            }
        }
    }
    return SimilarityMatrix(SimilarityMatrix::Trusted{}, n, std::move(out));
}

AdjacencyGraph spatial_adjacency(std::size_t height, std::size_t width) {
    const GridShape shape{height, width};
    validate_shape(shape);
    GraphBuilder builder(shape.cells());
    for (std::size_t i = 0; i < shape.cells(); ++i) {
        for (std::size_t j : grid_neighbors(i, shape)) {
            if (j > i) {
                builder.add(i, j);
            }
        }
    }
    return std::move(builder).finish();
}

SimilarityMatrix fuse_similarity(const SimilarityMatrix& semantic_norm, const AdjacencyGraph& spatial,
                                 double alpha) {
    check_unit(alpha, "alpha");
    const std::size_t n = semantic_norm.size();
    if (spatial.size() != n) {
        fail(ErrorCode::kDimensionMismatch, "semantic and spatial graphs differ in size");
    }
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                out[i * n + j] = fuse_entry(semantic_norm.at(i, j),
                                            spatial.has_edge(i, j) ? 1.0 : 0.0, alpha);
            }
        }
    }
    return SimilarityMatrix(SimilarityMatrix::Trusted{}, n, std::move(out));
}

AdjacencyGraph threshold_graph(const SimilarityMatrix& fused, double theta) {
    const std::size_t n = fused.size();
    GraphBuilder builder(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (fused.at(i, j) > theta) {
                builder.add(i, j);
            }
        }
    }
    return std::move(builder).finish();
}

AdjacencyGraph build_graph(const TokenSet& tokens, const PruneConfig& config, unsigned threads) {
    config.validate();
    const std::size_t n = tokens.size();
    const GridShape& shape = tokens.shape();
    const std::vector<double> cos = cosine_matrix(tokens, threads);
    const Range range = offdiagonal_range(cos, n);
    const bool flat = range.degenerate();

    GraphBuilder builder(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double semantic = flat ? 0.0 : normalize_entry(cos[i * n + j], range);
            const double spatial = spatially_adjacent(i, j, shape) ? 1.0 : 0.0;
            if (fuse_entry(semantic, spatial, config.alpha) > config.theta_sim) {
                builder.add(i, j);
            }
        }
    }
    return std::move(builder).finish();
}

}  // namespace d2p
