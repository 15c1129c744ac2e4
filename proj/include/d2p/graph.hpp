// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "d2p/core.hpp"

namespace d2p {

class AdjacencyGraph;

/// Dense symmetric N x N matrix of finite reals.
class SimilarityMatrix {
public:
    /// Validates squareness, finiteness and exact symmetry.
    SimilarityMatrix(std::size_t size, std::vector<double> values);

    std::size_t size() const noexcept { return m_size; }
    double at(std::size_t i, std::size_t j) const { return m_values[i * m_size + j]; }
    std::span<const double> values() const noexcept { return m_values; }

private:
    struct Trusted {};
    SimilarityMatrix(Trusted, std::size_t size, std::vector<double> values)
        : m_size(size), m_values(std::move(values)) {}

    friend SimilarityMatrix semantic_similarity(const TokenSet&, unsigned);
    friend SimilarityMatrix minmax_normalize(const SimilarityMatrix&);
    friend class AdjacencyGraph;
    friend SimilarityMatrix fuse_similarity(const SimilarityMatrix&, const AdjacencyGraph&, double);

    std::size_t m_size;
    std::vector<double> m_values;
};

/// Undirected loop-free graph over N tokens. Keeps both a packed bit matrix
/// for O(1) edge queries and CSR neighbour lists for traversal.
class AdjacencyGraph {
public:
    /// Empty graph on `size` nodes.
    explicit AdjacencyGraph(std::size_t size);

    /// Builds from an undirected edge list; duplicates are merged.
    /// Self-loops and out-of-range endpoints are rejected.
    static AdjacencyGraph from_edges(std::size_t size,
                                     std::span<const std::pair<std::size_t, std::size_t>> edges);

    std::size_t size() const noexcept { return m_size; }
    std::size_t edge_count() const noexcept { return m_neighbors.size() / 2; }
    bool has_edge(std::size_t i, std::size_t j) const {
        return (m_bits[i * m_words + j / 64] >> (j % 64)) & 1u;
    }
    std::span<const std::uint32_t> neighbors(std::size_t i) const {
        return {m_neighbors.data() + m_offsets[i], m_offsets[i + 1] - m_offsets[i]};
    }
    std::size_t degree(std::size_t i) const { return m_offsets[i + 1] - m_offsets[i]; }
    std::vector<std::size_t> degrees() const;

    /// Undirected edges (i < j), lexicographic.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    bool operator==(const AdjacencyGraph& other) const {
        return m_size == other.m_size && m_bits == other.m_bits;
    }

private:
    friend class GraphBuilder;

    std::size_t m_size;
    std::size_t m_words;
    std::vector<std::uint64_t> m_bits;
    std::vector<std::size_t> m_offsets;
    std::vector<std::uint32_t> m_neighbors;
};

/// Cosine similarity of every token pair. Zero-norm tokens have similarity
/// 0 with everything; the diagonal is 1. `threads` only affects speed.
SimilarityMatrix semantic_similarity(const TokenSet& tokens, unsigned threads = 1);

/// Min-max scaling over off-diagonal entries; diagonal forced to 0 and a
/// degenerate range yields the zero matrix.
SimilarityMatrix minmax_normalize(const SimilarityMatrix& sim);

/// 8-connectivity graph of an h x w grid.
AdjacencyGraph spatial_adjacency(std::size_t height, std::size_t width);

/// alpha * semantic + (1 - alpha) * spatial, zero diagonal.
SimilarityMatrix fuse_similarity(const SimilarityMatrix& semantic_norm, const AdjacencyGraph& spatial,
                                 double alpha);

/// Edge (i, j) iff fused(i, j) > theta (strict).
AdjacencyGraph threshold_graph(const SimilarityMatrix& fused, double theta);

/// Full hybrid-graph construction. Bit-identical to chaining the five
/// operations above but never materialises the intermediate matrices.
AdjacencyGraph build_graph(const TokenSet& tokens, const PruneConfig& config, unsigned threads = 1);

}  // namespace d2p
