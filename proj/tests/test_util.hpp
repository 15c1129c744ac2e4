// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "d2p/core.hpp"

namespace d2p::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        m_path = std::filesystem::temp_directory_path() /
                 ("d2p_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return m_path; }
    std::filesystem::path operator/(const std::string& name) const { return m_path / name; }

private:
    std::filesystem::path m_path;
};

inline TokenSet random_tokens(std::mt19937_64& rng, GridShape shape, std::size_t dim,
                              bool binary32 = false) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> f(shape.cells() * dim);
    for (double& v : f) {
        v = normal(rng);
        if (binary32) {
            v = static_cast<float>(v);
        }
    }
    return TokenSet(shape, dim, std::move(f));
}

inline AttentionGrid random_grid(std::mt19937_64& rng, GridShape shape, double lo = 0.0,
                                 double hi = 1.0, bool binary32 = false) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(shape.cells());
    for (double& x : v) {
        x = u(rng);
        if (binary32) {
            x = static_cast<float>(x);
        }
    }
    return AttentionGrid(shape, std::move(v));
}

}  // namespace d2p::testing
