// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
    return d2p::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
