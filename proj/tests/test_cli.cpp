// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "d2p/io.hpp"
#include "test_util.hpp"

namespace d2p::cli {
namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "d2prune");
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string text_of(const std::filesystem::path& p) {
    const auto b = io::read_file(p);
    return {b.begin(), b.end()};
}

void write_attention_dump(const std::filesystem::path& p, GridShape s, std::vector<double> att) {
    std::vector<double> f(s.cells() * 2);
    for (std::size_t i = 0; i < s.cells(); ++i) {
        f[2 * i] = 1.0 + double(i);
        f[2 * i + 1] = double(i % 3);
    }
    io::write_dump(p, TokenSet(s, 2, f), AttentionGrid(s, std::move(att)));
}

void write_uniform_prior(const std::filesystem::path& p, GridShape s) {
    io::write_prior(p, BiasPrior(AttentionGrid(s, std::vector<double>(s.cells(), 1.0)), 1));
}

TEST(Calibrate, AveragesDumps) {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "dumps");
    write_attention_dump(dir / "dumps/a.d2td", {1, 2}, {1, 3});
    write_attention_dump(dir / "dumps/b.d2td", {1, 2}, {3, 5});
    const Result r = run_cli({"calibrate", "--dumps", (dir / "dumps").string(), "--out",
                              (dir / "p.d2bp").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("sample_count: 2"), std::string::npos);
    const BiasPrior p = io::read_prior(dir / "p.d2bp");
    EXPECT_EQ(p.sample_count(), 2u);
    EXPECT_EQ(p.grid()[0], 2.0);
    EXPECT_EQ(p.grid()[1], 4.0);
}

TEST(Calibrate, EmptyDirectory) {
    testing::TempDir dir;
    const Result r =
        run_cli({"calibrate", "--dumps", dir.path().string(), "--out", (dir / "p.d2bp").string()});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("no dumps found"), std::string::npos);
}

TEST(Calibrate, MixedGridSizes) {
    testing::TempDir dir;
    std::filesystem::create_directories(dir / "dumps");
    write_attention_dump(dir / "dumps/a.d2td", {2, 2}, {1, 1, 1, 1});
    write_attention_dump(dir / "dumps/b.d2td", {3, 3}, std::vector<double>(9, 1.0));
    const Result r = run_cli({"calibrate", "--dumps", (dir / "dumps").string(), "--out",
                              (dir / "p.d2bp").string()});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("dimension mismatch"), std::string::npos);
    EXPECT_NE(r.err.find("b.d2td"), std::string::npos);
}

class PruneTest : public ::testing::Test {
protected:
    void SetUp() override {
        write_attention_dump(dir / "x.d2td", {1, 4}, {0.9, 0.8, 0.7, 0.1});
        write_uniform_prior(dir / "u.d2bp", {1, 4});
    }
    Result prune(std::vector<std::string> extra, const std::string& report = "r.json") {
        std::vector<std::string> args = {"prune", "--dump", (dir / "x.d2td").string(),
                                         "--prior", (dir / "u.d2bp").string(),
                                         "--out", (dir / report).string()};
        args.insert(args.end(), extra.begin(), extra.end());
        return run_cli(args);
    }
    testing::TempDir dir;
};

TEST_F(PruneTest, ChainExample) {
    const Result r = prune({"--alpha", "0", "--theta", "0.5", "--keep", "2", "--pivot-ratio", "0.5"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const io::SelectionReport rep = io::read_selection_report(dir / "r.json");
    EXPECT_EQ(rep.selection.kept, (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(rep.selection.pivots, (std::vector<std::size_t>{0}));
    EXPECT_EQ(rep.edge_count, 3u);
    EXPECT_EQ(rep.budget, 2u);
    EXPECT_FALSE(rep.prior_resized);
}

TEST_F(PruneTest, FullBudget) {
    ASSERT_EQ(prune({"--keep", "4"}).code, kExitOk);
    EXPECT_EQ(io::read_selection_report(dir / "r.json").selection.kept,
              (std::vector<std::size_t>{0, 1, 2, 3}));
    ASSERT_EQ(prune({"--keep", "1.0"}).code, kExitOk);
    EXPECT_EQ(io::read_selection_report(dir / "r.json").selection.kept.size(), 4u);
}

TEST_F(PruneTest, ResizesMismatchedPrior) {
    write_uniform_prior(dir / "u.d2bp", {3, 3});
    const Result r = prune({"--keep", "2"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(io::read_selection_report(dir / "r.json").prior_resized);
}

TEST_F(PruneTest, RendersImages) {
    const Result r = prune({"--keep", "2", "--render-dir", (dir / "img").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    for (const char* name : {"attention.pgm", "relative.pgm", "prior.pgm", "mask.pgm"}) {
        EXPECT_EQ(text_of(dir / "img" / name).substr(0, 11), "P5\n4 1\n255\n") << name;
    }
}

TEST_F(PruneTest, ConfigFileAndOverride) {
    io::write_text(dir / "c.json", R"({"alpha": 0, "theta_sim": 0.5, "keep": 2, "pivot_ratio": 0.5})");
    ASSERT_EQ(run_cli({"--config", (dir / "c.json").string(), "prune", "--dump",
                       (dir / "x.d2td").string(), "--prior", (dir / "u.d2bp").string(), "--out",
                       (dir / "r.json").string()})
                  .code,
              kExitOk);
    EXPECT_EQ(io::read_selection_report(dir / "r.json").selection.kept,
              (std::vector<std::size_t>{0, 2}));
    ASSERT_EQ(run_cli({"--config", (dir / "c.json").string(), "prune", "--dump",
                       (dir / "x.d2td").string(), "--prior", (dir / "u.d2bp").string(), "--out",
                       (dir / "r.json").string(), "--keep", "3"})
                  .code,
              kExitOk);
    EXPECT_EQ(io::read_selection_report(dir / "r.json").budget, 3u);

    io::write_text(dir / "bad.json", R"({"alpah": 0})");
    EXPECT_EQ(run_cli({"--config", (dir / "bad.json").string(), "prune", "--dump",
                       (dir / "x.d2td").string(), "--prior", (dir / "u.d2bp").string(), "--out",
                       (dir / "r.json").string()})
                  .code,
              kExitUsage);
}

TEST_F(PruneTest, ThreadCountDoesNotChangeOutput) {
    ASSERT_EQ(prune({"--keep", "2", "--threads", "1"}, "a.json").code, kExitOk);
    ASSERT_EQ(prune({"--keep", "2", "--threads", "4"}, "b.json").code, kExitOk);
    EXPECT_EQ(text_of(dir / "a.json"), text_of(dir / "b.json"));
}

TEST_F(PruneTest, ExitCodes) {
    EXPECT_EQ(prune({"--keep", "5"}).code, kExitData);
    EXPECT_EQ(prune({"--alpha", "2"}).code, kExitUsage);
    EXPECT_EQ(prune({"--keep", "banana"}).code, kExitUsage);
    EXPECT_EQ(run_cli({"prune"}).code, kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
    io::write_text(dir / "x.d2td", "garbage");
    const Result bad = prune({"--keep", "2"});
    EXPECT_EQ(bad.code, kExitData);
    EXPECT_NE(bad.err.find("bad magic"), std::string::npos) << bad.err;
}

TEST(Synth, Idempotent) {
    testing::TempDir dir;
    const std::vector<std::string> base = {"synth", "--seed", "7", "--h", "12", "--w", "12",
                                           "--d", "16"};
    auto a = base;
    a.insert(a.end(), {"--out-dir", (dir / "a").string()});
    auto b = base;
    b.insert(b.end(), {"--out-dir", (dir / "b").string()});
    ASSERT_EQ(run_cli(a).code, kExitOk);
    ASSERT_EQ(run_cli(b).code, kExitOk);
    for (const char* name : {"scene.d2td", "bias.d2bp", "truth.json"}) {
        EXPECT_EQ(text_of(dir / "a" / name), text_of(dir / "b" / name)) << name;
    }
    const auto truth = nlohmann::json::parse(text_of(dir / "a" / "truth.json"));
    EXPECT_TRUE(truth.contains("salient_cells"));
}

TEST(OracleCheck, Passes) {
    const Result r = run_cli({"oracle-check", "--n-cases", "100", "--max-n", "64"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("failures: 0"), std::string::npos) << r.out;
}

TEST(Help, ListsDefaults) {
    const Result r = run_cli({"prune", "--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("0.333"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("0.7"), std::string::npos);
    EXPECT_NE(r.out.find("--theta"), std::string::npos);
    EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

}  // namespace
}  // namespace d2p::cli
