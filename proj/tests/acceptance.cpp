// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Runs each criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. `--only N` restricts the run to criterion N.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bench.hpp"
#include "cli.hpp"
#include "d2p/debias.hpp"
#include "d2p/graph.hpp"
#include "d2p/io.hpp"
#include "d2p/oracle.hpp"
#include "d2p/oracle_suite.hpp"
#include "d2p/select.hpp"
#include "d2p/synth.hpp"
#include "test_util.hpp"

namespace d2p {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

constexpr std::uint64_t kSuiteSeed = 20260601;

Outcome selection_contract() {
    const auto t0 = Clock::now();
    const auto r = oracle::run_differential_suite(kSuiteSeed, 1000, 256);
    const double s = seconds_since(t0);
    const std::size_t bad = r.budget_violations + r.mis_violations + r.pivot_violations;
    return {bad == 0 && s < 30.0,
            fmt("%zu instances, budget %zu / mis %zu / pivot %zu violations, %.2f s (limit 30 s)",
                r.cases, r.budget_violations, r.mis_violations, r.pivot_violations, s)};
}

Outcome differential_equality() {
    const auto r = oracle::run_differential_suite(kSuiteSeed, 1000, 256);
    return {r.reference_mismatches == 0,
            fmt("%zu instances, %zu mismatches against the reference implementation", r.cases,
                r.reference_mismatches)};
}

Outcome exhaustive_oracle() {
    const auto t0 = Clock::now();
    const auto r = oracle::run_exhaustive_suite(kSuiteSeed + 1, 200, 12);
    const double s = seconds_since(t0);
    std::string ratios;
    for (const auto& q : r.ratios) {
        ratios += fmt("; greedy/optimal lambda=%g mean %.4f min %.4f (n=%zu)", q.lambda, q.mean,
                      q.min, q.samples);
    }
    return {r.failures() == 0 && s < 60.0,
            fmt("%zu instances, importance-only mismatches %zu, edgeless mismatches %zu, %.2f s "
                "(limit 60 s)",
                r.cases, r.importance_only_mismatches, r.edgeless_mismatches, s) +
                ratios};
}

Outcome debias_flattening() {
    std::mt19937_64 rng(kSuiteSeed);
    std::uniform_real_distribution<double> entry(0.1, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    std::size_t failures = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
        const GridShape s{1 + k % 24, 1 + (k * 7) % 24};
        std::vector<double> b(s.cells());
        for (double& v : b) v = entry(rng);
        const double c = scale(rng);
        std::vector<double> raw(b);
        for (double& v : raw) v *= c;
        const AttentionGrid rel =
            relative_attention(AttentionGrid(s, raw), BiasPrior(AttentionGrid(s, b), 1), 1e-7);
        const auto [lo, hi] = std::ranges::minmax(rel.values());
        worst = std::max(worst, (hi - lo) / hi);
        if (hi - lo > 1e-5 * hi) ++failures;
    }
    const AttentionGrid spot = relative_attention(
        AttentionGrid({1, 3}, {0.2, 0.3, 0.5}),
        BiasPrior(AttentionGrid({1, 3}, {0.1, 0.1, 0.25}), 1), 1e-7);
    const double expect[] = {2.0, 3.0, 2.0};
    bool spot_ok = true;
    for (int i = 0; i < 3; ++i) {
        spot_ok = spot_ok && std::abs(spot[i] - expect[i]) <= 1e-5 * expect[i];
    }
    return {failures == 0 && spot_ok,
            fmt("100 priors, %zu over tolerance, worst (max-min)/max %.3g; spot check %s",
                failures, worst, spot_ok ? "ok" : "off")};
}

double recall(const std::vector<std::size_t>& kept, const std::vector<std::size_t>& salient) {
    std::size_t hit = 0;
    for (std::size_t i : kept) hit += std::ranges::binary_search(salient, i);
    return salient.empty() ? 1.0 : double(hit) / double(salient.size());
}

Outcome planted_bias() {
    // Five radius-2 discs give 65 salient cells against a budget of 57, the
    // only regime in which the two selections can differ at all.
    std::size_t wins = 0, ties = 0, losses = 0;
    double sum_deb = 0.0, sum_raw = 0.0, sum_topn = 0.0;
    PruneConfig cfg;
    cfg.budget = Budget::ratio(0.1);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        synth::SceneSpec spec;
        spec.seed = seed;
        spec.height = 24;
        spec.width = 24;
        spec.dim = 64;
        spec.object_count = 5;
        spec.object_radius = 2;
        spec.bias_profile = synth::BiasProfile::kBottomHeavy;
        spec.bias_strength = 4.0;
        spec.placement = synth::Placement::kTopHalf;
        const synth::Scene scene = synth::generate_scene(spec);
        const std::size_t n = resolve_budget(cfg, scene.tokens.size());
        const AdjacencyGraph g = build_graph(scene.tokens, cfg);

        // Prior estimated the way a user would: calibration over scenes from
        // disjoint seeds, with no access to the true profile.
        std::vector<AttentionGrid> cal;
        for (std::uint64_t k = 0; k < 16; ++k) {
            synth::SceneSpec c = spec;
            c.seed = 1'000'000 + seed * 16 + k;
            c.placement = synth::Placement::kAnywhere;
            cal.push_back(synth::generate_scene(c).attention);
        }
        const BiasPrior prior = calibrate_bias(cal);
        const AttentionGrid rel = relative_attention(scene.attention, prior, cfg.epsilon);

        const double deb =
            recall(select_tokens(rel, g, n, cfg.pivot_ratio).kept, scene.salient);
        const double raw =
            recall(select_tokens(scene.attention, g, n, cfg.pivot_ratio).kept, scene.salient);
        sum_deb += deb;
        sum_raw += raw;
        sum_topn += recall(oracle::top_n(scene.attention.values(), n), scene.salient);
        if (deb > raw) ++wins;
        else if (deb == raw) ++ties;
        else ++losses;
    }
    return {wins >= 95,
            fmt("debiased recall strictly higher on %zu/100 seeds (need 95), tied %zu, lower %zu; "
                "mean recall debiased %.3f, raw %.3f; raw top-n recall %.3f",
                wins, ties, losses, sum_deb / 100, sum_raw / 100, sum_topn / 100)};
}

Outcome graph_analytics() {
    std::mt19937_64 rng(kSuiteSeed + 6);
    PruneConfig mixed;
    mixed.alpha = 0.5;
    mixed.theta_sim = 0.8;
    std::size_t outside = 0;
    for (std::size_t k = 0; k < 500; ++k) {
        const GridShape s{1 + k % 12, 1 + (k / 12) % 16};
        const TokenSet ts = testing::random_tokens(rng, s, 1 + k % 32);
        const AdjacencyGraph g = build_graph(ts, mixed);
        const AdjacencyGraph spat = spatial_adjacency(s.height, s.width);
        for (const auto& [i, j] : g.edges()) outside += !spat.has_edge(i, j);
    }

    // alpha = 1: reshaping the grid and permuting cells must permute the graph.
    PruneConfig semantic;
    semantic.alpha = 1.0;
    semantic.theta_sim = 0.8;
    std::size_t variant_mismatches = 0;
    const std::pair<std::size_t, std::size_t> shapes[][2] = {
        {{4, 6}, {3, 8}}, {{6, 6}, {2, 18}}, {{1, 12}, {12, 1}}, {{5, 5}, {5, 5}}, {{8, 9}, {6, 12}}};
    for (std::size_t k = 0; k < 100; ++k) {
        const auto& [a, b] = shapes[k % 5];
        const GridShape sa{a.first, a.second};
        const GridShape sb{b.first, b.second};
        const std::size_t dim = 4 + k % 13;
        const TokenSet ts = testing::random_tokens(rng, sa, dim, true);
        std::vector<std::size_t> perm(sa.cells());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> moved(ts.features().size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            std::ranges::copy(ts.token(i), moved.begin() + perm[i] * dim);
        }
        const AdjacencyGraph ga = build_graph(ts, semantic);
        const AdjacencyGraph gb = build_graph(TokenSet(sb, dim, std::move(moved)), semantic);
        std::vector<std::pair<std::size_t, std::size_t>> mapped;
        for (const auto& [i, j] : ga.edges()) mapped.emplace_back(perm[i], perm[j]);
        variant_mismatches += !(AdjacencyGraph::from_edges(sb.cells(), mapped) == gb);
    }
    return {outside == 0 && variant_mismatches == 0,
            fmt("500 token sets, %zu edges outside 8-adjacency; 100 reshape/permutation pairs, "
                "%zu graph mismatches",
                outside, variant_mismatches)};
}

Outcome format_round_trips() {
    std::mt19937_64 rng(kSuiteSeed + 7);
    std::size_t bad_dump = 0, bad_prior = 0;
    for (std::size_t k = 0; k < 100; ++k) {
        const GridShape s{1 + k % 9, 1 + (k * 5) % 11};
        const TokenSet ts = testing::random_tokens(rng, s, 1 + k % 20, true);
        const AttentionGrid att = testing::random_grid(rng, s, 0.0, 10.0, true);
        const auto bytes = io::encode_dump(ts, att);
        const io::TokenDump d = io::decode_dump(bytes);
        bad_dump += !(std::ranges::equal(d.tokens.features(), ts.features()) &&
                      std::ranges::equal(d.attention.values(), att.values()) &&
                      io::encode_dump(d.tokens, d.attention) == bytes);

        const BiasPrior p(testing::random_grid(rng, s, 0.0, 1.0, true), 1 + k);
        const auto pb = io::encode_prior(p);
        const BiasPrior q = io::decode_prior(pb);
        bad_prior += !(std::ranges::equal(q.grid().values(), p.grid().values()) &&
                       q.sample_count() == p.sample_count() && io::encode_prior(q) == pb);
    }
    const std::string header = "P5\n4 3\n255\n";
    const auto pgm = io::encode_pgm(testing::random_grid(rng, {3, 4}));
    const std::vector<std::size_t> kept = {0, 5};
    const auto mask = io::encode_mask_pgm({3, 4}, kept);
    const bool pgm_ok = pgm.size() == header.size() + 12 &&
                        std::equal(header.begin(), header.end(), pgm.begin()) &&
                        mask.size() == header.size() + 12 &&
                        std::equal(header.begin(), header.end(), mask.begin());
    return {bad_dump == 0 && bad_prior == 0 && pgm_ok,
            fmt("100 dumps (%zu differ), 100 priors (%zu differ), PGM header %s", bad_dump,
                bad_prior, pgm_ok ? "exact" : "wrong")};
}

Outcome determinism() {
    testing::TempDir dir;
    synth::SceneSpec spec;
    spec.seed = 77;
    const synth::Scene scene = synth::generate_scene(spec);
    io::write_dump(dir / "scene.d2td", scene.tokens, scene.attention);
    io::write_prior(dir / "prior.d2bp", BiasPrior(scene.true_bias, 1));

    std::vector<std::vector<std::uint8_t>> reports;
    for (const char* threads : {"1", "1", "1", "1", "1", "4", "4"}) {
        const auto out = dir / ("r" + std::to_string(reports.size()) + ".json");
        std::ostringstream sink;
        const int code = cli::run({"d2prune", "prune", "--dump", (dir / "scene.d2td").string(),
                                   "--prior", (dir / "prior.d2bp").string(), "--out",
                                   out.string(), "--threads", threads},
                                  sink, sink);
        if (code != cli::kExitOk) {
            return {false, "prune exited with " + std::to_string(code) + ": " + sink.str()};
        }
        reports.push_back(io::read_file(out));
    }
    const bool same = std::ranges::all_of(reports, [&](const auto& r) { return r == reports[0]; });
    return {same, fmt("%zu prune runs (5 with --threads 1, 2 with --threads 4), reports %s",
                      reports.size(), same ? "byte-identical" : "differ")};
}

Outcome performance() {
    const std::vector<std::size_t> sizes = {64, 256, 576, 1024, 2880};
    std::vector<bench::Timing> rows;
    for (std::size_t n : sizes) {
        rows.push_back(bench::time_pipeline(n, 128, 5, 1, kSuiteSeed));
    }
    const bench::Timing& big = rows.back();
    const double total = big.build_graph_ms + big.select_ms;
    const double slope = bench::growth_exponent(rows, 256);
    return {total < 500.0 && slope >= 1.7 && slope <= 2.3,
            fmt("N=2880 D=128 single thread: build_graph %.1f ms + select %.2f ms = %.1f ms "
                "median (limit 500); growth exponent %.3f (want 1.7..2.3); context: reference "
                "prefill 350 ms unpruned",
                big.build_graph_ms, big.select_ms, total, slope)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace
}  // namespace d2p

int main(int argc, char** argv) {
    using namespace d2p;
    const std::vector<Criterion> all = {
        {1, "selection contract", selection_contract},
        {2, "differential equality", differential_equality},
        {3, "exhaustive oracle", exhaustive_oracle},
        {4, "debias flattening", debias_flattening},
        {5, "planted-bias recovery", planted_bias},
        {6, "graph analytics", graph_analytics},
        {7, "format round-trips", format_round_trips},
        {8, "determinism", determinism},
        {9, "performance", performance},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        }
    }
    int failed = 0;
    for (const Criterion& c : all) {
        if (only != 0 && c.id != only) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
