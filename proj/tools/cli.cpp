// Copyright 2026 The d2prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "d2p/debias.hpp"
#include "d2p/graph.hpp"
#include "d2p/io.hpp"
#include "d2p/oracle_suite.hpp"
#include "d2p/select.hpp"
#include "d2p/synth.hpp"

namespace d2p::cli {

namespace fs = std::filesystem;

namespace {

/// Thrown for bad flag values or config files; maps to kExitUsage.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a self-check detects a broken invariant; maps to kExitInternal.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Budget parse_keep(const std::string& text) {
    const bool integral = !text.empty() && std::all_of(text.begin(), text.end(), [](char c) {
        return c >= '0' && c <= '9';
    });
    try {
        if (integral) {
            std::size_t count = 0;
            const auto res = std::from_chars(text.data(), text.data() + text.size(), count);
            if (res.ec != std::errc{}) {
                throw UsageError("--keep value '" + text + "' is out of range");
            }
            return Budget::absolute(count);
        }
        std::size_t used = 0;
        const double ratio = std::stod(text, &used);
        if (used != text.size()) {
            throw UsageError("--keep expects an integer count or a ratio, got '" + text + "'");
        }
        return Budget::ratio(ratio);
    } catch (const Error& e) {
        throw UsageError(std::string("--keep: ") + e.what());
    } catch (const std::logic_error&) {
        throw UsageError("--keep expects an integer count or a ratio, got '" + text + "'");
    }
}

struct PruneFlags {
    double epsilon = 1e-7;
    double alpha = 1.0;
    double theta = 0.8;
    double pivot_ratio = 0.7;
    std::string keep = "0.333";
    std::uint32_t layer = 2;
};

/// defaults < --config file < explicit flags.
PruneConfig resolve_config(const PruneFlags& flags, const std::string& config_path,
                           const CLI::App& sub) {
    PruneConfig cfg;
    cfg.epsilon = flags.epsilon;
    cfg.alpha = flags.alpha;
    cfg.theta_sim = flags.theta;
    cfg.pivot_ratio = flags.pivot_ratio;
    cfg.budget = parse_keep(flags.keep);
    cfg.layer = flags.layer;

    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw UsageError("cannot read config file " + config_path);
        }
        const auto doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw UsageError("config file " + config_path + " is not a JSON object");
        }
        try {
            for (auto it = doc.begin(); it != doc.end(); ++it) {
                const std::string& key = it.key();
                const auto given = [&](const char* flag) { return sub.count(flag) > 0; };
                if (key == "epsilon") {
                    if (!given("--epsilon")) cfg.epsilon = it->get<double>();
                } else if (key == "alpha") {
                    if (!given("--alpha")) cfg.alpha = it->get<double>();
                } else if (key == "theta_sim") {
                    if (!given("--theta")) cfg.theta_sim = it->get<double>();
                } else if (key == "pivot_ratio") {
                    if (!given("--pivot-ratio")) cfg.pivot_ratio = it->get<double>();
                } else if (key == "keep") {
                    if (!given("--keep")) {
                        cfg.budget = parse_keep(it->is_string() ? it->get<std::string>() : it->dump());
                    }
                } else if (key == "layer") {
                    if (!given("--layer")) cfg.layer = it->get<std::uint32_t>();
                } else {
                    throw UsageError("unknown config key '" + key + "'");
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config file " + config_path + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

std::vector<fs::path> list_dumps(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        fail(ErrorCode::kIoFailure, "dump directory " + dir.string() + " does not exist");
    }
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".d2td") {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_calibrate(const fs::path& dumps_dir, const fs::path& out_path, std::ostream& out) {
    const auto files = list_dumps(dumps_dir);
    if (files.empty()) {
        fail(ErrorCode::kEmptyInput, "no dumps found in " + dumps_dir.string());
    }
    std::vector<AttentionGrid> maps;
    maps.reserve(files.size());
    for (const auto& file : files) {
        io::TokenDump dump = [&] {
            try {
                return io::read_dump(file);
            } catch (const Error& e) {
                throw Error(e.code(), file.string() + ": " + e.what());
            }
        }();
        if (!maps.empty() && dump.attention.shape() != maps.front().shape()) {
            const GridShape a = maps.front().shape();
            const GridShape b = dump.attention.shape();
            fail(ErrorCode::kDimensionMismatch,
                 file.string() + ": dimension mismatch, grid is " + std::to_string(b.height) + "x" +
                     std::to_string(b.width) + " but " + files.front().string() + " is " +
                     std::to_string(a.height) + "x" + std::to_string(a.width));
        }
        maps.push_back(std::move(dump.attention));
    }
    const BiasPrior prior = calibrate_bias(maps);
    io::write_prior(out_path, prior);
    out << "sample_count: " << prior.sample_count() << "\n";
    return kExitOk;
}

int cmd_prune(const fs::path& dump_path, const fs::path& prior_path, const PruneConfig& cfg,
              const fs::path& report_path, const std::string& render_dir, unsigned threads,
              std::ostream& out) {
    const io::TokenDump dump = io::read_dump(dump_path);
    BiasPrior prior = io::read_prior(prior_path);
    const GridShape shape = dump.tokens.shape();
    const bool resized = prior.shape() != shape;
    if (resized) {
        prior = resize_bias(prior, shape.height, shape.width);
    }

    const AttentionGrid rel = relative_attention(dump.attention, prior, cfg.epsilon);
    const AdjacencyGraph graph = build_graph(dump.tokens, cfg, threads);
    const std::size_t budget = resolve_budget(cfg, dump.tokens.size());
    SelectionResult sel = select_tokens(rel, graph, budget, cfg.pivot_ratio);
    if (sel.kept.size() != budget) {
        throw InvariantError("selection returned " + std::to_string(sel.kept.size()) +
                             " tokens for a budget of " + std::to_string(budget));
    }

    io::SelectionReport report;
    report.grid = shape;
    report.epsilon = cfg.epsilon;
    report.alpha = cfg.alpha;
    report.theta_sim = cfg.theta_sim;
    report.pivot_ratio = cfg.pivot_ratio;
    report.budget = budget;
    report.layer = cfg.layer;
    report.edge_count = graph.edge_count();
    report.prior_resized = resized;
    report.selection = std::move(sel);
    io::write_selection_report(report_path, report);

    if (!render_dir.empty()) {
        const fs::path dir(render_dir);
        fs::create_directories(dir);
        io::render_pgm(dir / "attention.pgm", dump.attention);
        io::render_pgm(dir / "relative.pgm", rel);
        io::render_pgm(dir / "prior.pgm", prior.grid());
        io::render_mask_pgm(dir / "mask.pgm", shape, report.selection.kept);
    }

    const auto& tags = report.selection.provenance;
    out << "kept " << budget << " of " << dump.tokens.size() << " tokens ("
        << std::count(tags.begin(), tags.end(), Provenance::kPivot) << " pivot, "
        << std::count(tags.begin(), tags.end(), Provenance::kMis) << " mis, "
        << std::count(tags.begin(), tags.end(), Provenance::kFallback) << " fallback); "
        << graph.edge_count() << " edges" << (resized ? "; prior resized" : "") << "\n";
    return kExitOk;
}

struct SynthFlags {
    std::uint64_t seed = 0;
    std::size_t height = 24;
    std::size_t width = 24;
    std::size_t dim = 64;
    std::size_t objects = 3;
    std::size_t radius = 2;
    double noise = 0.05;
    std::string bias = "bottom_heavy";
    double beta = 4.0;
    bool top_half = false;
    std::string out_dir;
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
    synth::SceneSpec spec;
    spec.seed = f.seed;
    spec.height = f.height;
    spec.width = f.width;
    spec.dim = f.dim;
    spec.object_count = f.objects;
    spec.object_radius = f.radius;
    spec.noise_sigma = f.noise;
    spec.bias_strength = f.beta;
    spec.placement = f.top_half ? synth::Placement::kTopHalf : synth::Placement::kAnywhere;
    try {
        spec.bias_profile = synth::parse_bias_profile(f.bias);
        spec.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    const synth::Scene scene = synth::generate_scene(spec);
    const fs::path dir(f.out_dir);
    fs::create_directories(dir);
    io::write_dump(dir / "scene.d2td", scene.tokens, scene.attention);
    io::write_prior(dir / "bias.d2bp", BiasPrior(scene.true_bias, 1));

    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : scene.objects) {
        objects.push_back({o.row, o.col});
    }
    const nlohmann::json truth = {
        {"rng", std::string(synth::kRngAlgorithm)},
        {"seed", spec.seed},
        {"grid", {{"height", spec.height}, {"width", spec.width}}},
        {"dim", spec.dim},
        {"object_radius", spec.object_radius},
        {"objects", objects},
        {"noise_sigma", spec.noise_sigma},
        {"bias_profile", std::string(synth::to_string(spec.bias_profile))},
        {"bias_strength", spec.bias_strength},
        {"placement", f.top_half ? "top_half" : "anywhere"},
        {"salient_cells", scene.salient},
        {"model", "synthetic: attention = saliency * bias (idealised multiplicative bias)"},
    };
    io::write_text(dir / "truth.json", io::canonical_json(truth));
    out << "wrote scene with " << scene.salient.size() << " salient cells to " << dir.string()
        << "\n";
    return kExitOk;
}

int cmd_oracle_check(std::size_t cases, std::size_t max_n, std::uint64_t seed, std::ostream& out) {
    if (cases == 0 || max_n == 0) {
        throw UsageError("--n-cases and --max-n must be positive");
    }
    const auto diff = oracle::run_differential_suite(seed, cases, max_n);
    out << "differential: " << diff.cases << " cases, budget violations " << diff.budget_violations
        << ", mis violations " << diff.mis_violations << ", pivot violations "
        << diff.pivot_violations << ", reference mismatches " << diff.reference_mismatches << "\n";

    const std::size_t exhaustive_cases = std::max<std::size_t>(1, cases / 5);
    const auto exh = oracle::run_exhaustive_suite(seed + 1, exhaustive_cases, std::min<std::size_t>(max_n, 14));
    out << "exhaustive: " << exh.cases << " cases, importance-only mismatches "
        << exh.importance_only_mismatches << ", edgeless mismatches " << exh.edgeless_mismatches
        << "\n";
    for (const auto& r : exh.ratios) {
        out << "  greedy/optimal lambda=" << r.lambda << ": n=" << r.samples << " min=" << r.min
            << " mean=" << r.mean << " max=" << r.max << "\n";
    }
    const std::size_t failures = diff.failures() + exh.failures();
    out << "failures: " << failures << "\n";
    return failures == 0 ? kExitOk : kExitInternal;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
        if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || v == 0) {
            throw UsageError("--sizes expects comma-separated positive integers, got '" + text + "'");
        }
        sizes.push_back(v);
    }
    if (sizes.empty()) {
        throw UsageError("--sizes is empty");
    }
    return sizes;
}

int cmd_bench(const std::string& sizes_text, std::size_t dim, std::size_t repeats, unsigned threads,
              std::ostream& out) {
    if (dim == 0 || repeats == 0) {
        throw UsageError("--d and --repeats must be positive");
    }
    const auto sizes = parse_sizes(sizes_text);
    std::vector<bench::Timing> rows;
    out << std::fixed << std::setprecision(3);
    out << "tokens  grid      edges    build_graph_ms  select_ms  total_ms\n";
    for (std::size_t n : sizes) {
        const auto t = bench::time_pipeline(n, dim, repeats, threads, 2026);
        rows.push_back(t);
        std::ostringstream grid;
        grid << t.grid.height << "x" << t.grid.width;
        out << std::left << std::setw(8) << n << std::setw(10) << grid.str() << std::setw(9)
            << t.edges << std::right << std::setw(14) << t.build_graph_ms << std::setw(11)
            << t.select_ms << std::setw(10) << t.build_graph_ms + t.select_ms << "\n"
            << std::left;
    }
    const double exponent = bench::growth_exponent(rows, 256);
    out << "build_graph growth exponent (N >= 256): " << exponent << "\n";
    out << "context: reference 7B-model prefill at 2880 visual tokens is 350 ms unpruned, "
           "119 ms at 33.4% keep, 68 ms at 11.2% keep\n";
    return kExitOk;
}

int cmd_render(const std::string& dump_path, const std::string& prior_path, const fs::path& out_path,
               std::ostream& out) {
    if (dump_path.empty() == prior_path.empty()) {
        throw UsageError("render needs exactly one of --dump or --prior");
    }
    if (!dump_path.empty()) {
        io::render_pgm(out_path, io::read_dump(dump_path).attention);
    } else {
        io::render_pgm(out_path, io::read_prior(prior_path).grid());
    }
    out << "wrote " << out_path.string() << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"d2prune: debiased, structure-aware visual token pruning", "d2prune"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file overriding pruning defaults")
        ->check(CLI::ExistingFile);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker threads for similarity computation")
        ->envname("D2P_THREADS")
        ->check(CLI::Range(1u, 256u))
        ->capture_default_str();

    auto* calibrate = app.add_subcommand("calibrate", "Average dump attention maps into a bias prior");
    std::string dumps_dir, prior_out;
    calibrate->add_option("--dumps", dumps_dir, "Directory of .d2td token dumps")->required();
    calibrate->add_option("--out", prior_out, "Output bias prior file")->required();

    auto* prune = app.add_subcommand("prune", "Select tokens for one dump");
    PruneFlags pf;
    std::string dump_path, prior_path, report_path, render_dir;
    prune->add_option("--dump", dump_path, "Token dump file")->required();
    prune->add_option("--prior", prior_path, "Bias prior file")->required();
    prune->add_option("--out", report_path, "Selection report output (JSON)")->required();
    prune->add_option("--render-dir", render_dir, "Directory for PGM renders");
    prune->add_option("--epsilon", pf.epsilon, "Debias stabiliser")->capture_default_str();
    prune->add_option("--alpha", pf.alpha, "Semantic weight in the fused similarity")
        ->capture_default_str();
    prune->add_option("--theta", pf.theta, "Edge threshold on fused similarity")
        ->capture_default_str();
    prune->add_option("--pivot-ratio", pf.pivot_ratio, "Fraction of the budget taken as pivots")
        ->capture_default_str();
    prune->add_option("--keep", pf.keep, "Budget: integer count or ratio in (0, 1]")
        ->capture_default_str();
    prune->add_option("--layer", pf.layer, "Pruning layer (metadata only)")->capture_default_str();
    prune->add_option("--threads", threads, "Worker threads (same as global --threads)")
        ->envname("D2P_THREADS")
        ->check(CLI::Range(1u, 256u));

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene");
    // --h is a grid extent here, so help is long-form only.
    synth_cmd->set_help_flag("--help", "Print this help message and exit");
    SynthFlags sf;
    synth_cmd->add_option("--seed", sf.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--h", sf.height, "Grid rows")->capture_default_str();
    synth_cmd->add_option("--w", sf.width, "Grid columns")->capture_default_str();
    synth_cmd->add_option("--d", sf.dim, "Feature dimension")->capture_default_str();
    synth_cmd->add_option("--objects", sf.objects, "Object count")->capture_default_str();
    synth_cmd->add_option("--radius", sf.radius, "Object radius in cells")->capture_default_str();
    synth_cmd->add_option("--noise", sf.noise, "Object feature noise sigma")->capture_default_str();
    synth_cmd->add_option("--bias", sf.bias, "uniform | bottom_heavy | periphery_heavy")
        ->capture_default_str();
    synth_cmd->add_option("--beta", sf.beta, "Bias peak multiplier (>= 1)")->capture_default_str();
    synth_cmd->add_flag("--top-half", sf.top_half, "Place objects in the top half only");
    synth_cmd->add_option("--out-dir", sf.out_dir, "Output directory")->required();

    auto* oracle_cmd = app.add_subcommand("oracle-check", "Differential and exhaustive self-checks");
    std::size_t n_cases = 1000, max_n = 256;
    std::uint64_t oracle_seed = 1;
    oracle_cmd->add_option("--n-cases", n_cases, "Randomised instances")->capture_default_str();
    oracle_cmd->add_option("--max-n", max_n, "Largest grid size")->capture_default_str();
    oracle_cmd->add_option("--seed", oracle_seed, "Instance seed")->capture_default_str();

    auto* bench_cmd = app.add_subcommand("bench", "Time graph construction and selection");
    std::string sizes = "64,256,576,1024,2880";
    std::size_t bench_dim = 128, repeats = 5;
    bench_cmd->add_option("--sizes", sizes, "Comma-separated token counts")->capture_default_str();
    bench_cmd->add_option("--d", bench_dim, "Feature dimension")->capture_default_str();
    bench_cmd->add_option("--repeats", repeats, "Runs per size (median reported)")
        ->capture_default_str();
    bench_cmd->add_option("--threads", threads, "Worker threads (same as global --threads)")
        ->envname("D2P_THREADS")
        ->check(CLI::Range(1u, 256u));

    auto* render = app.add_subcommand("render", "Render a dump's attention or a prior as PGM");
    std::string render_dump, render_prior, render_out;
    render->add_option("--dump", render_dump, "Token dump file");
    render->add_option("--prior", render_prior, "Bias prior file");
    render->add_option("--out", render_out, "Output PGM")->required();

    std::vector<std::string> argv_rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_rev.begin(), argv_rev.end());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (calibrate->parsed()) {
            return cmd_calibrate(dumps_dir, prior_out, out);
        }
        if (prune->parsed()) {
            const PruneConfig cfg = resolve_config(pf, config_path, *prune);
            return cmd_prune(dump_path, prior_path, cfg, report_path, render_dir, threads, out);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(sf, out);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle_check(n_cases, max_n, oracle_seed, out);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(sizes, bench_dim, repeats, threads, out);
        }
        if (render->parsed()) {
            return cmd_render(render_dump, render_prior, render_out, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const Error& e) {
        err << "error: " << e.what() << " [" << to_string(e.code()) << "]\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace d2p::cli
