#include "tempsteer/cli.hpp"

#include "tempsteer/harness.hpp"
#include "tempsteer/io.hpp"
#include "tempsteer/scenarios.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace tempsteer::cli {

namespace fs = std::filesystem;
using json   = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage      = 2;
constexpr int kExitData       = 3;
constexpr int kExitUnexpected = 4;

// ---------------------------------------------------------------------------
// provenance

std::uint64_t hash_file(const fs::path & p, std::uint64_t h) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot read " + p.string());
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        h = fnv1a64(std::span<const std::byte>(reinterpret_cast<const std::byte *>(buf.data()), got), h);
    }
    return h;
}

// Content hash of a file or of a directory tree (relative names + bytes).
// run_manifest.json is left out so fingerprints chain across stages.
std::string tree_fingerprint(const fs::path & root) {
    if (!fs::exists(root)) {
        fail(ErrorKind::Io, "no such input: " + root.string());
    }
    if (fs::is_regular_file(root)) {
        return hex64(hash_file(root, fnv1a64("file")));
    }
    std::vector<fs::path> files;
    for (const auto & e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json") {
            files.push_back(fs::relative(e.path(), root));
        }
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = fnv1a64("tree");
    for (const auto & rel : files) {
        h = fnv1a64(rel.generic_string() + "\n", h);
        h = hash_file(root / rel, h);
    }
    return hex64(h);
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Resolved settings plus everything that ends up in run_manifest.json.
struct Run {
    std::string command;
    json        file_config = json::object(); // --config contents
    json        config      = json::object(); // resolved snapshot
    json        inputs      = json::object();
    json        seeds       = json::object();
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    std::string started = utc_now();

    template <typename T>
    T pick(const std::string & key, const std::optional<T> & flag, T fallback) {
        T v = fallback;
        if (flag) {
            v = *flag;
        } else if (file_config.contains(key)) {
            try {
                v = file_config.at(key).get<T>();
            } catch (const json::exception & e) {
                fail(ErrorKind::Config, "config key '" + key + "': " + e.what());
            }
        }
        config[key] = v;
        return v;
    }

    fs::path input(const std::string & key, const std::optional<std::string> & flag, bool required = true) {
        const std::string p = pick<std::string>(key, flag, "");
        if (p.empty()) {
            if (required) {
                fail(ErrorKind::Input, "missing required input --" + key);
            }
            return {};
        }
        inputs[key] = {{"path", p}, {"fingerprint", tree_fingerprint(p)}};
        return p;
    }

    std::uint64_t seed(const std::optional<std::uint64_t> & flag, std::uint64_t fallback = 0) {
        const auto s  = pick<std::uint64_t>("seed", flag, fallback);
        seeds["root"] = s;
        return s;
    }

    void derived(const std::string & component, std::uint64_t value) {
        seeds["derived"][component] = value;
    }
};

fs::path default_out_root() {
    if (const char * env = std::getenv(kOutRootEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return "runs";
}

void publish(Run & run, io::StagingDir & stage) {
    json outputs = json::object();
    std::vector<fs::path> files;
    for (const auto & e : fs::recursive_directory_iterator(stage.path())) {
        if (e.is_regular_file()) {
            files.push_back(fs::relative(e.path(), stage.path()));
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto & rel : files) {
        outputs["files"][rel.generic_string()] = hex64(hash_file(stage.path() / rel, fnv1a64("file")));
    }
    for (const auto & e : fs::directory_iterator(stage.path())) {
        if (e.is_directory()) {
            outputs["trees"][e.path().filename().string()] = tree_fingerprint(e.path());
        }
    }
    outputs["tree"] = tree_fingerprint(stage.path());

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run.t0).count();
    json m;
    m["schema_version"] = io::kSchemaVersion;
    m["kind"]           = "run_manifest";
    m["command"]        = run.command;
    m["tool_version"]   = kToolVersion;
    m["config"]         = run.config;
    m["inputs"]         = run.inputs;
    m["outputs"]        = outputs;
    m["seeds"]          = run.seeds;
    m["wall_clock"]     = {{"started_utc", run.started}, {"elapsed_seconds", elapsed}};
    io::write_json(stage.path() / "run_manifest.json", m);
    stage.commit();
}

// ---------------------------------------------------------------------------
// parsing helpers

std::vector<std::string> split(const std::string & s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

ModuleId parse_module(const std::string & spec) {
    // head:L.H | layer:L
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        fail(ErrorKind::Input, "module spec must be head:L.H or layer:L, got '" + spec + "'");
    }
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    try {
        if (kind == "head") {
            const auto dot = rest.find('.');
            if (dot == std::string::npos) {
                fail(ErrorKind::Input, "head spec needs L.H: '" + spec + "'");
            }
            return ModuleId::head_of(std::stoi(rest.substr(0, dot)), std::stoi(rest.substr(dot + 1)));
        }
        if (kind == "layer") {
            return ModuleId::layer_of(std::stoi(rest));
        }
    } catch (const std::logic_error &) {
        fail(ErrorKind::Input, "bad module index in '" + spec + "'");
    }
    fail(ErrorKind::Input, "unknown module kind '" + kind + "'");
}

json module_json(const ModuleId & id) {
    return {{"kind", to_string(id.kind)}, {"layer", id.layer}, {"head", id.head}};
}

ModuleId module_from_json(const json & j) {
    return {module_kind_from_string(j.at("kind").get<std::string>()), j.at("layer").get<int>(), j.at("head").get<int>()};
}

GridSpace parse_space(const std::string & s) {
    if (s == "standard") {
        return GridSpace::standard_space();
    }
    // "K1,K2,...:a1,a2,..."
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
        fail(ErrorKind::Input, "grid space must be 'standard' or 'K,..:alpha,..'");
    }
    GridSpace g;
    try {
        for (const auto & k : split(s.substr(0, colon), ',')) {
            g.ks.push_back(static_cast<std::size_t>(std::stoul(k)));
        }
        for (const auto & a : split(s.substr(colon + 1), ',')) {
            g.alphas.push_back(std::stof(a));
        }
    } catch (const std::logic_error &) {
        fail(ErrorKind::Input, "bad number in grid space '" + s + "'");
    }
    if (g.ks.empty() || g.alphas.empty()) {
        fail(ErrorKind::Input, "grid space has an empty axis");
    }
    return g;
}

ProbeOptions probe_options(Run & run, const std::optional<std::uint64_t> & seed) {
    ProbeOptions p;
    p.seed = run.seed(seed);
    return p;
}

void print_json(const json & j) {
    std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// subcommands

struct Common {
    std::optional<std::string>   config;
    std::optional<std::string>   out;
    std::optional<std::uint64_t> seed;
};

struct Command {
    CLI::App *            app = nullptr;
    Common                common;
    std::function<void(Run &, io::StagingDir &)> body;
};

void add_common(CLI::App * app, Common & c, bool with_seed) {
    app->add_option("--config", c.config, "JSON config file; CLI flags take precedence over its keys");
    app->add_option("--out", c.out, "output directory (default: $" + std::string(kOutRootEnv) + "/<command>)");
    if (with_seed) {
        app->add_option("--seed", c.seed, "root seed");
    }
}

Model load_model_input(Run & run, const std::optional<std::string> & flag) {
    return load_model(run.input("model", flag));
}

} // namespace

int dispatch(const std::vector<std::string> & args) {
    CLI::App app{"Temporal-aware activation steering toolkit", "tempsteer"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string & name, const std::string & desc, bool seeded) -> Command & {
        auto c = std::make_unique<Command>();
        c->app = app.add_subcommand(name, desc);
        add_common(c->app, c->common, seeded);
        commands.push_back(std::move(c));
        return *commands.back();
    };

    // gen-corpus -------------------------------------------------------------
    struct {
        std::optional<std::size_t> n;
        std::optional<std::string> preset;
        std::optional<double>      variant_fraction, duplicate_fraction, flagged_fraction, missing_fraction, frame_noise;
        std::optional<int>         min_segments, max_segments, frame_dim;
    } gc;
    {
        auto & c = make("gen-corpus", "generate a synthetic video-QA corpus", true);
        c.app->add_option("--n", gc.n, "number of samples");
        c.app->add_option("--preset", gc.preset, "default | planted (noise-free, chunk-aligned clips)");
        c.app->add_option("--variant-fraction", gc.variant_fraction);
        c.app->add_option("--duplicate-fraction", gc.duplicate_fraction);
        c.app->add_option("--flagged-fraction", gc.flagged_fraction);
        c.app->add_option("--missing-fraction", gc.missing_fraction);
        c.app->add_option("--frame-noise", gc.frame_noise);
        c.app->add_option("--frame-dim", gc.frame_dim);
        c.app->add_option("--min-segments", gc.min_segments, "scene segments of variant clips, lower bound");
        c.app->add_option("--max-segments", gc.max_segments);
        c.body = [&](Run & run, io::StagingDir & stage) {
            const auto seed   = run.seed(c.common.seed);
            const auto n      = run.pick<std::size_t>("n", gc.n, 1000);
            const auto preset = run.pick<std::string>("preset", gc.preset, "default");
            CorpusOptions o;
            if (preset == "planted") {
                o = scenarios::planted_corpus_options(n, seed);
            } else if (preset != "default") {
                fail(ErrorKind::Config, "unknown preset '" + preset + "'");
            }
            o.n                  = n;
            o.seed               = seed;
            o.variant_fraction   = run.pick("variant_fraction", gc.variant_fraction, o.variant_fraction);
            o.duplicate_fraction = run.pick("duplicate_fraction", gc.duplicate_fraction, o.duplicate_fraction);
            o.flagged_fraction   = run.pick("flagged_fraction", gc.flagged_fraction, o.flagged_fraction);
            o.missing_fraction   = run.pick("missing_fraction", gc.missing_fraction, o.missing_fraction);
            o.frame_noise        = run.pick("frame_noise", gc.frame_noise, o.frame_noise);
            o.frame_dim          = run.pick("frame_dim", gc.frame_dim, o.frame_dim);
            o.min_segments       = run.pick("min_segments", gc.min_segments, o.min_segments);
            o.max_segments       = run.pick("max_segments", gc.max_segments, o.max_segments);
            const Corpus corpus  = generate_corpus(o);
            save_corpus(corpus, stage.path() / "corpus");
            std::size_t variant = 0;
            for (const auto & s : corpus) {
                variant += s.truth() == TemporalClass::Variant ? 1 : 0;
            }
            json summary = {{"samples", corpus.size()},
                            {"variant", variant},
                            {"invariant", corpus.size() - variant},
                            {"fingerprint", corpus_fingerprint(corpus)}};
            io::write_json(stage.path() / "summary.json", summary);
            print_json(summary);
        };
    }

    // pipeline ---------------------------------------------------------------
    struct {
        std::optional<std::string> corpus, judge, judge_url, judge_model;
        std::optional<std::size_t> pool_size;
        std::optional<int>         frame_threshold, rate;
        std::optional<double>      tau, judge_noise, judge_flip;
    } pl;
    {
        auto & c = make("pipeline", "clean, pool and judge-filter a corpus into D_a_f / D_t_f", true);
        c.app->add_option("--corpus", pl.corpus, "input corpus directory");
        c.app->add_option("--pool-size", pl.pool_size, "candidate pool size per branch (default 1000)");
        c.app->add_option("--frame-threshold", pl.frame_threshold, "T, max frames for D_a candidates (default 200)");
        c.app->add_option("--tau", pl.tau, "judge confidence threshold (default 0.8)");
        c.app->add_option("--rate", pl.rate, "downsample factor (default 4)");
        c.app->add_option("--judge", pl.judge, "synthetic | external");
        c.app->add_option("--judge-noise", pl.judge_noise, "synthetic judge confidence noise");
        c.app->add_option("--judge-flip", pl.judge_flip, "synthetic judge class flip rate");
        c.app->add_option("--judge-url", pl.judge_url, "external judge endpoint, http://host:port/path");
        c.app->add_option("--judge-model", pl.judge_model, "external judge model name");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const Corpus corpus = load_corpus(run.input("corpus", pl.corpus));
            PipelineConfig cfg;
            cfg.seed             = run.seed(c.common.seed);
            cfg.target_pool_size = run.pick("target_pool_size", pl.pool_size, cfg.target_pool_size);
            cfg.frame_threshold  = run.pick("frame_threshold", pl.frame_threshold, cfg.frame_threshold);
            cfg.tau              = run.pick("tau", pl.tau, cfg.tau);
            cfg.downsample_rate  = run.pick("downsample_rate", pl.rate, cfg.downsample_rate);
            cfg.validate();

            const auto kind = run.pick<std::string>("judge", pl.judge, "synthetic");
            std::unique_ptr<Judge> judge;
            if (kind == "synthetic") {
                const auto js = derive_seed(cfg.seed, "judge");
                run.derived("judge", js);
                judge = std::make_unique<SyntheticJudge>(run.pick("judge_noise", pl.judge_noise, 0.0),
                                                         run.pick("judge_flip", pl.judge_flip, 0.0), js);
            } else if (kind == "external") {
                const auto url = run.pick<std::string>("judge_url", pl.judge_url, "");
                const auto scheme = url.find("://");
                const auto slash  = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
                if (url.empty() || slash == std::string::npos) {
                    fail(ErrorKind::Config, "--judge-url must look like http://host:port/path");
                }
                const std::string host = url.substr(0, slash);
                const std::string path = url.substr(slash);
                auto transport = [host, path](const std::string & body) {
                    httplib::Client client(host);
                    auto res = client.Post(path, body, "application/json");
                    if (!res || res->status != 200) {
                        fail(ErrorKind::Io, "external judge request failed");
                    }
                    return res->body;
                };
                judge = std::make_unique<ExternalLlmJudge>(transport, run.pick<std::string>("judge_model", pl.judge_model, "judge"));
            } else {
                fail(ErrorKind::Config, "unknown judge '" + kind + "'");
            }

            const PipelineResult r = run_pipeline(corpus, cfg, *judge);
            save_corpus(r.filtered.d_a_f, stage.path() / "d_a_f");
            save_corpus(r.filtered.d_t_f, stage.path() / "d_t_f");
            json stats        = pipeline_stats(r.filtered.d_a_f, r.filtered.d_t_f);
            stats["judge"]    = judge->name();
            stats["cleaned"]  = r.cleaned.size();
            stats["d_a_pool"] = r.pools.d_a_pool.size();
            stats["d_t_pool"] = r.pools.d_t_pool.size();
            stats["dropped"]  = r.filtered.dropped.size();
            io::write_json(stage.path() / "stats.json", stats);
            std::string dropped;
            for (const auto & d : r.filtered.dropped) {
                dropped += d + "\n";
            }
            io::write_text(stage.path() / "dropped.txt", dropped);
            print_json(stats);
        };
    }

    // build-model ------------------------------------------------------------
    struct {
        std::optional<int>          layers, heads, d_model, d_ff, vocab, max_seq, frame_dim, media_tokens;
        std::vector<std::string>    plants;
        std::optional<double>       plant_norm;
        std::optional<std::string>  plant_trigger, calibrate;
        std::optional<bool>         rate_scaled;
    } bm;
    {
        auto & c = make("build-model", "build a (optionally planted) toy transformer checkpoint", true);
        c.app->add_option("--layers", bm.layers);
        c.app->add_option("--heads", bm.heads);
        c.app->add_option("--d-model", bm.d_model);
        c.app->add_option("--d-ff", bm.d_ff, "0 = 4 * d_model");
        c.app->add_option("--vocab", bm.vocab);
        c.app->add_option("--max-seq", bm.max_seq);
        c.app->add_option("--frame-dim", bm.frame_dim);
        c.app->add_option("--media-tokens", bm.media_tokens);
        c.app->add_option("--plant", bm.plants, "plant a perturbation: head:L.H or layer:L (repeatable)");
        c.app->add_option("--plant-norm", bm.plant_norm, "L2 norm of each plant delta (default 1)");
        c.app->add_option("--plant-trigger", bm.plant_trigger, "downsampled_media | downsampled_invariant | downsampled_variant");
        c.app->add_flag("--rate-scaled", bm.rate_scaled, "scale plant deltas by log2(rate)");
        c.app->add_option("--calibrate", bm.calibrate, "benchmark directory; rescale plants to a 20-40% flip rate");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const auto seed = run.seed(c.common.seed);
            ModelConfig cfg  = scenarios::substrate_config(seed);
            cfg.n_layers     = run.pick("n_layers", bm.layers, cfg.n_layers);
            cfg.n_heads      = run.pick("n_heads", bm.heads, cfg.n_heads);
            cfg.d_model      = run.pick("d_model", bm.d_model, cfg.d_model);
            cfg.d_ff         = run.pick("d_ff", bm.d_ff, cfg.d_ff);
            cfg.vocab_size   = run.pick("vocab_size", bm.vocab, cfg.vocab_size);
            cfg.max_seq_len  = run.pick("max_seq_len", bm.max_seq, cfg.max_seq_len);
            cfg.frame_dim    = run.pick("frame_dim", bm.frame_dim, cfg.frame_dim);
            cfg.media_tokens = run.pick("media_tokens", bm.media_tokens, cfg.media_tokens);
            cfg.validate();
            const Model base = Model::build(cfg);

            std::optional<std::vector<std::string>> plant_flag;
            if (!bm.plants.empty()) {
                plant_flag = bm.plants;
            }
            const auto specs   = run.pick<std::vector<std::string>>("plants", plant_flag, {});
            const auto norm    = run.pick("plant_norm", bm.plant_norm, 1.0);
            const auto trigger = plant_trigger_from_string(
                run.pick<std::string>("plant_trigger", bm.plant_trigger, to_string(PlantTrigger::DownsampledMedia)));
            const bool rate_scaled = run.pick("rate_scaled", bm.rate_scaled, false);
            std::vector<PlantSpec> plants;
            for (const auto & s : specs) {
                const ModuleId id = parse_module(s);
                base.layout().check(id);
                const auto ps = derive_seed(seed, "plant/" + id.str());
                run.derived("plant/" + id.str(), ps);
                plants.push_back(PlantSpec{id, scenarios::random_direction(base.layout().dim(id), norm, ps), trigger, rate_scaled});
            }

            json summary;
            const fs::path calib = run.input("calibrate", bm.calibrate, false);
            if (!calib.empty()) {
                if (plants.empty()) {
                    fail(ErrorKind::Config, "--calibrate needs at least one --plant");
                }
                const Calibration cal = calibrate_plants(base, plants, load_benchmark(calib));
                plants = scale_plants(std::move(plants), cal.scale);
                summary["calibration"] = {{"scale", static_cast<double>(cal.scale)},
                                          {"flip_rate", cal.flip_rate},
                                          {"evaluations", cal.evaluations}};
            }
            const Model model = Model::from_parts(cfg, std::vector<float>(base.parameters().begin(), base.parameters().end()),
                                                  std::move(plants));
            save_model(model, stage.path() / "model");
            summary["fingerprint"]       = model.fingerprint();
            summary["checksum"]          = hex32(model.checksum());
            summary["backbone_checksum"] = hex32(model.backbone_checksum());
            summary["plants"]            = json::array();
            for (const auto & p : model.plants()) {
                summary["plants"].push_back({{"module", p.target.str()}, {"norm", l2_norm(p.delta)}});
            }
            io::write_json(stage.path() / "summary.json", summary);
            print_json(summary);
        };
    }

    // make-benchmark ---------------------------------------------------------
    struct {
        std::optional<std::string> model, corpus, name, scoring;
        std::optional<int>         rate, answer_tokens;
    } mb;
    {
        auto & c = make("make-benchmark", "build a benchmark whose expected answers are the model's clean outputs", false);
        c.app->add_option("--model", mb.model, "model directory (use the unplanted or planted model; clean answers agree)");
        c.app->add_option("--corpus", mb.corpus, "corpus directory");
        c.app->add_option("--name", mb.name);
        c.app->add_option("--scoring", mb.scoring, "exact_match | choice_accuracy");
        c.app->add_option("--rate", mb.rate, "downsample factor applied at evaluation (default 4)");
        c.app->add_option("--answer-tokens", mb.answer_tokens, "greedy tokens per expected answer");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const Model model   = load_model_input(run, mb.model);
            const Corpus corpus = load_corpus(run.input("corpus", mb.corpus));
            BenchmarkOptions o;
            o.name            = run.pick("name", mb.name, o.name);
            o.scoring         = scoring_from_string(run.pick<std::string>("scoring", mb.scoring, to_string(o.scoring)));
            o.downsample_rate = run.pick("downsample_rate", mb.rate, o.downsample_rate);
            o.answer_tokens   = run.pick("answer_tokens", mb.answer_tokens, o.answer_tokens);
            const Benchmark bench = make_benchmark(model, corpus, o);
            save_benchmark(bench, stage.path() / "benchmark");
            json summary = {{"name", bench.name}, {"items", bench.items.size()}, {"fingerprint", bench.fingerprint()}};
            io::write_json(stage.path() / "summary.json", summary);
            print_json(summary);
        };
    }

    // extract ----------------------------------------------------------------
    struct {
        std::optional<std::string> model, corpus;
        std::optional<int>         rate;
    } ex;
    {
        auto & c = make("extract", "capture paired (normal, downsampled) activations at every module", false);
        c.app->add_option("--model", ex.model);
        c.app->add_option("--corpus", ex.corpus);
        c.app->add_option("--rate", ex.rate, "downsample factor for the hallucination-inducing prompt (default 4)");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const Model model   = load_model_input(run, ex.model);
            const Corpus corpus = load_corpus(run.input("corpus", ex.corpus));
            const int rate      = run.pick("downsample_rate", ex.rate, kDefaultDownsampleRate);
            const auto pairs    = make_pairs(corpus, rate);
            const auto acts     = collect_pairs(model, pairs);
            save_activations(acts, stage.path() / "activations");
            json summary = {{"pairs", acts.size()},
                            {"modules", acts.module_count()},
                            {"fingerprint", acts.fingerprint()},
                            {"model_fingerprint", acts.model_fingerprint},
                            {"dataset_fingerprint", acts.dataset_fingerprint}};
            io::write_json(stage.path() / "summary.json", summary);
            print_json(summary);
        };
    }

    // probe ------------------------------------------------------------------
    struct {
        std::optional<std::string> acts, kind;
        std::optional<double>      split, lr, l2;
        std::optional<int>         iterations;
    } pr;
    {
        auto & c = make("probe", "train one logistic probe per module and report validation accuracy", true);
        c.app->add_option("--acts", pr.acts, "activations directory");
        c.app->add_option("--kind", pr.kind, "head | layer");
        c.app->add_option("--split", pr.split, "train fraction (default 0.8)");
        c.app->add_option("--lr", pr.lr);
        c.app->add_option("--iterations", pr.iterations);
        c.app->add_option("--l2", pr.l2);
        c.body = [&](Run & run, io::StagingDir & stage) {
            const auto acts = load_activations(run.input("acts", pr.acts));
            const auto kind = module_kind_from_string(run.pick<std::string>("kind", pr.kind, "head"));
            ProbeOptions o  = probe_options(run, c.common.seed);
            o.split_ratio   = run.pick("split_ratio", pr.split, o.split_ratio);
            o.lr            = run.pick("lr", pr.lr, o.lr);
            o.iterations    = run.pick("iterations", pr.iterations, o.iterations);
            o.l2            = run.pick("l2", pr.l2, o.l2);
            const ProbeReport report = probe_all(acts, kind, o);
            save_report_csv(report, stage.path() / "report.csv");
            io::write_text(stage.path() / "layerwise.csv", summary_to_csv(layerwise_summary(report)));
            json j = {{"kind", to_string(kind)}, {"split_seed", report.split_seed}, {"split_ratio", report.split_ratio},
                      {"rows", json::array()}};
            for (const auto & r : report.rows) {
                j["rows"].push_back({{"module", r.module.str()}, {"train_n", r.train_n}, {"val_n", r.val_n}, {"accuracy", r.accuracy}});
            }
            io::write_json(stage.path() / "report.json", j);
            std::cout << "probed " << report.rows.size() << " modules\n";
        };
    }

    // select -----------------------------------------------------------------
    struct {
        std::optional<std::string> report;
        std::optional<std::size_t> k;
    } se;
    {
        auto & c = make("select", "pick the top-K modules of a probe report", false);
        c.app->add_option("--report", se.report, "probe report CSV");
        c.app->add_option("--k", se.k, "number of modules");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const ProbeReport report = load_report_csv(run.input("report", se.report));
            const auto k = run.pick<std::size_t>("k", se.k, 1);
            json j = {{"kind", to_string(report.kind)}, {"k", k}, {"modules", json::array()}};
            for (const auto & s : top_k(report, k)) {
                json m        = module_json(s.module);
                m["accuracy"] = s.accuracy;
                j["modules"].push_back(m);
            }
            io::write_json(stage.path() / "selection.json", j);
            print_json(j);
        };
    }

    // bundle -----------------------------------------------------------------
    struct {
        std::optional<std::string> acts, selection, klass;
        std::optional<double>      alpha;
        std::optional<bool>        normalize;
    } bu;
    {
        auto & c = make("bundle", "build a steering bundle from selected modules and their mean offsets", false);
        c.app->add_option("--acts", bu.acts, "activations directory the offsets come from");
        c.app->add_option("--selection", bu.selection, "selection.json from `select`");
        c.app->add_option("--alpha", bu.alpha, "steering strength (default 1)");
        c.app->add_option("--class", bu.klass, "temporal class tag: invariant | variant | unrouted");
        c.app->add_flag("--normalize", bu.normalize, "store unit-L2 offset directions");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const auto acts = load_activations(run.input("acts", bu.acts));
            const json sel  = io::read_json(run.input("selection", bu.selection));
            std::vector<SelectedModule> selected;
            for (const auto & m : sel.at("modules")) {
                selected.push_back({module_from_json(m), m.value("accuracy", 0.0)});
            }
            BundleOptions o;
            o.alpha          = static_cast<float>(run.pick("alpha", bu.alpha, 1.0));
            o.temporal_class = temporal_class_from_string(run.pick<std::string>("temporal_class", bu.klass, "unrouted"));
            o.normalize      = run.pick("normalize", bu.normalize, false);
            const SteeringBundle b = make_bundle(acts, selected, o);
            save_bundle(b, stage.path() / "bundle");
            json summary = {{"entries", b.entries.size()},
                            {"alpha", static_cast<double>(b.alpha)},
                            {"temporal_class", to_string(b.temporal_class)},
                            {"activations_fingerprint", b.activations_fingerprint}};
            io::write_json(stage.path() / "summary.json", summary);
            print_json(summary);
        };
    }

    // steer ------------------------------------------------------------------
    struct {
        std::optional<std::string> model, bundle, prompt_file;
        std::optional<int>         max_new;
        std::optional<double>      alpha_override;
    } st;
    {
        auto & c = make("steer", "greedy generation with an optional steering bundle", false);
        c.app->add_option("--model", st.model);
        c.app->add_option("--bundle", st.bundle, "bundle directory (omit for unsteered decoding)");
        c.app->add_option("--prompt-file", st.prompt_file,
                          "JSON prompt: {question, frames, downsample_rate?} or {corpus, id, downsample_rate?}");
        c.app->add_option("--max-new-tokens", st.max_new);
        c.app->add_option("--alpha-override", st.alpha_override);
        c.body = [&](Run & run, io::StagingDir & stage) {
            const Model model = load_model_input(run, st.model);
            std::optional<SteeringBundle> bundle;
            if (const auto bdir = run.input("bundle", st.bundle, false); !bdir.empty()) {
                bundle = load_bundle(bdir);
            }
            const fs::path pfile = run.input("prompt_file", st.prompt_file);
            const json pj        = io::read_json(pfile);
            const int rate       = pj.value("downsample_rate", 1);
            Prompt prompt;
            if (pj.contains("corpus")) {
                fs::path cdir = pj.at("corpus").get<std::string>();
                if (cdir.is_relative()) {
                    cdir = pfile.parent_path() / cdir;
                }
                const auto id     = pj.at("id").get<std::string>();
                const Corpus all  = load_corpus(cdir);
                const auto it     = std::find_if(all.begin(), all.end(), [&](const CorpusSample & s) { return s.id == id; });
                if (it == all.end()) {
                    fail(ErrorKind::Input, "sample '" + id + "' not in " + cdir.string());
                }
                prompt.media    = it->video;
                prompt.question = it->question;
            } else {
                const auto & frames = pj.at("frames");
                if (!frames.is_array() || frames.empty()) {
                    fail(ErrorKind::Input, "prompt file needs a non-empty 'frames' array");
                }
                prompt.media.frame_dim = frames.at(0).size();
                for (const auto & f : frames) {
                    if (f.size() != prompt.media.frame_dim) {
                        fail(ErrorKind::Input, "ragged frames in prompt file");
                    }
                    for (const auto & x : f) {
                        prompt.media.data.push_back(x.get<float>());
                    }
                }
                prompt.media.scene_segments = pj.value("scene_segments", 0);
                prompt.question             = pj.at("question").get<Tokens>();
            }
            prompt.media = downsample(prompt.media, rate);

            GenerationRequest req;
            req.prompt         = std::move(prompt);
            req.max_new_tokens = run.pick("max_new_tokens", st.max_new, 1);
            req.bundle         = bundle ? &*bundle : nullptr;
            if (st.alpha_override || run.file_config.contains("alpha_override")) {
                req.alpha_override = static_cast<float>(run.pick("alpha_override", st.alpha_override, 1.0));
            }
            const auto g = generate(model, req);
            json out = {{"tokens", g.tokens}, {"per_step_logit_margins", io::floats_to_json(g.margins)}};
            io::write_json(stage.path() / "result.json", out);
            print_json(out);
        };
    }

    // route-train ------------------------------------------------------------
    struct {
        std::optional<std::string> model, d_a_f, d_t_f, schedule;
        std::optional<std::size_t> per_class, batch;
        std::optional<double>      lr;
        std::optional<int>         epochs, warmup;
    } rt;
    {
        auto & c = make("route-train", "train the temporal router head on D_a_f (invariant) / D_t_f (variant)", true);
        c.app->add_option("--model", rt.model, "backbone model directory");
        c.app->add_option("--d-a-f", rt.d_a_f, "invariant corpus");
        c.app->add_option("--d-t-f", rt.d_t_f, "variant corpus");
        c.app->add_option("--per-class", rt.per_class, "training samples per class (default 400)");
        c.app->add_option("--lr", rt.lr, "peak learning rate (default 1e-5)");
        c.app->add_option("--batch-size", rt.batch, "(default 8)");
        c.app->add_option("--epochs", rt.epochs, "(default 5)");
        c.app->add_option("--warmup", rt.warmup, "linear warmup steps (default 10)");
        c.app->add_option("--schedule", rt.schedule, "cosine | constant");
        c.body = [&](Run & run, io::StagingDir & stage) {
            auto model = std::make_shared<const Model>(load_model_input(run, rt.model));
            const Corpus a = load_corpus(run.input("d_a_f", rt.d_a_f));
            const Corpus t = load_corpus(run.input("d_t_f", rt.d_t_f));
            RouterConfig cfg;
            cfg.seed            = run.seed(c.common.seed);
            cfg.train_per_class = run.pick("train_per_class", rt.per_class, cfg.train_per_class);
            cfg.learning_rate   = run.pick("learning_rate", rt.lr, cfg.learning_rate);
            cfg.batch_size      = run.pick("batch_size", rt.batch, cfg.batch_size);
            cfg.epochs          = run.pick("epochs", rt.epochs, cfg.epochs);
            cfg.warmup_steps    = run.pick("warmup_steps", rt.warmup, cfg.warmup_steps);
            cfg.schedule        = run.pick("schedule", rt.schedule, cfg.schedule);
            cfg.validate();
            const auto before   = model->backbone_checksum();
            const Router router = train_router(a, t, model, cfg);
            save_router(router, stage.path() / "router");
            json j = {{"val_accuracy", router.val_accuracy},
                      {"best_epoch", router.best_epoch},
                      {"train_n", router.train_n},
                      {"val_n", router.val_n},
                      {"backbone_checksum_before", hex32(before)},
                      {"backbone_checksum_after", hex32(model->backbone_checksum())},
                      {"history", json::array()}};
            for (const auto & e : router.history) {
                j["history"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
            }
            io::write_json(stage.path() / "training.json", j);
            print_json(j);
        };
    }

    // route-eval -------------------------------------------------------------
    struct {
        std::optional<std::string> model, router, corpus;
    } re;
    {
        auto & c = make("route-eval", "per-class confusion counts of a router on a corpus", false);
        c.app->add_option("--model", re.model);
        c.app->add_option("--router", re.router);
        c.app->add_option("--corpus", re.corpus);
        c.body = [&](Run & run, io::StagingDir & stage) {
            auto model          = std::make_shared<const Model>(load_model_input(run, re.model));
            const Router router = load_router(run.input("router", re.router), model);
            const Corpus corpus = load_corpus(run.input("corpus", re.corpus));
            const json j        = route_eval(router, corpus).to_json();
            io::write_json(stage.path() / "confusion.json", j);
            print_json(j);
        };
    }

    // eval / sweep share the steering flags ---------------------------------
    struct SteerFlags {
        std::optional<std::string> bundle, router, bundle_invariant, bundle_variant;
    };
    struct SteerState {
        std::optional<SteeringBundle> single, inv, var;
        std::shared_ptr<const Model>  router_model;
        std::optional<Router>         router;
        EvalSteering                  steering;
    };
    auto add_steer_flags = [](CLI::App * a, SteerFlags & f) {
        a->add_option("--bundle", f.bundle, "steer every item with this bundle");
        a->add_option("--router", f.router, "route each item to --bundle-invariant / --bundle-variant");
        a->add_option("--bundle-invariant", f.bundle_invariant);
        a->add_option("--bundle-variant", f.bundle_variant);
    };
    auto resolve_steering = [](Run & run, const SteerFlags & f, const Model & model, SteerState & s) {
        const auto single = run.input("bundle", f.bundle, false);
        const auto rdir   = run.input("router", f.router, false);
        if (!single.empty() && !rdir.empty()) {
            fail(ErrorKind::Config, "--bundle and --router are exclusive");
        }
        if (!single.empty()) {
            s.single   = load_bundle(single);
            s.steering = steered_by(&*s.single);
        }
        if (!rdir.empty()) {
            s.router_model = std::make_shared<const Model>(model);
            s.router.emplace(load_router(rdir, s.router_model));
            if (const auto p = run.input("bundle_invariant", f.bundle_invariant, false); !p.empty()) {
                s.inv = load_bundle(p);
                s.steering.routed.invariant = &*s.inv;
            }
            if (const auto p = run.input("bundle_variant", f.bundle_variant, false); !p.empty()) {
                s.var = load_bundle(p);
                s.steering.routed.variant = &*s.var;
            }
            s.steering.router = &*s.router;
        }
    };

    struct {
        std::optional<std::string> model, benchmark;
        std::optional<int>         rate;
        SteerFlags                 steer;
    } ev;
    {
        auto & c = make("eval", "score a benchmark, unsteered, with one bundle, or routed", false);
        c.app->add_option("--model", ev.model);
        c.app->add_option("--benchmark", ev.benchmark);
        c.app->add_option("--rate", ev.rate, "override the benchmark's downsample factor");
        add_steer_flags(c.app, ev.steer);
        c.body = [&, resolve_steering](Run & run, io::StagingDir & stage) {
            const Model model     = load_model_input(run, ev.model);
            const Benchmark bench = load_benchmark(run.input("benchmark", ev.benchmark));
            SteerState s;
            resolve_steering(run, ev.steer, model, s);
            std::optional<int> rate;
            if (ev.rate || run.file_config.contains("rate")) {
                rate = run.pick("rate", ev.rate, bench.downsample_rate);
            }
            const json j = evaluate(model, bench, s.steering, rate).to_json();
            io::write_json(stage.path() / "report.json", j);
            print_json(j);
        };
    }

    struct {
        std::optional<std::string> model, benchmark, rates;
        SteerFlags                 steer;
    } sw;
    {
        auto & c = make("sweep", "accuracy as a function of the frame downsample factor", false);
        c.app->add_option("--model", sw.model);
        c.app->add_option("--benchmark", sw.benchmark);
        c.app->add_option("--rates", sw.rates, "comma-separated factors (default 1,2,4,8)");
        add_steer_flags(c.app, sw.steer);
        c.body = [&, resolve_steering](Run & run, io::StagingDir & stage) {
            const Model model     = load_model_input(run, sw.model);
            const Benchmark bench = load_benchmark(run.input("benchmark", sw.benchmark));
            SteerState s;
            resolve_steering(run, sw.steer, model, s);
            std::vector<int> rates;
            try {
                for (const auto & r : split(run.pick<std::string>("rates", sw.rates, "1,2,4,8"), ',')) {
                    rates.push_back(std::stoi(r));
                }
            } catch (const std::logic_error &) {
                fail(ErrorKind::Input, "bad --rates list");
            }
            const auto points = frame_reduction_sweep(model, bench, rates, s.steering);
            io::write_json(stage.path() / "sweep.json", sweep_to_json(points));
            io::write_text(stage.path() / "sweep.csv", sweep_to_csv(points));
            std::cout << sweep_to_csv(points);
        };
    }

    // grid -------------------------------------------------------------------
    struct {
        std::optional<std::string> model, acts, benchmark, space, kind;
        std::optional<bool>        normalize;
    } gr;
    {
        auto & c = make("grid", "(K, alpha) search over steering configurations", true);
        c.app->add_option("--model", gr.model);
        c.app->add_option("--acts", gr.acts, "activations used for probing and offsets");
        c.app->add_option("--benchmark", gr.benchmark);
        c.app->add_option("--space", gr.space, "standard | K1,K2,..:a1,a2,..");
        c.app->add_option("--kind", gr.kind, "head | layer");
        c.app->add_flag("--normalize", gr.normalize, "unit-L2 offset directions");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const Model model     = load_model_input(run, gr.model);
            const auto acts       = load_activations(run.input("acts", gr.acts));
            const Benchmark bench = load_benchmark(run.input("benchmark", gr.benchmark));
            const GridSpace space = parse_space(run.pick<std::string>("space", gr.space, "standard"));
            GridOptions o;
            o.probe     = probe_options(run, c.common.seed);
            o.kind      = module_kind_from_string(run.pick<std::string>("kind", gr.kind, "head"));
            o.normalize = run.pick("normalize", gr.normalize, false);
            const GridResult r = grid_search(model, acts, space, bench, o);
            io::write_json(stage.path() / "grid.json", r.to_json());
            io::write_text(stage.path() / "grid.csv", r.to_csv());
            std::cout << r.to_csv();
        };
    }

    // reuse / mixed ----------------------------------------------------------
    struct TwoClassFlags {
        std::optional<std::string> model, acts_inv, acts_var, bench_inv, bench_var;
        std::optional<std::size_t> k;
        std::optional<double>      alpha;
    };
    auto add_two_class = [](CLI::App * a, TwoClassFlags & f) {
        a->add_option("--model", f.model);
        a->add_option("--acts-invariant", f.acts_inv);
        a->add_option("--acts-variant", f.acts_var);
        a->add_option("--bench-invariant", f.bench_inv);
        a->add_option("--bench-variant", f.bench_var);
        a->add_option("--k", f.k, "modules per bundle (default 3)");
        a->add_option("--alpha", f.alpha, "(default 1)");
    };
    struct TwoClass {
        Model             model;
        PairedActivations acts_inv, acts_var;
        Benchmark         bench_inv, bench_var;
        std::size_t       k;
        float             alpha;
    };
    auto load_two_class = [](Run & run, const TwoClassFlags & f) {
        return TwoClass{load_model(run.input("model", f.model)),
                        load_activations(run.input("acts_invariant", f.acts_inv)),
                        load_activations(run.input("acts_variant", f.acts_var)),
                        load_benchmark(run.input("bench_invariant", f.bench_inv)),
                        load_benchmark(run.input("bench_variant", f.bench_var)),
                        run.pick<std::size_t>("k", f.k, 3),
                        static_cast<float>(run.pick("alpha", f.alpha, 1.0))};
    };

    TwoClassFlags ru;
    {
        auto & c = make("reuse", "cross-class reuse of module selections and offsets", true);
        add_two_class(c.app, ru);
        c.body = [&, load_two_class](Run & run, io::StagingDir & stage) {
            const TwoClass d = load_two_class(run, ru);
            const auto probe = probe_options(run, c.common.seed);
            const std::map<TemporalClass, const PairedActivations *> acts = {{TemporalClass::Invariant, &d.acts_inv},
                                                                              {TemporalClass::Variant, &d.acts_var}};
            const std::map<TemporalClass, const Benchmark *> benches = {{TemporalClass::Invariant, &d.bench_inv},
                                                                        {TemporalClass::Variant, &d.bench_var}};
            const json j = cross_reuse_experiment(d.model, acts, benches, d.k, d.alpha, probe).to_json();
            io::write_json(stage.path() / "reuse.json", j);
            print_json(j);
        };
    }

    TwoClassFlags mx;
    {
        auto & c = make("mixed", "pooled-data bundle against per-class bundles on both benchmark halves", true);
        add_two_class(c.app, mx);
        c.body = [&, load_two_class](Run & run, io::StagingDir & stage) {
            const TwoClass d = load_two_class(run, mx);
            const auto probe = probe_options(run, c.common.seed);
            const json j = mixed_dataset_experiment(d.model, d.acts_inv, d.acts_var, d.bench_inv, d.bench_var, d.k, d.alpha, probe)
                               .to_json();
            io::write_json(stage.path() / "mixed.json", j);
            print_json(j);
        };
    }

    // freeze-fixtures --------------------------------------------------------
    std::vector<std::string> ff_only;
    bool ff_list = false;
    {
        auto & c = make("freeze-fixtures", "run the seeded oracle scenarios and write their JSON fixtures", false);
        c.app->add_option("--only", ff_only, "scenario name (repeatable; default all)");
        c.app->add_flag("--list", ff_list, "print scenario names and exit");
        c.body = [&](Run & run, io::StagingDir & stage) {
            const auto & reg = scenarios::registry();
            std::optional<std::vector<std::string>> only_flag;
            if (!ff_only.empty()) {
                only_flag = ff_only;
            }
            const auto only = run.pick<std::vector<std::string>>("only", only_flag, {});
            for (const auto & name : only) {
                if (std::none_of(reg.begin(), reg.end(), [&](const auto & e) { return e.name == name; })) {
                    fail(ErrorKind::Input, "unknown scenario '" + name + "'");
                }
            }
            // keep fixtures that are not being refrozen
            if (fs::exists(stage.final_path())) {
                for (const auto & e : fs::directory_iterator(stage.final_path())) {
                    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "run_manifest.json") {
                        fs::copy_file(e.path(), stage.path() / e.path().filename(), fs::copy_options::overwrite_existing);
                    }
                }
            }
            for (const auto & e : reg) {
                if (!only.empty() && std::find(only.begin(), only.end(), e.name) == only.end()) {
                    continue;
                }
                run.derived(e.name, e.seed);
                const auto t0 = std::chrono::steady_clock::now();
                const json j  = e.run(e.seed);
                io::write_json(stage.path() / (e.name + ".json"), j);
                std::cerr << e.name << ": "
                          << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
            }
        };
    }

    // report -----------------------------------------------------------------
    struct {
        std::optional<std::string> probe, sweep, grid;
    } rp;
    {
        auto & c = make("report", "emit plot-ready CSV/JSON from probe, sweep and grid outputs", false);
        c.app->add_option("--probe", rp.probe, "probe report CSV");
        c.app->add_option("--sweep", rp.sweep, "sweep.json");
        c.app->add_option("--grid", rp.grid, "grid.json");
        c.body = [&](Run & run, io::StagingDir & stage) {
            json j = json::object();
            if (const auto p = run.input("probe", rp.probe, false); !p.empty()) {
                const ProbeReport report = load_report_csv(p);
                const auto summary       = layerwise_summary(report);
                io::write_text(stage.path() / "probe_layerwise.csv", summary_to_csv(summary));
                json rows = json::array();
                for (const auto & s : summary) {
                    rows.push_back({{"layer", s.layer}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"accuracies", s.accuracies}});
                }
                j["probe_layerwise"] = rows;
            }
            if (const auto p = run.input("sweep", rp.sweep, false); !p.empty()) {
                const json sj = io::read_json(p);
                std::string csv = "rate,accuracy\n";
                json pts        = json::array();
                for (const auto & pt : sj) {
                    csv += pt.at("rate").dump() + "," + pt.at("accuracy").dump() + "\n";
                    pts.push_back({{"rate", pt.at("rate")}, {"accuracy", pt.at("accuracy")}});
                }
                io::write_text(stage.path() / "sweep_plot.csv", csv);
                j["sweep"] = pts;
            }
            if (const auto p = run.input("grid", rp.grid, false); !p.empty()) {
                const json gj   = io::read_json(p);
                std::string csv = "k,alpha,overall\n";
                for (const auto & row : gj.at("rows")) {
                    if (!row.value("skipped", false)) {
                        csv += row.at("k").dump() + "," + row.at("alpha").dump() + "," + row.at("overall").dump() + "\n";
                    }
                }
                io::write_text(stage.path() / "grid_plot.csv", csv);
                j["grid_best"] = gj.value("best", json());
            }
            if (j.empty()) {
                fail(ErrorKind::Input, "report needs at least one of --probe, --sweep, --grid");
            }
            io::write_json(stage.path() / "report.json", j);
            print_json(j);
        };
    }

    // ------------------------------------------------------------------------
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp &) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion &) {
        std::cout << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError & e) {
        std::cerr << json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        std::cerr << app.help();
        return kExitUsage;
    }

    if (ff_list) {
        for (const auto & e : scenarios::registry()) {
            std::cout << e.name << '\n';
        }
        return 0;
    }

    for (auto & c : commands) {
        if (!c->app->parsed()) {
            continue;
        }
        Run run;
        run.command = c->app->get_name();
        try {
            if (c->common.config) {
                run.file_config = io::read_json(*c->common.config);
                if (!run.file_config.is_object()) {
                    fail(ErrorKind::Config, "config file must hold a JSON object");
                }
                run.inputs["config"] = {{"path", *c->common.config}, {"fingerprint", tree_fingerprint(*c->common.config)}};
            }
            fs::path out = c->common.out ? fs::path(*c->common.out)
                                         : run.command == "freeze-fixtures" ? fs::path("tests/fixtures")
                                                                            : default_out_root() / run.command;
            run.config["out"] = out.generic_string();
            io::StagingDir stage(out);
            c->body(run, stage);
            publish(run, stage);
            return 0;
        } catch (const Error & e) {
            std::cerr << json{{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}.dump() << '\n';
            return kExitData;
        } catch (const json::exception & e) {
            std::cerr << json{{"error", {{"kind", "input"}, {"message", e.what()}}}}.dump() << '\n';
            return kExitData;
        } catch (const fs::filesystem_error & e) {
            std::cerr << json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump() << '\n';
            return kExitData;
        } catch (const std::exception & e) {
            std::cerr << json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << '\n';
            return kExitUnexpected;
        }
    }
    return kExitUsage;
}

int dispatch(int argc, const char * const * argv) {
    return dispatch(std::vector<std::string>(argv, argv + argc));
}

} // namespace tempsteer::cli
