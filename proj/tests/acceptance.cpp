// Acceptance run: one PASS/FAIL line per criterion. Scenario results are
// recomputed and compared against the frozen fixtures before the thresholds
// are checked.

#include "tempsteer/cli.hpp"
#include "tempsteer/harness.hpp"
#include "tempsteer/io.hpp"
#include "tempsteer/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unistd.h>

using namespace tempsteer;
namespace fs = std::filesystem;
using json   = nlohmann::ordered_json;

namespace {

struct Outcome {
    bool        pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string & title, std::optional<double> limit_s, const std::function<Outcome()> & fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception & e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s && secs >= *limit_s) {
        o.pass = false;
        o.detail += "; over time limit " + std::to_string(*limit_s) + " s";
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2f s", secs);
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "C" << id << " " << title << " :: " << o.detail << " (" << timing
              << ")" << std::endl;
    failures += o.pass ? 0 : 1;
}

const scenarios::Entry & entry(const std::string & name) {
    for (const auto & e : scenarios::registry()) {
        if (e.name == name) {
            return e;
        }
    }
    throw std::runtime_error("no scenario " + name);
}

// Recomputes a scenario; an empty string means it matches its frozen fixture.
std::string run_against_fixture(const std::string & name, json & out) {
    const auto & e = entry(name);
    out = e.run(e.seed);
    const fs::path p = fs::path(TEMPSTEER_FIXTURES) / (name + ".json");
    if (!fs::exists(p)) {
        return "fixture " + p.filename().string() + " missing";
    }
    const json frozen = io::read_json(p);
    if (frozen == out) {
        return {};
    }
    const json patch = json::diff(frozen, out);
    return "fixture mismatch at " + (patch.empty() ? std::string("?") : patch[0].value("path", std::string("?")));
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------------------

Outcome c1_offsets() {
    const ModuleLayout layout(3, 4, 16);
    constexpr std::size_t n = 300;
    Rng rng(2024);
    PairedActivations acts;
    acts.layout = layout;
    for (std::size_t i = 0; i < n; ++i) {
        acts.pair_ids.push_back("p" + std::to_string(i));
    }
    for (std::size_t j = 0; j < layout.count(); ++j) {
        const std::size_t d = layout.dim(layout.id(j));
        Matrix a(n, d), b(n, d);
        for (auto & v : a.data) {
            v = static_cast<float>(3.0 * rng.normal() + 1.0);
        }
        for (auto & v : b.data) {
            v = static_cast<float>(3.0 * rng.normal() - 0.5);
        }
        acts.normal.push_back(std::move(a));
        acts.halluc.push_back(std::move(b));
    }
    acts.model_fingerprint = acts.dataset_fingerprint = "random";

    const OffsetSet off = compute_offsets(acts);
    double err_sample = 0.0, err_mean = 0.0, err_single = 0.0;
    for (std::size_t j = 0; j < layout.count(); ++j) {
        const std::size_t d = acts.normal[j].cols;
        std::vector<long double> ref(d, 0.0L);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) {
                const long double diff = static_cast<long double>(acts.normal[j].at(i, k)) - acts.halluc[j].at(i, k);
                ref[k] += diff;
                err_sample = std::max(err_sample, static_cast<double>(std::fabs(diff - off.samples[j].at(i, k))));
            }
        }
        const auto single = mean_offset(acts, layout.id(j));
        for (std::size_t k = 0; k < d; ++k) {
            const long double m = ref[k] / static_cast<long double>(n);
            err_mean   = std::max(err_mean, static_cast<double>(std::fabs(m - off.mean[j][k])));
            err_single = std::max(err_single, static_cast<double>(std::fabs(m - single[k])));
        }
    }

    const float c           = -1.75f;
    const OffsetSet scaled_ = compute_offsets(scaled(acts, c));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng(7).shuffle(perm);
    PairedActivations shuffled = acts;
    for (std::size_t j = 0; j < layout.count(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(acts.normal[j].row(perm[i]).begin(), acts.normal[j].row(perm[i]).end(), shuffled.normal[j].row(i).begin());
            std::copy(acts.halluc[j].row(perm[i]).begin(), acts.halluc[j].row(perm[i]).end(), shuffled.halluc[j].row(i).begin());
        }
    }
    const OffsetSet permuted = compute_offsets(shuffled);
    double err_lin = 0.0, err_perm = 0.0;
    for (std::size_t j = 0; j < layout.count(); ++j) {
        for (std::size_t k = 0; k < off.mean[j].size(); ++k) {
            err_lin  = std::max(err_lin, std::abs(static_cast<double>(scaled_.mean[j][k]) - c * static_cast<double>(off.mean[j][k])));
            err_perm = std::max(err_perm, std::abs(static_cast<double>(permuted.mean[j][k]) - off.mean[j][k]));
        }
    }
    const double worst = std::max({err_sample, err_mean, err_single, err_lin, err_perm});
    return {worst <= 1e-5, "max |err| sample " + fmt(err_sample) + ", mean " + fmt(err_mean) + ", single-module " +
                               fmt(err_single) + ", linearity " + fmt(err_lin) + ", permutation " + fmt(err_perm) +
                               " (tol 1e-5)"};
}

Outcome c2_probe_recovery() {
    json r;
    const std::string fx = run_against_fixture("probe_recovery", r);
    const double acc = r["target_accuracy"], comp = r["max_competitor_accuracy"], cos = r["mean_offset_cosine"];
    const bool ok = fx.empty() && acc == 1.0 && comp < acc && cos <= -0.999;
    return {ok, "target " + r["target"].get<std::string>() + " val acc " + fmt(acc) + ", best upstream/same-layer competitor " +
                    fmt(comp) + ", cos(mean offset, delta) " + fmt(cos) + (fx.empty() ? "" : "; " + fx)};
}

Outcome c3_cancellation() {
    json r;
    const std::string fx = run_against_fixture("cancellation", r);
    const double diff  = r["max_logit_diff"];
    const std::size_t n = r["prompts"], same = r["identical_outputs"];
    const bool ok = fx.empty() && n == 100 && diff <= 1e-4 && same == n;
    return {ok, "max |logit diff| " + fmt(diff) + " over " + std::to_string(n) + " prompts x " + r["steps"].dump() +
                    " steps, identical greedy outputs " + std::to_string(same) + "/" + std::to_string(n) +
                    (fx.empty() ? "" : "; " + fx)};
}

Outcome c4_frame_sweep() {
    json r;
    const std::string fx = run_against_fixture("frame_sweep", r);
    std::vector<double> acc;
    std::string curve;
    for (const auto & p : r["sweep"]) {
        acc.push_back(p["accuracy"].get<double>());
        curve += (curve.empty() ? "" : ", ") + p["rate"].dump() + ":" + fmt(acc.back());
    }
    bool monotone = acc.size() == 4;
    for (std::size_t i = 1; i < acc.size(); ++i) {
        monotone = monotone && acc[i] <= acc[i - 1];
    }
    const bool gap = acc.size() == 4 && acc[3] <= acc[0] - 0.15;
    return {fx.empty() && monotone && gap,
            "accuracy by rate {" + curve + "}, non-increasing " + (monotone ? "yes" : "no") + ", rate-8 drop " +
                fmt(acc.empty() ? 0 : acc.front() - acc.back()) + " (need >= 0.15)" + (fx.empty() ? "" : "; " + fx)};
}

Outcome c5_head_vs_layer() {
    json r;
    const std::string fx = run_against_fixture("head_vs_layer", r);
    const double hr = r["head_recovery"], lr = r["layer_recovery"], gap = r["gap"];
    const bool ok = fx.empty() && hr >= 0.95 && lr >= 0.95 && std::abs(gap) <= 0.05;
    return {ok, "clean " + fmt(r["clean"]) + ", unsteered " + fmt(r["unsteered"]) + ", head recovery " + fmt(hr) +
                    ", layer recovery " + fmt(lr) + ", gap " + fmt(gap) + (fx.empty() ? "" : "; " + fx)};
}

Outcome c6_pipeline() {
    json r;
    const std::string fx = run_against_fixture("pipeline", r);
    const PipelineConfig defaults;
    const bool constants = defaults.frame_threshold == 200 && defaults.tau == 0.8 && defaults.downsample_rate == 4 &&
                           defaults.target_pool_size == 1000;
    const bool ok = fx.empty() && constants && r["frame_threshold"] == 200 && r["tau"] == 0.8 &&
                    r["max_frames_d_a_f"].get<int>() <= 200 && r["min_confidence"].get<double>() >= 0.8 &&
                    r["variant_judged_merged"] == r["variant_judged_in_d_a_pool"] && r["overlap"] == 0 &&
                    r["mean_frames_d_t_f"].get<double>() > r["mean_frames_d_a_f"].get<double>();
    return {ok, "T=200, tau=0.8 defaults " + std::string(constants ? "ok" : "WRONG") + "; D_a_f " +
                    r["stats"]["d_a_f"]["size"].dump() + " (mean " + fmt(r["mean_frames_d_a_f"]) + " frames, max " +
                    r["max_frames_d_a_f"].dump() + "), D_t_f " + r["stats"]["d_t_f"]["size"].dump() + " (mean " +
                    fmt(r["mean_frames_d_t_f"]) + "), merged " + r["variant_judged_merged"].dump() + "/" +
                    r["variant_judged_in_d_a_pool"].dump() + " variant-judged D_a_pool samples" +
                    (fx.empty() ? "; matches fixture" : "; " + fx)};
}

// two_class also carries the mixed-dataset report; run it once for C7 and C9.
json two_class_cache;

Outcome c7_router() {
    json r;
    const std::string fx = run_against_fixture("two_class", r);
    two_class_cache      = r;
    const RouterConfig d;
    const bool defaults = d.train_per_class == 400 && d.learning_rate == 1e-5 && d.batch_size == 8 && d.epochs == 5 &&
                          d.warmup_steps == 10 && r["router"]["config"]["learning_rate"] == 1e-5;
    const auto & rr = r["router"];
    const bool frozen = rr["backbone_checksum_before"] == rr["backbone_checksum_after"];
    const double val = rr["val_accuracy"];
    const double best_single = std::max(r["invariant_bundle"].get<double>(), r["variant_bundle"].get<double>());
    const double routed = r["routed"];
    const bool ok = fx.empty() && defaults && frozen && val >= 0.95 && routed >= best_single - 0.02;
    return {ok, "defaults (400/class, lr 1e-5, batch 8, 5 epochs, warmup 10) " + std::string(defaults ? "ok" : "WRONG") +
                    ", backbone checksum " + (frozen ? "unchanged" : "CHANGED") + ", val acc " + fmt(val) + ", routed " +
                    fmt(routed) + " vs best single bundle " + fmt(best_single) + (fx.empty() ? "" : "; " + fx)};
}

Outcome c8_grid() {
    json r;
    const std::string fx = run_against_fixture("grid", r);
    const GridSpace s = GridSpace::standard_space();
    const bool space = s.ks == std::vector<std::size_t>{32, 64, 128, 256} && s.alphas == std::vector<float>{8, 16, 24, 32};
    std::size_t evaluated = 0;
    for (const auto & row : r["rows"]) {
        evaluated += row["skipped"].get<bool>() ? 0 : 1;
    }
    const bool best_ok = !r["best"].is_null() && r["best"]["alpha"] == r["nearest_alpha"];
    const bool ok = fx.empty() && space && r["rows"].size() == 16 && evaluated == 16 && best_ok;
    return {ok, "configs " + std::to_string(r["rows"].size()) + " (evaluated " + std::to_string(evaluated) +
                    "), argmax (K=" + r["best"]["k"].dump() + ", alpha=" + r["best"]["alpha"].dump() + "), plant-cancelling alpha " +
                    fmt(r["cancel_alpha"]) + " -> nearest grid alpha " + r["nearest_alpha"].dump() +
                    (fx.empty() ? "" : "; " + fx)};
}

Outcome c9_mixed() {
    const fs::path p = fs::path(TEMPSTEER_FIXTURES) / "two_class.json";
    if (two_class_cache.is_null()) {
        two_class_cache = entry("two_class").run(entry("two_class").seed);
    }
    const bool fx = fs::exists(p) && io::read_json(p)["mixed"] == two_class_cache["mixed"];
    bool ok = fx;
    std::string detail;
    for (const auto & h : two_class_cache["mixed"]["halves"]) {
        const double u = h["unsteered"], pool = h["pooled_bundle"], best = h["best_per_class"];
        const bool between = pool >= std::min(u, best) && pool <= std::max(u, best);
        ok = ok && between;
        detail += (detail.empty() ? "" : "; ") + h["half"].get<std::string>() + ": unsteered " + fmt(u) + " <= pooled " +
                  fmt(pool) + " <= best per-class " + fmt(best) + (between ? "" : " VIOLATED");
    }
    return {ok, detail + (fx ? "" : "; fixture mismatch")};
}

Outcome c10_formats(const fs::path & tmp) {
    std::vector<std::string> notes;
    bool ok = true;
    auto same_file = [](const fs::path & a, const fs::path & b) {
        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {});
    };
    auto same_dir = [&](const fs::path & a, const fs::path & b) {
        for (const auto & e : fs::directory_iterator(a)) {
            if (!same_file(e.path(), b / e.path().filename())) {
                return false;
            }
        }
        return true;
    };
    auto corrupt = [](const fs::path & p) {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        char c = 0;
        f.seekg(4);
        f.read(&c, 1);
        c = static_cast<char>(c ^ 0x21);
        f.seekp(4);
        f.write(&c, 1);
    };
    auto rejects = [](const std::function<void()> & load) {
        try {
            load();
        } catch (const Error & e) {
            return e.kind() == ErrorKind::Corrupt;
        }
        return false;
    };

    ModelConfig cfg = scenarios::substrate_config(10);
    cfg.n_layers    = 2;
    const ModuleId target = ModuleId::head_of(1, 1);
    const auto model = std::make_shared<const Model>(
        Model::build_planted(cfg, {PlantSpec{target, scenarios::random_direction(16, 2.0, 3), PlantTrigger::DownsampledMedia, true}}));
    const Corpus corpus = generate_corpus(scenarios::planted_corpus_options(60, 4));

    // model
    save_model(*model, tmp / "m1");
    const Model m2 = load_model(tmp / "m1");
    save_model(m2, tmp / "m2");
    const bool model_ok = m2.fingerprint() == model->fingerprint() && same_dir(tmp / "m1", tmp / "m2");
    corrupt(tmp / "m1" / "params.bin");
    const bool model_rej = rejects([&] { load_model(tmp / "m1"); });
    notes.push_back(std::string("model ") + (model_ok ? "bit-exact" : "DIFFERS") + (model_rej ? "/rejects corruption" : "/ACCEPTS corruption"));
    ok = ok && model_ok && model_rej;

    // activations
    const auto acts = collect_pairs(*model, make_pairs(corpus));
    save_activations(acts, tmp / "a1");
    const auto a2 = load_activations(tmp / "a1");
    save_activations(a2, tmp / "a2");
    const bool acts_ok = a2.fingerprint() == acts.fingerprint() && a2.normal[5].data == acts.normal[5].data && same_dir(tmp / "a1", tmp / "a2");
    fs::path blob;
    for (const auto & e : fs::directory_iterator(tmp / "a1")) {
        if (e.path().extension() == ".bin") {
            blob = e.path();
        }
    }
    corrupt(blob);
    const bool acts_rej = rejects([&] { load_activations(tmp / "a1"); });
    notes.push_back(std::string("activations ") + (acts_ok ? "bit-exact" : "DIFFERS") + (acts_rej ? "/rejects corruption" : "/ACCEPTS corruption"));
    ok = ok && acts_ok && acts_rej;

    // bundle
    const SelectedModule sel[] = {{target, 1.0}, {ModuleId::head_of(0, 3), 0.5}};
    const SteeringBundle b = make_bundle(acts, sel, BundleOptions{16.0f, TemporalClass::Invariant, false});
    save_bundle(b, tmp / "b1");
    const SteeringBundle b2 = load_bundle(tmp / "b1");
    save_bundle(b2, tmp / "b2");
    const bool bundle_ok = b2.entries[0].offset == b.entries[0].offset && b2.alpha == 16.0f && same_dir(tmp / "b1", tmp / "b2");
    fs::resize_file(tmp / "b1" / "offsets.bin", 9);
    const bool bundle_rej = rejects([&] { load_bundle(tmp / "b1"); });
    notes.push_back(std::string("bundle ") + (bundle_ok ? "bit-exact" : "DIFFERS") + (bundle_rej ? "/rejects truncation" : "/ACCEPTS truncation"));
    ok = ok && bundle_ok && bundle_rej;

    // router
    Corpus inv, var;
    for (const auto & s : corpus) {
        (s.truth() == TemporalClass::Variant ? var : inv).push_back(s);
    }
    RouterConfig rc;
    rc.train_per_class = 20;
    rc.epochs          = 1;
    const Router r = train_router(inv, var, model, rc);
    save_router(r, tmp / "r1");
    const Router r2 = load_router(tmp / "r1", model);
    save_router(r2, tmp / "r2");
    const bool router_ok = r2.head().w == r.head().w && r2.head().b == r.head().b && same_dir(tmp / "r1", tmp / "r2");
    corrupt(tmp / "r1" / "head.bin");
    const bool router_rej = rejects([&] { load_router(tmp / "r1", model); });
    notes.push_back(std::string("router ") + (router_ok ? "bit-exact" : "DIFFERS") + (router_rej ? "/rejects corruption" : "/ACCEPTS corruption"));
    ok = ok && router_ok && router_rej;

    std::string detail;
    for (const auto & n : notes) {
        detail += (detail.empty() ? "" : ", ") + n;
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------
// C11: every subcommand twice, all non-manifest outputs compared byte for byte

int quiet_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "tempsteer");
    std::ostringstream sink;
    auto * old_out = std::cout.rdbuf(sink.rdbuf());
    auto * old_err = std::cerr.rdbuf(sink.rdbuf());
    const int code = cli::dispatch(args);
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return code;
}

struct Chain {
    std::vector<std::string> commands; // in order
    std::vector<std::string> failed;
};

Chain run_chain(const fs::path & root) {
    Chain c;
    auto p = [&](const std::string & rel) { return (root / rel).string(); };
    auto step = [&](const std::string & name, std::vector<std::string> args) {
        c.commands.push_back(name);
        if (quiet_cli(std::move(args)) != 0) {
            c.failed.push_back(name);
        }
    };
    step("gen-corpus", {"gen-corpus", "--preset", "planted", "--n", "60", "--seed", "3", "--out", p("corpus")});
    step("gen-corpus(raw)", {"gen-corpus", "--n", "500", "--seed", "4", "--duplicate-fraction", "0.02", "--out", p("raw")});
    step("pipeline", {"pipeline", "--corpus", p("raw/corpus"), "--pool-size", "200", "--seed", "4", "--out", p("pipe")});
    step("build-model", {"build-model", "--seed", "2", "--out", p("base")});
    step("make-benchmark", {"make-benchmark", "--model", p("base/model"), "--corpus", p("corpus/corpus"), "--out", p("bench")});
    step("build-model(planted)", {"build-model", "--seed", "2", "--plant", "head:3.1", "--rate-scaled", "--calibrate",
                                  p("bench/benchmark"), "--out", p("planted")});
    step("extract", {"extract", "--model", p("planted/model"), "--corpus", p("corpus/corpus"), "--out", p("acts")});
    step("probe", {"probe", "--acts", p("acts/activations"), "--kind", "head", "--seed", "1", "--out", p("probe")});
    step("select", {"select", "--report", p("probe/report.csv"), "--k", "2", "--out", p("sel")});
    step("bundle", {"bundle", "--acts", p("acts/activations"), "--selection", p("sel/selection.json"), "--class", "invariant",
                    "--out", p("bundle_a")});
    step("bundle(variant)", {"bundle", "--acts", p("acts/activations"), "--selection", p("sel/selection.json"), "--class",
                             "variant", "--alpha", "1.5", "--out", p("bundle_t")});
    {
        const auto first = io::read_text(root / "corpus" / "corpus" / "corpus.jsonl");
        const auto id    = io::json::parse(first.substr(0, first.find('\n')))["id"].get<std::string>();
        io::write_json(root / "prompt.json", {{"corpus", "corpus/corpus"}, {"id", id}, {"downsample_rate", 4}});
    }
    step("steer", {"steer", "--model", p("planted/model"), "--bundle", p("bundle_a/bundle"), "--prompt-file", p("prompt.json"),
                   "--max-new-tokens", "3", "--out", p("steer")});
    step("route-train", {"route-train", "--model", p("planted/model"), "--d-a-f", p("pipe/d_a_f"), "--d-t-f", p("pipe/d_t_f"),
                         "--per-class", "40", "--epochs", "2", "--seed", "5", "--out", p("router")});
    step("route-eval", {"route-eval", "--model", p("planted/model"), "--router", p("router/router"), "--corpus",
                        p("corpus/corpus"), "--out", p("route_eval")});
    step("eval", {"eval", "--model", p("planted/model"), "--benchmark", p("bench/benchmark"), "--bundle", p("bundle_a/bundle"),
                  "--out", p("eval")});
    step("eval(routed)", {"eval", "--model", p("planted/model"), "--benchmark", p("bench/benchmark"), "--router",
                          p("router/router"), "--bundle-invariant", p("bundle_a/bundle"), "--bundle-variant",
                          p("bundle_t/bundle"), "--out", p("eval_routed")});
    step("sweep", {"sweep", "--model", p("planted/model"), "--benchmark", p("bench/benchmark"), "--out", p("sweep")});
    step("grid", {"grid", "--model", p("planted/model"), "--acts", p("acts/activations"), "--benchmark", p("bench/benchmark"),
                  "--space", "standard", "--out", p("grid")});
    const std::vector<std::string> two = {"--model", p("planted/model"), "--acts-invariant", p("acts/activations"),
                                          "--acts-variant", p("acts/activations"), "--bench-invariant", p("bench/benchmark"),
                                          "--bench-variant", p("bench/benchmark"), "--k", "2"};
    std::vector<std::string> reuse = {"reuse"}, mixed = {"mixed"};
    reuse.insert(reuse.end(), two.begin(), two.end());
    mixed.insert(mixed.end(), two.begin(), two.end());
    reuse.insert(reuse.end(), {"--out", p("reuse")});
    mixed.insert(mixed.end(), {"--out", p("mixed")});
    step("reuse", reuse);
    step("mixed", mixed);
    step("report", {"report", "--probe", p("probe/report.csv"), "--sweep", p("sweep/sweep.json"), "--grid", p("grid/grid.json"),
                    "--out", p("report")});
    step("freeze-fixtures", {"freeze-fixtures", "--only", "substrate", "--only", "pipeline", "--out", p("fixtures")});
    return c;
}

Outcome c11_determinism(const fs::path & tmp) {
    const Chain a = run_chain(tmp / "a");
    const Chain b = run_chain(tmp / "b");
    if (!a.failed.empty() || !b.failed.empty()) {
        std::string f;
        for (const auto & s : a.failed) {
            f += " " + s;
        }
        return {false, "commands failed:" + f};
    }
    std::size_t json_files = 0, other_files = 0, manifests = 0, dirs = 0;
    std::vector<std::string> diffs;
    for (const auto & e : fs::directory_iterator(tmp / "a")) {
        if (!e.is_directory()) {
            continue;
        }
        ++dirs;
        std::size_t here = 0;
        for (const auto & f : fs::recursive_directory_iterator(e.path())) {
            if (!f.is_regular_file()) {
                continue;
            }
            const auto rel = fs::relative(f.path(), tmp / "a");
            if (f.path().filename() == "run_manifest.json") {
                ++here;
                continue;
            }
            (f.path().extension() == ".json" ? json_files : other_files) += 1;
            const fs::path other = tmp / "b" / rel;
            std::ifstream fa(f.path(), std::ios::binary), fb(other, std::ios::binary);
            if (!fb || std::string(std::istreambuf_iterator<char>(fa), {}) != std::string(std::istreambuf_iterator<char>(fb), {})) {
                diffs.push_back(rel.generic_string());
            }
        }
        manifests += here == 1 ? 1 : 0;
    }
    const bool ok = diffs.empty() && manifests == dirs;
    std::string detail = std::to_string(a.commands.size()) + " invocations covering all subcommands, " +
                         std::to_string(json_files) + " JSON + " + std::to_string(other_files) +
                         " other outputs byte-identical across runs, " + std::to_string(manifests) + "/" +
                         std::to_string(dirs) + " output dirs with one run manifest";
    if (!diffs.empty()) {
        detail += "; differing: " + diffs.front() + (diffs.size() > 1 ? " (+" + std::to_string(diffs.size() - 1) + ")" : "");
    }
    return {ok, detail};
}

} // namespace

int main() {
    const fs::path tmp = fs::temp_directory_path() / ("tempsteer-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    fs::create_directories(tmp / "formats");
    fs::create_directories(tmp / "cli");

    criterion(1, "offset arithmetic exactness", 1.0, c1_offsets);
    criterion(2, "planted-head recovery", 30.0, c2_probe_recovery);
    criterion(3, "exact cancellation", 30.0, c3_cancellation);
    criterion(4, "frame-reduction sweep", 120.0, c4_frame_sweep);
    criterion(5, "head vs layer steering", std::nullopt, c5_head_vs_layer);
    criterion(6, "pipeline constants and behaviour", std::nullopt, c6_pipeline);
    criterion(7, "router", std::nullopt, c7_router);
    criterion(8, "grid search", std::nullopt, c8_grid);
    criterion(9, "mixed-dataset trade-off", std::nullopt, c9_mixed);
    criterion(10, "format round-trips", std::nullopt, [&] { return c10_formats(tmp / "formats"); });
    criterion(11, "CLI determinism", std::nullopt, [&] { return c11_determinism(tmp / "cli"); });

    std::error_code ec;
    fs::remove_all(tmp, ec);
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
