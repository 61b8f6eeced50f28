#include "tempsteer/harness.hpp"

#include "tempsteer/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tempsteer {

const char * to_string(Scoring s) {
    return s == Scoring::ExactMatch ? "exact_match" : "choice_accuracy";
}

Scoring scoring_from_string(std::string_view s) {
    if (s == "exact_match") {
        return Scoring::ExactMatch;
    }
    if (s == "choice_accuracy") {
        return Scoring::ChoiceAccuracy;
    }
    fail(ErrorKind::Input, "unknown scoring rule '" + std::string(s) + "'");
}

std::string Benchmark::fingerprint() const {
    std::uint64_t h = fnv1a64(name + "/" + to_string(scoring) + "/" + std::to_string(downsample_rate));
    for (const auto & it : items) {
        h = fnv1a64(it.id + "|" + it.subtask + "|" + (it.temporal ? to_string(*it.temporal) : "-"), h);
        h = fnv1a64_floats(it.prompt.media.data, h);
        h = fnv1a64(std::to_string(it.prompt.media.downsample_rate) + "/" + std::to_string(it.prompt.media.scene_segments), h);
        for (Token t : it.prompt.question) {
            h = fnv1a64(std::to_string(t) + ",", h);
        }
        h = fnv1a64("=>", h);
        for (Token t : it.expected) {
            h = fnv1a64(std::to_string(t) + ",", h);
        }
    }
    return hex64(h);
}

void save_benchmark(const Benchmark & bench, const std::filesystem::path & dir) {
    std::filesystem::create_directories(dir);
    std::vector<float> media;
    std::string lines;
    for (const auto & it : bench.items) {
        const auto & m = it.prompt.media;
        io::json j;
        j["id"]       = it.id;
        j["subtask"]  = it.subtask;
        if (it.temporal) {
            j["temporal_class"] = to_string(*it.temporal);
        }
        j["question"] = it.prompt.question;
        j["answer"]   = it.expected;
        j["media"]    = {{"offset", media.size()},
                         {"frames", m.frame_count()},
                         {"frame_dim", m.frame_dim},
                         {"downsample_rate", m.downsample_rate},
                         {"scene_segments", m.scene_segments}};
        media.insert(media.end(), m.data.begin(), m.data.end());
        lines += j.dump() + "\n";
    }
    io::write_text(dir / "items.jsonl", lines);
    const std::uint32_t crc = io::write_f32_blob(dir / "media.bin", media);
    io::json manifest;
    manifest["schema_version"]  = io::kSchemaVersion;
    manifest["kind"]            = "benchmark";
    manifest["name"]            = bench.name;
    manifest["scoring"]         = to_string(bench.scoring);
    manifest["downsample_rate"] = bench.downsample_rate;
    manifest["count"]           = bench.items.size();
    manifest["media_floats"]    = media.size();
    manifest["media_checksum"]  = hex32(crc);
    manifest["fingerprint"]     = bench.fingerprint();
    io::write_json(dir / "manifest.json", manifest);
}

Benchmark load_benchmark(const std::filesystem::path & dir) {
    const io::json manifest = io::read_json(dir / "manifest.json");
    io::expect_schema(manifest, "benchmark", dir / "manifest.json");
    const auto crc   = static_cast<std::uint32_t>(std::stoul(manifest.at("media_checksum").get<std::string>(), nullptr, 16));
    const auto media = io::read_f32_blob(dir / "media.bin", manifest.at("media_floats").get<std::size_t>(), crc);
    Benchmark bench;
    bench.name            = manifest.at("name").get<std::string>();
    bench.scoring         = scoring_from_string(manifest.at("scoring").get<std::string>());
    bench.downsample_rate = manifest.at("downsample_rate").get<int>();

    std::istringstream in(io::read_text(dir / "items.jsonl"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            const io::json j = io::json::parse(line);
            BenchmarkItem it;
            it.id       = j.at("id").get<std::string>();
            it.subtask  = j.at("subtask").get<std::string>();
            if (j.contains("temporal_class")) {
                it.temporal = temporal_class_from_string(j.at("temporal_class").get<std::string>());
            }
            it.prompt.question = j.at("question").get<Tokens>();
            it.expected        = j.at("answer").get<Tokens>();
            it.prompt.answer   = it.expected;
            const auto & m     = j.at("media");
            const std::size_t off    = m.at("offset").get<std::size_t>();
            const std::size_t frames = m.at("frames").get<std::size_t>();
            const std::size_t fd     = m.at("frame_dim").get<std::size_t>();
            if (off + frames * fd > media.size()) {
                fail(ErrorKind::Corrupt, "media reference outside media.bin");
            }
            it.prompt.media.frame_dim       = fd;
            it.prompt.media.downsample_rate = m.at("downsample_rate").get<int>();
            it.prompt.media.scene_segments  = m.at("scene_segments").get<int>();
            it.prompt.media.data.assign(media.begin() + static_cast<std::ptrdiff_t>(off),
                                        media.begin() + static_cast<std::ptrdiff_t>(off + frames * fd));
            bench.items.push_back(std::move(it));
        } catch (const nlohmann::json::exception & e) {
            fail(ErrorKind::Corrupt, "items.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (bench.items.size() != manifest.at("count").get<std::size_t>()) {
        fail(ErrorKind::Corrupt, "benchmark item count disagrees with manifest");
    }
    return bench;
}

Benchmark make_benchmark(const Model & model, const Corpus & samples, const BenchmarkOptions & opts) {
    if (opts.answer_tokens < 1) {
        fail(ErrorKind::Config, "answer_tokens must be positive");
    }
    if (opts.scoring == Scoring::ChoiceAccuracy && opts.answer_tokens != 1) {
        fail(ErrorKind::Config, "choice scoring uses single-token answers");
    }
    Benchmark bench;
    bench.name            = opts.name;
    bench.scoring         = opts.scoring;
    bench.downsample_rate = opts.downsample_rate;
    bench.items.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto & s = samples[i];
        BenchmarkItem it;
        it.id                           = s.id;
        it.prompt.media                 = s.video;
        it.prompt.media.scene_segments  = s.scene_segments;
        it.prompt.question              = s.question;
        it.temporal                     = s.truth();
        it.subtask                      = to_string(s.truth());
        GenerationRequest req;
        req.prompt         = it.prompt;
        req.max_new_tokens = opts.answer_tokens;
        it.expected        = generate(model, req).tokens;
        it.prompt.answer   = it.expected;
        bench.items[i]     = std::move(it);
    });
    return bench;
}

std::string EvalSteering::describe() const {
    if (router) {
        return "routed";
    }
    if (bundle) {
        return bundle->entries.empty() ? "steered(empty)" : "steered";
    }
    return "unsteered";
}

nlohmann::ordered_json EvalReport::to_json() const {
    io::json subs = io::json::array();
    for (const auto & s : subtasks) {
        subs.push_back({{"subtask", s.subtask}, {"correct", s.correct}, {"total", s.total}, {"accuracy", s.accuracy}});
    }
    io::json j;
    j["overall_metric"] = "unweighted mean of subtask accuracies";
    j["benchmark"]      = benchmark;
    j["mode"]           = mode;
    j["rate"]           = rate;
    j["overall"]        = overall;
    j["subtasks"]       = subs;
    j["scored"]         = scored;
    j["errors"]         = errors;
    j["skipped"]        = skipped;
    j["issues"]         = issues;
    if (!routed.empty()) {
        j["routed"] = routed;
    }
    return j;
}

EvalReport evaluate(const Model & model, const Benchmark & bench, const EvalSteering & steering,
                    std::optional<int> rate_override) {
    const int rate = rate_override.value_or(bench.downsample_rate);
    if (rate < 1) {
        fail(ErrorKind::Input, "rate must be >= 1");
    }
    if (steering.bundle) {
        steering.bundle->check_compatible(model.layout());
    }

    enum class Outcome { Correct, Wrong, Error, Skipped };
    struct ItemResult {
        Outcome       outcome = Outcome::Skipped;
        std::string   note;
        TemporalClass routed  = TemporalClass::Unrouted;
    };
    std::vector<ItemResult> results(bench.items.size());

    parallel_for(bench.items.size(), [&](std::size_t i) {
        const auto & it = bench.items[i];
        auto & r = results[i];
        if (it.expected.empty() || (bench.scoring == Scoring::ChoiceAccuracy && it.expected.size() != 1)) {
            r = {Outcome::Error, "unscoreable expected answer"};
            return;
        }
        if (it.prompt.media.frame_count() < static_cast<std::size_t>(rate)) {
            r = {Outcome::Skipped, "has " + std::to_string(it.prompt.media.frame_count()) + " frames, fewer than rate " +
                                       std::to_string(rate)};
            return;
        }
        GenerationRequest req;
        req.prompt         = it.prompt;
        req.prompt.media   = downsample(it.prompt.media, rate);
        req.max_new_tokens = bench.scoring == Scoring::ChoiceAccuracy ? 1 : static_cast<int>(it.expected.size());
        req.bundle         = steering.bundle;
        try {
            Tokens out;
            if (steering.router) {
                auto rr  = route_and_generate(*steering.router, steering.routed, model, req);
                out      = std::move(rr.generation.tokens);
                r.routed = rr.routed;
            } else {
                out = generate(model, req).tokens;
            }
            const bool ok = bench.scoring == Scoring::ChoiceAccuracy ? out.front() == it.expected.front()
                                                                      : out == it.expected;
            r.outcome = ok ? Outcome::Correct : Outcome::Wrong;
        } catch (const Error & e) {
            if (e.kind() == ErrorKind::BundleIncompatible || e.kind() == ErrorKind::Routing) {
                throw;
            }
            r = {Outcome::Error, e.what()};
        }
    });

    EvalReport rep;
    rep.benchmark = bench.name;
    rep.mode      = steering.describe();
    rep.rate      = rate;
    std::map<std::string, SubtaskScore> by_tag;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto & r  = results[i];
        const auto & it = bench.items[i];
        auto & s = by_tag[it.subtask];
        s.subtask = it.subtask;
        switch (r.outcome) {
        case Outcome::Correct:
            ++s.correct;
            ++s.total;
            ++rep.scored;
            break;
        case Outcome::Wrong:
            ++s.total;
            ++rep.scored;
            break;
        case Outcome::Error:
            ++rep.errors;
            rep.issues.push_back(it.id + ": " + r.note);
            break;
        case Outcome::Skipped:
            ++rep.skipped;
            rep.issues.push_back(it.id + ": skipped, " + r.note);
            break;
        }
        if (steering.router && (r.outcome == Outcome::Correct || r.outcome == Outcome::Wrong)) {
            ++rep.routed[to_string(r.routed)];
        }
    }
    double sum = 0.0;
    std::size_t n_tags = 0;
    for (auto & [tag, s] : by_tag) {
        if (s.total > 0) {
            s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.total);
            sum += s.accuracy;
            ++n_tags;
        }
        rep.subtasks.push_back(s);
    }
    rep.overall = n_tags ? sum / static_cast<double>(n_tags) : 0.0;
    return rep;
}

std::vector<SweepPoint> frame_reduction_sweep(const Model & model, const Benchmark & bench, std::span<const int> rates,
                                              const EvalSteering & steering) {
    std::vector<SweepPoint> out;
    for (int r : rates) {
        if (r < 1) {
            fail(ErrorKind::Input, "sweep rates must be >= 1");
        }
        out.push_back({r, evaluate(model, bench, steering, r)});
    }
    return out;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
    std::string out = "rate,accuracy,scored,skipped\n";
    char buf[96];
    for (const auto & p : points) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%zu,%zu\n", p.rate, p.report.overall, p.report.scored, p.report.skipped);
        out += buf;
    }
    return out;
}

nlohmann::ordered_json sweep_to_json(std::span<const SweepPoint> points) {
    io::json arr = io::json::array();
    for (const auto & p : points) {
        arr.push_back({{"rate", p.rate}, {"accuracy", p.report.overall}, {"report", p.report.to_json()}});
    }
    return arr;
}

SteeringBundle steering_bundle_for(const PairedActivations & acts, ModuleKind kind, std::size_t k, float alpha,
                                   const ProbeOptions & probe, bool normalize, TemporalClass cls) {
    const ProbeReport report = probe_all(acts, kind, probe);
    const auto selected = top_k(report, k);
    return make_bundle(acts, selected, BundleOptions{alpha, cls, normalize});
}

nlohmann::ordered_json ModeComparison::to_json() const {
    return {{"clean", clean},
            {"unsteered", unsteered},
            {"head", head},
            {"layer", layer},
            {"gap", gap()},
            {"head_recovery", clean > 0 ? head / clean : 0.0},
            {"layer_recovery", clean > 0 ? layer / clean : 0.0}};
}

ModeComparison compare_modes(const Model & model, const PairedActivations & acts, std::size_t k_head,
                             std::size_t k_layer, float alpha, const Benchmark & bench, const ProbeOptions & probe) {
    const SteeringBundle hb = steering_bundle_for(acts, ModuleKind::Head, k_head, alpha, probe);
    const SteeringBundle lb = steering_bundle_for(acts, ModuleKind::Layer, k_layer, alpha, probe);
    ModeComparison mc;
    mc.clean     = evaluate(model, bench, {}, 1).overall;
    mc.unsteered = evaluate(model, bench).overall;
    mc.head      = evaluate(model, bench, steered_by(&hb)).overall;
    mc.layer     = evaluate(model, bench, steered_by(&lb)).overall;
    return mc;
}

GridSpace GridSpace::standard_space() {
    return {{32, 64, 128, 256}, {8.0f, 16.0f, 24.0f, 32.0f}};
}

nlohmann::ordered_json GridResult::to_json() const {
    io::json arr = io::json::array();
    for (const auto & r : rows) {
        io::json j = {{"k", r.k}, {"alpha", static_cast<double>(r.alpha)}, {"skipped", r.skipped}};
        if (r.skipped) {
            j["reason"] = r.reason;
        } else {
            j["overall"] = r.overall;
        }
        arr.push_back(j);
    }
    io::json out;
    out["configs"] = rows.size();
    out["rows"]    = arr;
    out["ranking"] = ranking;
    if (best) {
        out["best"] = {{"k", rows[*best].k}, {"alpha", static_cast<double>(rows[*best].alpha)},
                       {"overall", rows[*best].overall}};
    } else {
        out["best"] = nullptr;
    }
    return out;
}

std::string GridResult::to_csv() const {
    std::string out = "k,alpha,skipped,overall,reason\n";
    char buf[128];
    for (const auto & r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%d,%.17g,", r.k, static_cast<double>(r.alpha), r.skipped ? 1 : 0,
                      r.skipped ? 0.0 : r.overall);
        out += buf + r.reason + "\n";
    }
    return out;
}

GridResult grid_search(const Model & model, const PairedActivations & acts, const GridSpace & space,
                       const Benchmark & bench, const GridOptions & opts) {
    if (space.size() == 0) {
        fail(ErrorKind::Config, "grid space is empty");
    }
    const ProbeReport report = probe_all(acts, opts.kind, opts.probe);
    const std::size_t n_modules = report.rows.size();

    GridResult res;
    for (std::size_t k : space.ks) {
        for (float a : space.alphas) {
            GridRow row;
            row.k     = k;
            row.alpha = a;
            if (k > n_modules) {
                row.skipped = true;
                row.reason  = "K=" + std::to_string(k) + " exceeds " + std::to_string(n_modules) + " modules";
            } else if (!(a >= 0.0f)) {
                row.skipped = true;
                row.reason  = "negative alpha";
            } else {
                const auto selected = top_k(report, k);
                const SteeringBundle b = make_bundle(acts, selected, BundleOptions{a, TemporalClass::Unrouted, opts.normalize});
                row.overall = evaluate(model, bench, steered_by(&b)).overall;
            }
            res.rows.push_back(row);
        }
    }
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        if (!res.rows[i].skipped) {
            res.ranking.push_back(i);
        }
    }
    std::stable_sort(res.ranking.begin(), res.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return res.rows[a].overall > res.rows[b].overall; });
    if (!res.ranking.empty()) {
        res.best = res.ranking.front();
    }
    return res;
}

nlohmann::ordered_json ReuseResult::to_json() const {
    io::json arr = io::json::array();
    for (const auto & c : cells) {
        arr.push_back({{"selection", to_string(c.selection)},
                       {"offsets", to_string(c.offsets)},
                       {"target", to_string(c.target)},
                       {"overall", c.overall}});
    }
    return {{"cells", arr}};
}

ReuseResult cross_reuse_experiment(const Model & model, const std::map<TemporalClass, const PairedActivations *> & acts,
                                   const std::map<TemporalClass, const Benchmark *> & benchmarks, std::size_t k,
                                   float alpha, const ProbeOptions & probe) {
    if (acts.size() < 2) {
        fail(ErrorKind::Input, "head reuse needs activation sets from at least two temporal classes");
    }
    std::map<TemporalClass, std::vector<SelectedModule>> selections;
    for (const auto & [cls, a] : acts) {
        selections[cls] = top_k(probe_all(*a, ModuleKind::Head, probe), k);
    }
    ReuseResult res;
    for (const auto & [target, bench] : benchmarks) {
        for (const auto & [sel_cls, selected] : selections) {
            for (const auto & [off_cls, a] : acts) {
                const SteeringBundle b = make_bundle(*a, selected, BundleOptions{alpha, off_cls, false});
                res.cells.push_back({sel_cls, off_cls, target, evaluate(model, *bench, steered_by(&b)).overall});
            }
        }
    }
    return res;
}

nlohmann::ordered_json MixedReport::to_json() const {
    io::json arr = io::json::array();
    for (const auto & h : halves) {
        arr.push_back({{"half", h.name},
                       {"unsteered", h.unsteered},
                       {"invariant_bundle", h.invariant},
                       {"variant_bundle", h.variant},
                       {"pooled_bundle", h.pooled},
                       {"best_per_class", h.best_per_class()}});
    }
    return {{"halves", arr}};
}

MixedReport mixed_dataset_experiment(const Model & model, const PairedActivations & acts_a,
                                     const PairedActivations & acts_t, const Benchmark & bench_a,
                                     const Benchmark & bench_t, std::size_t k, float alpha, const ProbeOptions & probe) {
    const PairedActivations pooled = concat(acts_a, acts_t);
    const SteeringBundle ba = steering_bundle_for(acts_a, ModuleKind::Head, k, alpha, probe, false, TemporalClass::Invariant);
    const SteeringBundle bt = steering_bundle_for(acts_t, ModuleKind::Head, k, alpha, probe, false, TemporalClass::Variant);
    const SteeringBundle bp = steering_bundle_for(pooled, ModuleKind::Head, k, alpha, probe);
    MixedReport rep;
    for (const Benchmark * bench : {&bench_a, &bench_t}) {
        MixedHalf h;
        h.name      = bench->name;
        h.unsteered = evaluate(model, *bench).overall;
        h.invariant = evaluate(model, *bench, steered_by(&ba)).overall;
        h.variant   = evaluate(model, *bench, steered_by(&bt)).overall;
        h.pooled    = evaluate(model, *bench, steered_by(&bp)).overall;
        rep.halves.push_back(h);
    }
    return rep;
}

std::vector<PlantSpec> scale_plants(std::vector<PlantSpec> plants, float scale) {
    for (auto & p : plants) {
        for (auto & v : p.delta) {
            v *= scale;
        }
    }
    return plants;
}

Calibration calibrate_plants(const Model & base, const std::vector<PlantSpec> & plants, const Benchmark & bench,
                             double lo, double hi) {
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
        fail(ErrorKind::Config, "calibration window must satisfy 0 <= lo < hi <= 1");
    }
    const std::vector<float> params(base.parameters().begin(), base.parameters().end());
    Calibration cal;
    auto flips = [&](float s) {
        ++cal.evaluations;
        const Model m = Model::from_parts(base.config(), params, scale_plants(plants, s));
        return 1.0 - evaluate(m, bench).overall;
    };
    const double target = 0.5 * (lo + hi);
    double best_gap = 2.0;
    auto consider = [&](float s, double f) {
        const double gap = std::abs(f - target);
        if (gap < best_gap) {
            best_gap      = gap;
            cal.scale     = s;
            cal.flip_rate = f;
        }
        return f >= lo && f <= hi;
    };

    float s = 1.0f;
    double f = flips(s);
    if (consider(s, f)) {
        return cal;
    }
    float s_lo = 0.0f, s_hi = 0.0f;
    if (f < lo) {
        s_lo = s;
        for (int i = 0; i < 24; ++i) {
            s *= 2.0f;
            f = flips(s);
            if (consider(s, f)) {
                return cal;
            }
            if (f > hi) {
                s_hi = s;
                break;
            }
            s_lo = s;
        }
    } else {
        s_hi = s;
        for (int i = 0; i < 24; ++i) {
            s *= 0.5f;
            f = flips(s);
            if (consider(s, f)) {
                return cal;
            }
            if (f < lo) {
                s_lo = s;
                break;
            }
            s_hi = s;
        }
    }
    if (s_lo <= 0.0f || s_hi <= 0.0f) {
        return cal;
    }
    for (int i = 0; i < 24; ++i) {
        const float mid = std::sqrt(s_lo * s_hi);
        f = flips(mid);
        if (consider(mid, f)) {
            return cal;
        }
        (f < lo ? s_lo : s_hi) = mid;
    }
    return cal;
}

} // namespace tempsteer
