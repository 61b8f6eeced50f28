#include "tempsteer/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tempsteer::scenarios {

ModelConfig substrate_config(std::uint64_t seed) {
    ModelConfig c;
    c.n_layers     = 4;
    c.n_heads      = 8;
    c.d_model      = 128;
    c.vocab_size   = 64;
    c.max_seq_len  = 64;
    c.frame_dim    = 8;
    c.media_tokens = 4;
    c.seed         = seed;
    return c;
}

CorpusOptions planted_corpus_options(std::size_t n, std::uint64_t seed) {
    CorpusOptions o;
    o.n                = n;
    o.seed             = seed;
    o.invariant_frames = {32, 320};
    o.variant_frames   = {64, 640};
    o.frame_noise      = 0.0;
    o.frame_align      = 32;
    o.align_chunks     = 4;
    return o;
}

double activation_std(const Model & model, const ModuleId & id, std::span<const PromptPair> pairs) {
    std::vector<std::vector<float>> vs(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) { vs[i] = forward_with_taps(model, pairs[i].normal).taps.at(id); });
    const std::size_t dim = vs.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto & v : vs) {
        for (std::size_t k = 0; k < dim; ++k) {
            mean[k] += v[k];
        }
    }
    for (auto & m : mean) {
        m /= static_cast<double>(vs.size());
    }
    double ss = 0.0;
    for (const auto & v : vs) {
        for (std::size_t k = 0; k < dim; ++k) {
            const double c = v[k] - mean[k];
            ss += c * c;
        }
    }
    return std::sqrt(ss / static_cast<double>(vs.size()));
}

std::vector<float> random_direction(std::size_t dim, double norm, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (auto & x : v) {
        x = rng.normal();
        n2 += x * x;
    }
    const double s = norm / std::sqrt(n2);
    std::vector<float> out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        out[k] = static_cast<float>(v[k] * s);
    }
    return out;
}

namespace {

std::vector<float> params_of(const Model & m) {
    return {m.parameters().begin(), m.parameters().end()};
}

ProbeOptions probe_options(std::uint64_t seed) {
    ProbeOptions p;
    p.seed = derive_seed(seed, "probe-split");
    return p;
}

json report_json(const ProbeReport & r) {
    json rows = json::array();
    for (const auto & row : r.rows) {
        rows.push_back({{"module", row.module.str()}, {"accuracy", row.accuracy}});
    }
    return rows;
}

json summary_json(const ProbeReport & r) {
    json out = json::array();
    for (const auto & s : layerwise_summary(r)) {
        out.push_back({{"layer", s.layer}, {"mean", s.mean}, {"min", s.min}, {"max", s.max}});
    }
    return out;
}

Corpus subset(const Corpus & c, TemporalClass cls) {
    Corpus out;
    for (const auto & s : c) {
        if (s.truth() == cls) {
            out.push_back(s);
        }
    }
    return out;
}

Benchmark bench_subset(const Benchmark & b, TemporalClass cls, const std::string & name) {
    Benchmark out = b;
    out.name = name;
    out.items.clear();
    for (const auto & it : b.items) {
        if (it.temporal == cls) {
            out.items.push_back(it);
        }
    }
    return out;
}

json calibration_json(const Calibration & c) {
    return {{"scale", static_cast<double>(c.scale)}, {"flip_rate", c.flip_rate}, {"evaluations", c.evaluations}};
}

} // namespace

json probe_recovery(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const Corpus corpus   = generate_corpus(planted_corpus_options(200, derive_seed(seed, "corpus")));
    const auto pairs      = make_pairs(corpus, kDefaultDownsampleRate);
    const ModuleId target = ModuleId::head_of(2, 5);

    const double sd   = activation_std(base, target, pairs);
    const auto delta  = random_direction(base.layout().dim(target), 5.0 * sd, derive_seed(seed, "delta"));
    const Model model = Model::from_parts(cfg, params_of(base), {PlantSpec{target, delta}});

    const auto acts   = collect_pairs(model, pairs);
    const auto heads  = probe_all(acts, ModuleKind::Head, probe_options(seed));
    const auto layers = probe_all(acts, ModuleKind::Layer, probe_options(seed));
    const auto mean   = mean_offset(acts, target);

    double competitor = 0.0;
    for (const auto & r : heads.rows) {
        if (r.module != target && r.module.layer <= target.layer) {
            competitor = std::max(competitor, r.accuracy);
        }
    }
    double max_err = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) {
        max_err = std::max(max_err, std::abs(static_cast<double>(mean[k]) + delta[k]));
    }
    return {{"target", target.str()},
            {"pairs", pairs.size()},
            {"activation_std", sd},
            {"delta_norm", l2_norm(delta)},
            {"target_accuracy", heads.accuracy_of(target)},
            {"max_competitor_accuracy", competitor},
            {"mean_offset_cosine", cosine(mean, delta)},
            {"mean_offset_max_error", max_err},
            {"head_summary", summary_json(heads)},
            {"layer_accuracies", report_json(layers)},
            {"heads", report_json(heads)}};
}

json layer_plant(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const Corpus corpus   = generate_corpus(planted_corpus_options(200, derive_seed(seed, "corpus")));
    const auto pairs      = make_pairs(corpus, kDefaultDownsampleRate);
    const ModuleId target = ModuleId::layer_of(1);

    const double sd   = activation_std(base, target, pairs);
    const auto delta  = random_direction(base.layout().dim(target), 5.0 * sd, derive_seed(seed, "delta"));
    const Model model = Model::from_parts(cfg, params_of(base), {PlantSpec{target, delta}});
    const auto acts   = collect_pairs(model, pairs);
    const auto heads  = probe_all(acts, ModuleKind::Head, probe_options(seed));
    const auto layers = probe_all(acts, ModuleKind::Layer, probe_options(seed));

    double max_spread = 0.0;
    for (const auto & s : layerwise_summary(heads)) {
        max_spread = std::max(max_spread, s.max - s.min);
    }
    return {{"target", target.str()},
            {"activation_std", sd},
            {"max_within_layer_spread", max_spread},
            {"head_summary", summary_json(heads)},
            {"layer_accuracies", report_json(layers)}};
}

json cancellation(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const auto train      = make_pairs(generate_corpus(planted_corpus_options(200, derive_seed(seed, "train"))));
    const auto test       = make_pairs(generate_corpus(planted_corpus_options(100, derive_seed(seed, "test"))));
    const ModuleId target = ModuleId::head_of(3, 2);

    const double sd   = activation_std(base, target, train);
    const auto delta  = random_direction(base.layout().dim(target), 5.0 * sd, derive_seed(seed, "delta"));
    const Model model = Model::from_parts(cfg, params_of(base), {PlantSpec{target, delta}});
    const auto acts   = collect_pairs(model, train);
    const SelectedModule sel[] = {{target, 1.0}};
    const SteeringBundle bundle = make_bundle(acts, sel, BundleOptions{1.0f});

    constexpr int kSteps = 4;
    const float alphas[] = {0.0f, 0.5f, 1.0f, 2.0f};
    struct PromptResult {
        double max_diff = 0.0;
        bool   same_tokens = false;
        bool   unsteered_same = false;
        double dist[4] = {0, 0, 0, 0};
    };
    std::vector<PromptResult> per(test.size());
    parallel_for(test.size(), [&](std::size_t i) {
        GenerationRequest clean;
        clean.prompt         = test[i].normal;
        clean.max_new_tokens = kSteps;
        clean.keep_logits    = true;
        const auto ref = generate(model, clean);

        GenerationRequest req = clean;
        req.prompt = test[i].halluc;
        req.bundle = &bundle;
        const auto out = generate(model, req);
        auto & r = per[i];
        r.same_tokens = out.tokens == ref.tokens;
        for (std::size_t s = 0; s < out.step_logits.size(); ++s) {
            for (std::size_t v = 0; v < out.step_logits[s].size(); ++v) {
                r.max_diff = std::max(r.max_diff, std::abs(static_cast<double>(out.step_logits[s][v]) - ref.step_logits[s][v]));
            }
        }
        GenerationRequest plain = clean;
        plain.prompt = test[i].halluc;
        r.unsteered_same = generate(model, plain).tokens == ref.tokens;

        for (int a = 0; a < 4; ++a) {
            GenerationRequest one = req;
            one.max_new_tokens = 1;
            one.alpha_override = alphas[a];
            const auto g = generate(model, one);
            double d2 = 0.0;
            for (std::size_t v = 0; v < g.step_logits[0].size(); ++v) {
                const double d = g.step_logits[0][v] - ref.step_logits[0][v];
                d2 += d * d;
            }
            r.dist[a] = std::sqrt(d2);
        }
    });

    double max_diff = 0.0;
    std::size_t same = 0, unsteered_same = 0;
    double dist[4] = {0, 0, 0, 0};
    for (const auto & r : per) {
        max_diff = std::max(max_diff, r.max_diff);
        same += r.same_tokens ? 1 : 0;
        unsteered_same += r.unsteered_same ? 1 : 0;
        for (int a = 0; a < 4; ++a) {
            dist[a] += r.dist[a];
        }
    }
    json curve = json::array();
    int best = 0;
    for (int a = 0; a < 4; ++a) {
        curve.push_back({{"alpha", static_cast<double>(alphas[a])}, {"mean_logit_distance", dist[a] / static_cast<double>(per.size())}});
        if (dist[a] < dist[best]) {
            best = a;
        }
    }
    return {{"target", target.str()},
            {"prompts", test.size()},
            {"steps", kSteps},
            {"delta_norm", l2_norm(delta)},
            {"max_logit_diff", max_diff},
            {"identical_outputs", same},
            {"unsteered_identical_outputs", unsteered_same},
            {"alpha_curve", curve},
            {"best_alpha", static_cast<double>(alphas[best])}};
}

json frame_sweep(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const ModuleId target = ModuleId::head_of(3, 6);
    const Corpus items    = generate_corpus(planted_corpus_options(120, derive_seed(seed, "bench")));
    const Benchmark bench = make_benchmark(base, items, BenchmarkOptions{"sweep", Scoring::ExactMatch, 4, 2});

    PlantSpec plant{target, random_direction(base.layout().dim(target), 1.0, derive_seed(seed, "delta"))};
    plant.rate_scaled = true;
    const Calibration cal = calibrate_plants(base, {plant}, bench);
    const Model model     = Model::from_parts(cfg, params_of(base), scale_plants({plant}, cal.scale));

    const int rates[] = {1, 2, 4, 8};
    const auto sweep  = frame_reduction_sweep(model, bench, rates);

    const auto train = make_pairs(generate_corpus(planted_corpus_options(200, derive_seed(seed, "train"))));
    const auto acts  = collect_pairs(model, train);
    const SteeringBundle bundle = steering_bundle_for(acts, ModuleKind::Head, 1, 1.0f, probe_options(seed));
    const double steered   = evaluate(model, bench, steered_by(&bundle)).overall;
    const double unsteered = evaluate(model, bench).overall;

    json points = json::array();
    for (const auto & p : sweep) {
        points.push_back({{"rate", p.rate}, {"accuracy", p.report.overall}, {"skipped", p.report.skipped}});
    }
    return {{"target", target.str()},
            {"items", bench.items.size()},
            {"calibration", calibration_json(cal)},
            {"sweep", points},
            {"unsteered_rate4", unsteered},
            {"steered_rate4", steered},
            {"bundle_module", bundle.entries.front().module.str()}};
}

json head_vs_layer(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const int last        = cfg.n_layers - 1;
    std::vector<PlantSpec> plants;
    for (int h = 0; h < cfg.n_heads; ++h) {
        const ModuleId id = ModuleId::head_of(last, h);
        plants.push_back({id, random_direction(base.layout().dim(id), 1.0, derive_seed(seed, "delta/" + id.str()))});
    }
    const Corpus items    = generate_corpus(planted_corpus_options(120, derive_seed(seed, "bench")));
    const Benchmark bench = make_benchmark(base, items, BenchmarkOptions{"layer-planted", Scoring::ExactMatch, 4, 2});
    const Calibration cal = calibrate_plants(base, plants, bench);
    const Model model     = Model::from_parts(cfg, params_of(base), scale_plants(plants, cal.scale));

    const auto train = make_pairs(generate_corpus(planted_corpus_options(200, derive_seed(seed, "train"))));
    const auto acts  = collect_pairs(model, train);
    const auto k_head = static_cast<std::size_t>(cfg.n_heads);
    const ModeComparison mc = compare_modes(model, acts, k_head, 1, 1.0f, bench, probe_options(seed));
    json out = mc.to_json();
    out["k_head"]      = k_head;
    out["k_layer"]     = 1;
    out["items"]       = bench.items.size();
    out["calibration"] = calibration_json(cal);
    return out;
}

namespace {

CorpusOptions pipeline_corpus_options(std::uint64_t seed) {
    CorpusOptions o;
    o.n                  = 2400;
    o.seed               = seed;
    o.duplicate_fraction = 0.02;
    o.flagged_fraction   = 0.02;
    o.missing_fraction   = 0.01;
    return o;
}

double mean_frames(const Corpus & c) {
    double s = 0.0;
    for (const auto & x : c) {
        s += static_cast<double>(x.frame_count());
    }
    return c.empty() ? 0.0 : s / static_cast<double>(c.size());
}

} // namespace

json pipeline(std::uint64_t seed) {
    const Corpus corpus = generate_corpus(pipeline_corpus_options(seed));
    PipelineConfig cfg;
    cfg.seed = seed;
    const SyntheticJudge judge;
    const PipelineResult res = run_pipeline(corpus, cfg, judge);
    const auto & f = res.filtered;

    std::size_t max_a_frames = 0;
    double min_conf = 1.0;
    for (const auto * set : {&f.d_a_f, &f.d_t_f}) {
        for (const auto & s : *set) {
            min_conf = std::min(min_conf, judge.judge(s).confidence);
        }
    }
    for (const auto & s : f.d_a_f) {
        max_a_frames = std::max(max_a_frames, s.frame_count());
    }
    std::unordered_set<std::string> t_ids, a_ids;
    for (const auto & s : f.d_t_f) {
        t_ids.insert(s.id);
    }
    for (const auto & s : f.d_a_f) {
        a_ids.insert(s.id);
    }
    std::size_t variant_in_a_pool = 0, merged = 0, overlap = 0;
    for (const auto & s : res.pools.d_a_pool) {
        if (judge.judge(s).klass == TemporalClass::Variant) {
            ++variant_in_a_pool;
            merged += t_ids.count(s.id);
        }
    }
    for (const auto & id : a_ids) {
        overlap += t_ids.count(id);
    }
    return {{"corpus_size", corpus.size()},
            {"cleaned_size", res.cleaned.size()},
            {"d_t_pool_size", res.pools.d_t_pool.size()},
            {"d_a_pool_size", res.pools.d_a_pool.size()},
            {"frame_threshold", cfg.frame_threshold},
            {"tau", cfg.tau},
            {"judge", judge.name()},
            {"stats", pipeline_stats(f.d_a_f, f.d_t_f)},
            {"max_frames_d_a_f", max_a_frames},
            {"min_confidence", min_conf},
            {"variant_judged_in_d_a_pool", variant_in_a_pool},
            {"variant_judged_merged", merged},
            {"overlap", overlap},
            {"mean_frames_d_a_f", mean_frames(f.d_a_f)},
            {"mean_frames_d_t_f", mean_frames(f.d_t_f)},
            {"d_a_f_fingerprint", corpus_fingerprint(f.d_a_f)},
            {"d_t_f_fingerprint", corpus_fingerprint(f.d_t_f)}};
}

json two_class(std::uint64_t seed) {
    const ModelConfig cfg = substrate_config(seed);
    const Model base      = Model::build(cfg);
    const int last        = cfg.n_layers - 1;
    const std::vector<PlantSpec> plants = {
        {ModuleId::head_of(last, 1), random_direction(base.layout().d_head(), 1.0, derive_seed(seed, "delta/shared")), PlantTrigger::DownsampledMedia},
        {ModuleId::head_of(last, 3), random_direction(base.layout().d_head(), 1.0, derive_seed(seed, "delta/invariant")), PlantTrigger::DownsampledInvariant},
        {ModuleId::head_of(last, 5), random_direction(base.layout().d_head(), 1.0, derive_seed(seed, "delta/variant")), PlantTrigger::DownsampledVariant},
    };
    const Corpus items    = generate_corpus(planted_corpus_options(160, derive_seed(seed, "bench")));
    const Benchmark bench = make_benchmark(base, items, BenchmarkOptions{"two-class", Scoring::ExactMatch, 4, 2});
    const Calibration cal = calibrate_plants(base, plants, bench);
    const auto model = std::make_shared<const Model>(Model::from_parts(cfg, params_of(base), scale_plants(plants, cal.scale)));

    // router on the pipeline output
    const Corpus corpus = generate_corpus(pipeline_corpus_options(3));
    PipelineConfig pcfg;
    pcfg.seed = 3;
    const SyntheticJudge judge;
    const PipelineResult pres = run_pipeline(corpus, pcfg, judge);
    RouterConfig rcfg;
    rcfg.seed = derive_seed(seed, "router");
    const std::uint32_t backbone_before = model->backbone_checksum();
    const Router router = train_router(pres.filtered.d_a_f, pres.filtered.d_t_f, model, rcfg);
    const std::uint32_t backbone_after = model->backbone_checksum();

    CorpusOptions singles_opts;
    singles_opts.n                = 100;
    singles_opts.seed             = derive_seed(seed, "held-out/singles");
    singles_opts.variant_fraction = 0.0;
    CorpusOptions multis_opts = singles_opts;
    multis_opts.seed             = derive_seed(seed, "held-out/multis");
    multis_opts.variant_fraction = 1.0;
    multis_opts.min_segments     = 3;
    multis_opts.max_segments     = 3;
    const auto singles = route_eval(router, generate_corpus(singles_opts));
    const auto multis  = route_eval(router, generate_corpus(multis_opts));
    const auto bench_routing = [&] {
        Corpus c;
        for (const auto & it : bench.items) {
            CorpusSample s;
            s.id             = it.id;
            s.video          = it.prompt.media;
            s.question       = it.prompt.question;
            s.scene_segments = it.prompt.media.scene_segments;
            c.push_back(std::move(s));
        }
        return route_eval(router, c);
    }();

    // class-specific steering bundles
    const Corpus train = generate_corpus(planted_corpus_options(200, derive_seed(seed, "train")));
    const auto acts_a  = collect_pairs(*model, make_pairs(subset(train, TemporalClass::Invariant)));
    const auto acts_t  = collect_pairs(*model, make_pairs(subset(train, TemporalClass::Variant)));
    constexpr std::size_t kK = 3;
    const ProbeOptions popts = probe_options(seed);
    const SteeringBundle b_a = steering_bundle_for(acts_a, ModuleKind::Head, kK, 1.0f, popts, false, TemporalClass::Invariant);
    const SteeringBundle b_t = steering_bundle_for(acts_t, ModuleKind::Head, kK, 1.0f, popts, false, TemporalClass::Variant);

    EvalSteering routed;
    routed.router = &router;
    routed.routed = {&b_a, &b_t};
    const double acc_unsteered = evaluate(*model, bench).overall;
    const double acc_a         = evaluate(*model, bench, steered_by(&b_a)).overall;
    const double acc_t         = evaluate(*model, bench, steered_by(&b_t)).overall;
    const double acc_routed    = evaluate(*model, bench, routed).overall;

    const Benchmark half_a = bench_subset(bench, TemporalClass::Invariant, "two-class/invariant");
    const Benchmark half_t = bench_subset(bench, TemporalClass::Variant, "two-class/variant");
    const ReuseResult reuse = cross_reuse_experiment(
        *model, {{TemporalClass::Invariant, &acts_a}, {TemporalClass::Variant, &acts_t}},
        {{TemporalClass::Invariant, &half_a}, {TemporalClass::Variant, &half_t}}, kK, 1.0f, popts);
    const MixedReport mixed = mixed_dataset_experiment(*model, acts_a, acts_t, half_a, half_t, kK, 1.0f, popts);

    json bundles = json::object();
    for (const auto * b : {&b_a, &b_t}) {
        json mods = json::array();
        for (const auto & e : b->entries) {
            mods.push_back(e.module.str());
        }
        bundles[to_string(b->temporal_class)] = mods;
    }
    return {{"calibration", calibration_json(cal)},
            {"router",
             {{"config", router.config.to_json()},
              {"d_a_f", pres.filtered.d_a_f.size()},
              {"d_t_f", pres.filtered.d_t_f.size()},
              {"train_n", router.train_n},
              {"val_n", router.val_n},
              {"val_accuracy", router.val_accuracy},
              {"best_epoch", router.best_epoch},
              {"backbone_checksum_before", hex32(backbone_before)},
              {"backbone_checksum_after", hex32(backbone_after)},
              {"held_out_singles_invariant", static_cast<double>(singles.counts[0][0]) / static_cast<double>(singles.total())},
              {"held_out_multis_variant", static_cast<double>(multis.counts[1][1]) / static_cast<double>(multis.total())},
              {"benchmark_routing", bench_routing.to_json()}}},
            {"bundles", bundles},
            {"items", bench.items.size()},
            {"unsteered", acc_unsteered},
            {"invariant_bundle", acc_a},
            {"variant_bundle", acc_t},
            {"routed", acc_routed},
            {"reuse", reuse.to_json()},
            {"mixed", mixed.to_json()}};
}

json grid(std::uint64_t seed) {
    ModelConfig cfg = substrate_config(seed);
    cfg.n_layers = 8;
    cfg.n_heads  = 32;
    const Model base      = Model::build(cfg);
    const ModuleId target = ModuleId::head_of(cfg.n_layers - 1, 3);
    constexpr double kPlantNorm = 16.0;
    const auto delta  = random_direction(base.layout().dim(target), kPlantNorm, derive_seed(seed, "delta"));
    const Model model = Model::from_parts(cfg, params_of(base), {PlantSpec{target, delta}});

    const Corpus items    = generate_corpus(planted_corpus_options(60, derive_seed(seed, "bench")));
    const Benchmark bench = make_benchmark(base, items, BenchmarkOptions{"grid", Scoring::ExactMatch, 4, 2});
    const auto acts = collect_pairs(model, make_pairs(generate_corpus(planted_corpus_options(64, derive_seed(seed, "train")))));

    // gain that cancels the plant along the stored unit direction
    auto unit = mean_offset(acts, target);
    const double n = l2_norm(unit);
    double proj = 0.0;
    for (std::size_t k = 0; k < unit.size(); ++k) {
        proj -= unit[k] / n * delta[k];
    }
    const GridSpace space = GridSpace::standard_space();
    float nearest = space.alphas.front();
    for (float a : space.alphas) {
        if (std::abs(a - proj) < std::abs(nearest - proj)) {
            nearest = a;
        }
    }

    GridOptions opts;
    opts.probe     = probe_options(seed);
    opts.normalize = true;
    const GridResult res = grid_search(model, acts, space, bench, opts);
    json out = res.to_json();
    out["target"]          = target.str();
    out["plant_norm"]      = kPlantNorm;
    out["cancel_alpha"]    = proj;
    out["nearest_alpha"]   = static_cast<double>(nearest);
    out["unsteered"]       = evaluate(model, bench).overall;
    out["items"]           = bench.items.size();
    return out;
}

json substrate(std::uint64_t seed) {
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads  = 4;
    cfg.d_model  = 32;
    json out     = json::object();
    for (std::uint64_t s : {seed, seed + 1}) {
        cfg.seed      = s;
        const Model m = Model::build(cfg);
        out["seed_" + std::to_string(s)] = {{"checksum", hex32(m.checksum())},
                                            {"backbone_checksum", hex32(m.backbone_checksum())},
                                            {"parameters", m.parameters().size()}};
    }
    return out;
}

const std::vector<Entry> & registry() {
    static const std::vector<Entry> entries = {
        {"probe_recovery", 11, probe_recovery}, {"layer_plant", 12, layer_plant},
        {"cancellation", 13, cancellation},     {"frame_sweep", 14, frame_sweep},
        {"head_vs_layer", 15, head_vs_layer},   {"pipeline", 3, pipeline},
        {"two_class", 17, two_class},           {"grid", 18, grid},
        {"substrate", 7, substrate},
    };
    return entries;
}

} // namespace tempsteer::scenarios
