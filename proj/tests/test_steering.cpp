#include "support.hpp"

using namespace tst;

namespace {

struct Setup {
    Model                   model;
    std::vector<PromptPair> pairs;
    PairedActivations       acts;
    SteeringBundle          bundle; // single head in layer 1
};

Setup setup() {
    const ModuleId target = ModuleId::head_of(1, 3);
    Model m    = Model::build_planted(small_config(), {PlantSpec{target, scenarios::random_direction(8, 4.0, 8)}});
    auto pairs = make_pairs(small_corpus(16, 41));
    auto acts  = collect_pairs(m, pairs);
    const SelectedModule sel[] = {{target, 1.0}};
    auto bundle = make_bundle(acts, sel, BundleOptions{});
    return {std::move(m), std::move(pairs), std::move(acts), std::move(bundle)};
}

GenerationResult run(const Model & m, const Prompt & p, const SteeringBundle * b, std::optional<float> alpha = {}) {
    GenerationRequest r;
    r.prompt         = p;
    r.max_new_tokens = 3;
    r.bundle         = b;
    r.alpha_override = alpha;
    r.keep_logits    = true;
    return generate(m, r);
}

// Taps at the last prompt position with an optional injection.
TapSet taps_with(const Model & m, const Prompt & p, const Intervention * iv) {
    const EncodedPrompt enc = encode_prompt(m, p.media, p.question);
    TapSet taps;
    RunOptions o;
    o.taps  = &taps;
    o.steer = iv;
    run_model(m, enc, o);
    return taps;
}

} // namespace

TEST_SUITE("steering") {

TEST_CASE("alpha 0 and the empty bundle match unsteered decoding") {
    const Setup s = setup();
    const Prompt & p = s.pairs[0].halluc;
    const auto plain = run(s.model, p, nullptr);
    const auto zero  = run(s.model, p, &s.bundle, 0.0f);
    CHECK(zero.tokens == plain.tokens);
    CHECK(zero.step_logits == plain.step_logits);
    SteeringBundle empty;
    const auto e = run(s.model, p, &empty);
    CHECK(e.tokens == plain.tokens);
    CHECK(e.step_logits == plain.step_logits);
}

TEST_CASE("single-head bundle cancels the plant within 1e-4") {
    const Setup s = setup();
    for (std::size_t i = 0; i < 4; ++i) {
        const auto clean = run(s.model, s.pairs[i].normal, nullptr);
        const auto fixed = run(s.model, s.pairs[i].halluc, &s.bundle);
        CHECK(fixed.tokens == clean.tokens);
        for (std::size_t t = 0; t < clean.step_logits.size(); ++t) {
            for (std::size_t v = 0; v < clean.step_logits[t].size(); ++v) {
                CHECK(std::abs(fixed.step_logits[t][v] - clean.step_logits[t][v]) < 1e-4);
            }
        }
    }
}

TEST_CASE("injection is local and additive at the tap") {
    const Setup s = setup();
    const Prompt & p = s.pairs[1].halluc;
    const EncodedPrompt enc = encode_prompt(s.model, p.media, p.question);
    const float alpha = 1.5f;
    const Intervention iv = make_intervention(s.model, s.bundle, alpha, enc.x.rows - 1);
    const TapSet without  = taps_with(s.model, p, nullptr);
    const TapSet with     = taps_with(s.model, p, &iv);
    const ModuleId target = s.bundle.entries[0].module;
    for (std::size_t i = 0; i < without.size(); ++i) {
        const ModuleId id = without.layout.id(i);
        if (id.layer < target.layer) {
            CHECK_MESSAGE(without.values[i] == with.values[i], id.str());
        }
    }
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(with.at(target)[k] - without.at(target)[k] ==
              doctest::Approx(alpha * s.bundle.entries[0].offset[k]).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("greedy decoding is deterministic") {
    const Setup s = setup();
    CHECK(run(s.model, s.pairs[2].halluc, &s.bundle).tokens == run(s.model, s.pairs[2].halluc, &s.bundle).tokens);
}

TEST_CASE("argmax tie rule and margin") {
    float margin = 0;
    const std::vector<float> l = {1.0f, 3.0f, 3.0f, 2.0f};
    CHECK(argmax_token(l, &margin) == 1);
    CHECK(margin == 0.0f);
}

TEST_CASE("bundle from a different model shape is rejected") {
    const Setup s = setup();
    ModelConfig other = small_config();
    other.n_heads     = 2;
    const Model m2    = Model::build(other);
    GenerationRequest r;
    r.prompt = s.pairs[0].halluc;
    r.bundle = &s.bundle;
    CHECK(error_kind_of([&] { generate(m2, r); }) == ErrorKind::BundleIncompatible);
}

} // TEST_SUITE

TEST_SUITE("router") {

TEST_CASE("default hyperparameters and schedule") {
    const RouterConfig c;
    CHECK(c.train_per_class == 400);
    CHECK(c.learning_rate == 1e-5);
    CHECK(c.batch_size == 8);
    CHECK(c.epochs == 5);
    CHECK(c.warmup_steps == 10);
    CHECK(c.schedule == "cosine");
    CHECK(scheduled_lr(c, 0, 100) == doctest::Approx(1e-6));
    CHECK(scheduled_lr(c, 9, 100) == doctest::Approx(1e-5));
    CHECK(scheduled_lr(c, 10, 100) == doctest::Approx(1e-5));
    CHECK(scheduled_lr(c, 55, 100) == doctest::Approx(0.5e-5));
    CHECK(RouterConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("constant-class routing equals generate with that class's bundle") {
    const Setup s = setup();
    SteeringBundle inv = s.bundle;
    SteeringBundle var = s.bundle;
    var.alpha = 0.5f;
    const RoutedBundles both{&inv, &var};
    GenerationRequest req;
    req.prompt         = s.pairs[3].halluc;
    req.max_new_tokens = 3;
    req.keep_logits    = true;
    for (TemporalClass c : {TemporalClass::Invariant, TemporalClass::Variant}) {
        const auto routed = route_and_generate(ConstantClassifier(c), both, s.model, req);
        GenerationRequest direct = req;
        direct.bundle = &both.for_class(c);
        const auto ref = generate(s.model, direct);
        CHECK(routed.routed == c);
        CHECK(routed.generation.tokens == ref.tokens);
        CHECK(routed.generation.step_logits == ref.step_logits);
    }
    SteeringBundle empty;
    const auto e = route_and_generate(ConstantClassifier(TemporalClass::Variant), RoutedBundles{&empty, &empty}, s.model, req);
    CHECK(e.generation.step_logits == generate(s.model, req).step_logits);

    const RoutedBundles missing{&inv, nullptr};
    CHECK(error_kind_of([&] { route_and_generate(ConstantClassifier(TemporalClass::Variant), missing, s.model, req); }) ==
          ErrorKind::Routing);
}

TEST_CASE("training leaves the backbone untouched and the checkpoint round-trips") {
    TempDir dir("router");
    auto model = std::make_shared<const Model>(Model::build(scenarios::substrate_config(4)));
    CorpusOptions o = scenarios::planted_corpus_options(120, 6);
    const Corpus c  = generate_corpus(o);
    Corpus a, t;
    for (const auto & s : c) {
        (s.truth() == TemporalClass::Variant ? t : a).push_back(s);
    }
    RouterConfig cfg;
    cfg.train_per_class = 40;
    cfg.learning_rate   = 1e-3;
    cfg.epochs          = 2;
    const auto before   = model->backbone_checksum();
    const auto full     = model->checksum();
    const Router r      = train_router(a, t, model, cfg);
    CHECK(model->backbone_checksum() == before);
    CHECK(model->checksum() == full);
    CHECK(r.history.size() == 2);
    CHECK(r.train_n == 80);

    const auto & s0 = c[0];
    CHECK(r.classify(s0.video, s0.question) == r.classify(s0.video, s0.question));

    save_router(r, dir / "r");
    const Router back = load_router(dir / "r", model);
    CHECK(back.head().w == r.head().w);
    CHECK(back.head().b == r.head().b);
    CHECK(back.val_accuracy == r.val_accuracy);
    save_router(back, dir / "r2");
    CHECK(slurp(dir / "r" / "head.bin") == slurp(dir / "r2" / "head.bin"));
    CHECK(slurp(dir / "r" / "manifest.json") == slurp(dir / "r2" / "manifest.json"));

    flip_byte(dir / "r" / "head.bin", 7);
    CHECK(error_kind_of([&] { load_router(dir / "r", model); }) == ErrorKind::Corrupt);
    auto other = std::make_shared<const Model>(Model::build(scenarios::substrate_config(5)));
    CHECK(error_kind_of([&] { load_router(dir / "r2", other); }) == ErrorKind::Input);
}

TEST_CASE("confusion counts") {
    const Corpus c = small_corpus(20, 8);
    const ConfusionCounts cc = route_eval(ConstantClassifier(TemporalClass::Invariant), c);
    CHECK(cc.total() == 20);
    CHECK(cc.counts[0][1] == 0);
    CHECK(cc.counts[1][1] == 0);
    CHECK(cc.accuracy() == doctest::Approx(static_cast<double>(cc.counts[0][0]) / 20.0));
}

} // TEST_SUITE
