#include "support.hpp"

using namespace tst;

TEST_SUITE("model") {

TEST_CASE("same config and seed give identical parameters") {
    const Model a = Model::build(small_config(7));
    const Model b = Model::build(small_config(7));
    CHECK(a.checksum() == b.checksum());
    CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin(), b.parameters().end()));
}

TEST_CASE("seed 7 and seed 8 checksums match the frozen fixture") {
    const auto fx = io::read_json(fs::path(TEMPSTEER_FIXTURES) / "substrate.json");
    const Model a = Model::build(small_config(7));
    const Model b = Model::build(small_config(8));
    CHECK(a.checksum() != b.checksum());
    CHECK(hex32(a.checksum()) == fx["seed_7"]["checksum"].get<std::string>());
    CHECK(hex32(b.checksum()) == fx["seed_8"]["checksum"].get<std::string>());
}

TEST_CASE("d_model must divide into heads") {
    ModelConfig c = small_config();
    c.d_model = 30;
    try {
        Model::build(c);
        FAIL("expected a config error");
    } catch (const Error & e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()) == "d_model not divisible by n_heads");
    }
}

TEST_CASE("taps: counts, dims, determinism and observation-only") {
    const Model m     = Model::build(small_config());
    const auto corpus = small_corpus(4, 1);
    const Prompt p    = make_pair(corpus[0]).normal;

    const ForwardResult r1 = forward_with_taps(m, p);
    const ForwardResult r2 = forward_with_taps(m, p);
    CHECK(r1.taps.size() == 10);
    CHECK(m.layout().count(ModuleKind::Head) == 8);
    CHECK(m.layout().count(ModuleKind::Layer) == 2);
    for (const auto & id : m.layout().modules(ModuleKind::Head)) {
        CHECK(r1.taps.at(id).size() == 8);
    }
    for (const auto & id : m.layout().modules(ModuleKind::Layer)) {
        CHECK(r1.taps.at(id).size() == 32);
    }
    CHECK(same_taps(r1.taps, r2.taps));
    const Matrix plain = forward(m, p);
    CHECK(plain.data == r1.logits.data);
}

TEST_CASE("overlong prompt is a length error") {
    const Model m = Model::build(small_config());
    Prompt p      = make_pair(small_corpus(1, 2)[0]).normal;
    p.question.assign(80, 1);
    CHECK(error_kind_of([&] { forward(m, p); }) == ErrorKind::Length);
}

TEST_CASE("downsample keeps frames 0, r, 2r, ...") {
    FrameSeq f;
    f.frame_dim = 1;
    for (int i = 0; i < 8; ++i) {
        f.data.push_back(static_cast<float>(i));
    }
    const FrameSeq d = downsample(f, 4);
    CHECK(d.data == std::vector<float>{0.0f, 4.0f});
    CHECK(d.downsample_rate == 4);
    CHECK(downsample(f, 1).data == f.data);
}

TEST_CASE("planted model: clean identity, exact delta at target, upstream untouched") {
    const ModelConfig cfg = small_config();
    const Model base      = Model::build(cfg);
    const ModuleId target = ModuleId::head_of(1, 2);
    const auto delta      = scenarios::random_direction(8, 3.0, 99);
    const Model planted   = Model::build_planted(cfg, {PlantSpec{target, delta}});

    const auto pair = make_pair(small_corpus(3, 4)[1]);
    CHECK(forward(base, pair.normal).data == forward(planted, pair.normal).data);

    const auto tb = forward_with_taps(base, pair.halluc).taps;
    const auto tp = forward_with_taps(planted, pair.halluc).taps;
    double err = 0.0;
    for (std::size_t k = 0; k < delta.size(); ++k) {
        err = std::max(err, std::abs(static_cast<double>(tp.at(target)[k]) - tb.at(target)[k] - delta[k]));
    }
    CHECK(err < 1e-6);
    for (std::size_t i = 0; i < tb.size(); ++i) {
        const ModuleId id = tb.layout.id(i);
        const bool upstream = id.layer < target.layer || (id.kind == ModuleKind::Head && id.layer == target.layer && id != target);
        if (upstream) {
            CHECK_MESSAGE(tb.values[i] == tp.values[i], id.str());
        }
    }
    CHECK(tb.at(ModuleId::layer_of(1)) != tp.at(ModuleId::layer_of(1)));
}

TEST_CASE("plant delta dim mismatch is a config error") {
    CHECK(error_kind_of([] {
              Model::build_planted(small_config(), {PlantSpec{ModuleId::head_of(0, 0), std::vector<float>(5, 1.0f)}});
          }) == ErrorKind::Config);
}

TEST_CASE("rate-scaled plant grows with log2(rate)") {
    PlantSpec p{ModuleId::head_of(0, 0), {1.0f}, PlantTrigger::DownsampledMedia, true};
    FrameSeq f;
    f.frame_dim = 1;
    f.data      = {0, 0, 0, 0};
    CHECK_FALSE(p.fires_on(f));
    f.downsample_rate = 2;
    CHECK(p.scale_for(f) == doctest::Approx(1.0));
    f.downsample_rate = 8;
    CHECK(p.scale_for(f) == doctest::Approx(3.0));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    TempDir dir("model");
    const Model m = Model::build_planted(small_config(), {PlantSpec{ModuleId::layer_of(0), std::vector<float>(32, 0.5f)}});
    save_model(m, dir / "a");
    const Model back = load_model(dir / "a");
    CHECK(back.fingerprint() == m.fingerprint());
    save_model(back, dir / "b");
    CHECK(slurp(dir / "a" / "params.bin") == slurp(dir / "b" / "params.bin"));
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
}

} // TEST_SUITE
