#include "support.hpp"

using namespace tst;

namespace {

struct Bench {
    Model             base;
    Model             planted;
    Benchmark         bench;
    PairedActivations acts;
};

const Bench & shared() {
    static const Bench b = [] {
        const ModelConfig cfg = small_config(3);
        Model base            = Model::build(cfg);
        const ModuleId target = ModuleId::head_of(1, 0);
        Model planted = Model::build_planted(cfg, {PlantSpec{target, scenarios::random_direction(8, 40.0, 12)}});
        Benchmark bench = make_benchmark(base, small_corpus(24, 51), BenchmarkOptions{});
        auto acts       = collect_pairs(planted, make_pairs(small_corpus(40, 52)));
        return Bench{std::move(base), std::move(planted), std::move(bench), std::move(acts)};
    }();
    return b;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("exact-match scoring: 3 of 4 correct") {
    const auto & s = shared();
    Benchmark b = s.bench;
    b.items.resize(4);
    for (auto & it : b.items) {
        it.subtask = "all";
    }
    b.items[2].expected[0] = (b.items[2].expected[0] + 1) % 64;
    const EvalReport r = evaluate(s.base, b, {}, 1);
    CHECK(r.overall == doctest::Approx(0.75));
    CHECK(r.scored == 4);
}

TEST_CASE("overall is the unweighted mean of subtasks; clean accuracy is 1") {
    const auto & s = shared();
    const EvalReport clean = evaluate(s.planted, s.bench, {}, 1);
    CHECK(clean.overall == 1.0);
    const EvalReport r = evaluate(s.planted, s.bench);
    double sum = 0.0;
    for (const auto & st : r.subtasks) {
        sum += st.accuracy;
    }
    CHECK(r.overall == doctest::Approx(sum / static_cast<double>(r.subtasks.size())));
    CHECK(r.to_json()["overall_metric"] == "unweighted mean of subtask accuracies");
}

TEST_CASE("empty bundle scores like no bundle; the matching bundle helps") {
    const auto & s = shared();
    SteeringBundle empty;
    const EvalReport a = evaluate(s.planted, s.bench);
    const EvalReport b = evaluate(s.planted, s.bench, steered_by(&empty));
    CHECK(a.overall == b.overall);
    const auto bundle = steering_bundle_for(s.acts, ModuleKind::Head, 1, 1.0f, ProbeOptions{});
    CHECK(evaluate(s.planted, s.bench, steered_by(&bundle)).overall >= a.overall);
}

TEST_CASE("sweep emits one point per rate") {
    const auto & s = shared();
    const int rates[] = {1, 2, 4, 8};
    const auto pts = frame_reduction_sweep(s.planted, s.bench, rates);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].report.overall == evaluate(s.planted, s.bench, {}, 1).overall);
    const std::string csv = sweep_to_csv(pts);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("items shorter than the rate are skipped and reported") {
    const auto & s = shared();
    Benchmark b = s.bench;
    b.items.resize(2);
    b.items[0].prompt.media.data.resize(b.items[0].prompt.media.frame_dim * 2);
    const EvalReport r = evaluate(s.planted, b, {}, 4);
    CHECK(r.skipped == 1);
    CHECK(r.issues.size() == 1);
}

TEST_CASE("grid: standard space size, singleton space, oversize K skipped") {
    CHECK(GridSpace::standard_space().ks == std::vector<std::size_t>{32, 64, 128, 256});
    CHECK(GridSpace::standard_space().alphas == std::vector<float>{8, 16, 24, 32});
    CHECK(GridSpace::standard_space().size() == 16);
    const auto & s = shared();
    const GridResult one = grid_search(s.planted, s.acts, GridSpace{{1}, {1.0f}}, s.bench, GridOptions{});
    CHECK(one.rows.size() == 1);
    CHECK(one.best == std::optional<std::size_t>(0));
    const GridResult big = grid_search(s.planted, s.acts, GridSpace{{2, 9}, {1.0f}}, s.bench, GridOptions{});
    CHECK(big.rows.size() == 2);
    CHECK(big.rows[1].skipped);
    CHECK_FALSE(big.rows[1].reason.empty());
    CHECK(big.ranking.size() == 1);
}

TEST_CASE("compare_modes with alpha 0 has no gap") {
    const auto & s = shared();
    const ModeComparison mc = compare_modes(s.planted, s.acts, 2, 1, 0.0f, s.bench, ProbeOptions{});
    CHECK(mc.gap() == 0.0);
    CHECK(mc.head == mc.unsteered);
}

TEST_CASE("reuse matrix shape and diagonal consistency") {
    const auto & s = shared();
    const std::map<TemporalClass, const PairedActivations *> acts = {{TemporalClass::Invariant, &s.acts},
                                                                      {TemporalClass::Variant, &s.acts}};
    const std::map<TemporalClass, const Benchmark *> benches = {{TemporalClass::Invariant, &s.bench}};
    const ReuseResult r = cross_reuse_experiment(s.planted, acts, benches, 1, 1.0f, ProbeOptions{});
    CHECK(r.cells.size() == 4);
    const auto plain = steering_bundle_for(s.acts, ModuleKind::Head, 1, 1.0f, ProbeOptions{});
    const double direct = evaluate(s.planted, s.bench, steered_by(&plain)).overall;
    for (const auto & c : r.cells) {
        if (c.selection == c.offsets && c.offsets == c.target) {
            CHECK(c.overall == direct);
        }
    }
    const std::map<TemporalClass, const PairedActivations *> one = {{TemporalClass::Invariant, &s.acts}};
    CHECK(error_kind_of([&] { cross_reuse_experiment(s.planted, one, benches, 1, 1.0f, ProbeOptions{}); }) ==
          ErrorKind::Input);
}

TEST_CASE("pooling a set with itself keeps the offsets") {
    const auto & s = shared();
    const SelectedModule sel[] = {{ModuleId::head_of(1, 0), 1.0}};
    const auto a = make_bundle(s.acts, sel, BundleOptions{});
    const auto b = make_bundle(concat(s.acts, s.acts), sel, BundleOptions{});
    for (std::size_t k = 0; k < a.entries[0].offset.size(); ++k) {
        CHECK(b.entries[0].offset[k] == doctest::Approx(a.entries[0].offset[k]).epsilon(1e-5));
    }
    const MixedReport m = mixed_dataset_experiment(s.planted, s.acts, s.acts, s.bench, s.bench, 1, 1.0f, ProbeOptions{});
    CHECK(m.halves.size() == 2);
    const auto j = m.to_json();
    CHECK(j["halves"][0].contains("unsteered"));
    CHECK(j["halves"][0].contains("pooled_bundle"));
    CHECK(j["halves"][0].contains("best_per_class"));
}

TEST_CASE("routed evaluation propagates routing errors") {
    const auto & s = shared();
    const auto bundle = steering_bundle_for(s.acts, ModuleKind::Head, 1, 1.0f, ProbeOptions{});
    const ConstantClassifier variant(TemporalClass::Variant);
    EvalSteering st;
    st.router           = &variant;
    st.routed.invariant = &bundle;
    CHECK(error_kind_of([&] { evaluate(s.planted, s.bench, st); }) == ErrorKind::Routing);
    st.routed.variant = &bundle;
    const EvalReport r = evaluate(s.planted, s.bench, st);
    CHECK(r.routed.at("variant") == s.bench.items.size());
}

TEST_CASE("benchmark round-trip") {
    TempDir dir("bench");
    const auto & s = shared();
    save_benchmark(s.bench, dir / "b");
    const Benchmark back = load_benchmark(dir / "b");
    CHECK(back.fingerprint() == s.bench.fingerprint());
    CHECK(evaluate(s.planted, back).to_json() == evaluate(s.planted, s.bench).to_json());
}

TEST_CASE("calibration lands in the target flip band") {
    const auto & s = shared();
    const std::vector<PlantSpec> plants = {{ModuleId::head_of(1, 0), scenarios::random_direction(8, 1.0, 12)}};
    const Calibration c = calibrate_plants(s.base, plants, s.bench);
    CHECK(c.flip_rate >= 0.2);
    CHECK(c.flip_rate <= 0.4);
}

} // TEST_SUITE
