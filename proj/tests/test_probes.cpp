#include "support.hpp"

using namespace tst;

namespace {

ProbeReport report_of(std::vector<std::pair<ModuleId, double>> rows) {
    ProbeReport r;
    for (auto & [id, acc] : rows) {
        r.rows.push_back({id, 8, 2, acc});
    }
    return r;
}

PairedActivations planted_acts(std::size_t n, const ModuleId & target, double norm) {
    const auto delta = scenarios::random_direction(target.kind == ModuleKind::Head ? 8 : 32, norm, 3);
    const Model m    = Model::build_planted(small_config(), {PlantSpec{target, delta}});
    return collect_pairs(m, make_pairs(small_corpus(n, 31)));
}

} // namespace

TEST_SUITE("probes") {

TEST_CASE("planted target head separates perfectly and outranks upstream modules") {
    const ModuleId target = ModuleId::head_of(1, 2);
    const auto acts       = planted_acts(60, target, 20.0);
    ProbeOptions o;
    o.seed = 1;
    const ProbeReport r = probe_all(acts, ModuleKind::Head, o);
    CHECK(r.rows.size() == 8);
    CHECK(r.accuracy_of(target) == 1.0);
    for (const auto & row : r.rows) {
        if (row.module != target && row.module.layer <= target.layer) {
            CHECK(row.accuracy < 1.0);
        }
    }
    const auto summary = layerwise_summary(r);
    CHECK(summary.size() == 2);
    CHECK(summary[1].mean > summary[0].mean);
}

TEST_CASE("layer plant: planted layer and downstream exceed 0.9, upstream is chance") {
    ModelConfig cfg = small_config();
    cfg.n_layers    = 3;
    const ModuleId target = ModuleId::layer_of(1);
    const Model m = Model::build_planted(cfg, {PlantSpec{target, scenarios::random_direction(32, 20.0, 4)}});
    const auto acts = collect_pairs(m, make_pairs(small_corpus(60, 32)));
    ProbeOptions o;
    o.seed = 2;
    const ProbeReport r = probe_all(acts, ModuleKind::Layer, o);
    CHECK(r.accuracy_of(ModuleId::layer_of(0)) == doctest::Approx(0.5).epsilon(0.15));
    CHECK(r.accuracy_of(ModuleId::layer_of(1)) > 0.9);
    CHECK(r.accuracy_of(ModuleId::layer_of(2)) > 0.9);
}

TEST_CASE("shuffled labels stay near chance") {
    Rng rng(5);
    Matrix x(240, 16);
    std::vector<int> y(240);
    for (std::size_t i = 0; i < 240; ++i) {
        for (auto & v : x.row(i)) {
            v = static_cast<float>(rng.normal());
        }
        y[i] = static_cast<int>(rng.below(2));
    }
    ProbeOptions o;
    o.seed = 3;
    const ProbeFit f = train_probe(x, y, o);
    CHECK(f.val_accuracy >= 0.35);
    CHECK(f.val_accuracy <= 0.65);
}

TEST_CASE("identical normal and downsampled activations give 0.5") {
    auto acts   = planted_acts(30, ModuleId::head_of(1, 0), 1.0);
    acts.halluc = acts.normal;
    const ProbeReport r = probe_all(acts, ModuleKind::Head, ProbeOptions{});
    for (const auto & row : r.rows) {
        CHECK(row.accuracy == doctest::Approx(0.5).epsilon(0.15));
    }
}

TEST_CASE("degenerate input") {
    Matrix x(3, 2);
    const std::vector<int> y = {0, 0, 1};
    CHECK(error_kind_of([&] { train_probe(x, y, ProbeOptions{}); }) == ErrorKind::Degenerate);
}

TEST_CASE("probe report is deterministic and round-trips through CSV") {
    const auto acts = planted_acts(20, ModuleId::head_of(0, 1), 5.0);
    ProbeOptions o;
    o.seed = 9;
    const ProbeReport a = probe_all(acts, ModuleKind::Head, o);
    const ProbeReport b = probe_all(acts, ModuleKind::Head, o);
    CHECK(report_to_csv(a) == report_to_csv(b));
    CHECK(report_to_csv(report_from_csv(report_to_csv(a))) == report_to_csv(a));
    CHECK(report_to_csv(a).rfind("kind,layer,head,train_n,val_n,accuracy\n", 0) == 0);
}

TEST_CASE("top-K selection") {
    const auto A = ModuleId::head_of(0, 0), B = ModuleId::head_of(0, 1), C = ModuleId::head_of(1, 0);
    CHECK(select_top_k(report_of({{A, 0.9}, {B, 0.8}, {C, 0.7}}), 2) == std::vector<ModuleId>{A, B});
    CHECK(select_top_k(report_of({{C, 0.9}, {B, 0.8}, {A, 0.7}}), 2) == std::vector<ModuleId>{C, B});
    CHECK(select_top_k(report_of({{C, 0.5}, {B, 0.5}, {A, 0.5}}), 2) == std::vector<ModuleId>{A, B});
    CHECK(error_kind_of([&] { select_top_k(report_of({{A, 0.5}}), 2); }) == ErrorKind::Bounds);

    // ranking only: a constant shift leaves the choice alone
    const auto r1 = report_of({{A, 0.61}, {B, 0.93}, {C, 0.72}});
    const auto r2 = report_of({{A, 0.71}, {B, 1.03}, {C, 0.82}});
    CHECK(select_top_k(r1, 2) == select_top_k(r2, 2));

    // the standard K values fit a model with 256+ heads
    ProbeReport big;
    for (int l = 0; l < 32; ++l) {
        for (int h = 0; h < 8; ++h) {
            big.rows.push_back({ModuleId::head_of(l, h), 1, 1, 0.5 + 0.001 * (l * 8 + h)});
        }
    }
    for (std::size_t k : {32u, 64u, 128u, 256u}) {
        CHECK(select_top_k(big, k).size() == k);
    }
}

TEST_CASE("layerwise summary") {
    const auto r = report_of({{ModuleId::head_of(0, 0), 0.6},
                              {ModuleId::head_of(0, 1), 0.6},
                              {ModuleId::head_of(0, 2), 0.8},
                              {ModuleId::head_of(0, 3), 0.8}});
    const auto s = layerwise_summary(r);
    REQUIRE(s.size() == 1);
    CHECK(s[0].mean == doctest::Approx(0.7));
    CHECK(s[0].min == doctest::Approx(0.6));
    CHECK(s[0].max == doctest::Approx(0.8));
    CHECK(s[0].accuracies.size() == 4);
}

} // TEST_SUITE
