#pragma once

// Benchmarks, evaluation, and the experiment drivers built on top of them:
// frame-reduction sweep, head/layer comparison, (K, alpha) grid search,
// cross-class head reuse and mixed-dataset bundles.

#include "tempsteer/probes.hpp"
#include "tempsteer/router.hpp"
#include "tempsteer/steering.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tempsteer {

enum class Scoring { ExactMatch, ChoiceAccuracy };

const char * to_string(Scoring s);
Scoring      scoring_from_string(std::string_view s);

struct BenchmarkItem {
    std::string                  id;
    Prompt                       prompt; // original media; the benchmark rate is applied at evaluation
    Tokens                       expected;
    std::string                  subtask;
    std::optional<TemporalClass> temporal;
};

struct Benchmark {
    std::string                name;
    Scoring                    scoring         = Scoring::ExactMatch;
    int                        downsample_rate = 1; // applied to every item's media before decoding
    std::vector<BenchmarkItem> items;

    std::string fingerprint() const;
};

// Directory: manifest.json + items.jsonl + media.bin.
void      save_benchmark(const Benchmark & bench, const std::filesystem::path & dir);
Benchmark load_benchmark(const std::filesystem::path & dir);

struct BenchmarkOptions {
    std::string name            = "planted";
    Scoring     scoring         = Scoring::ExactMatch;
    int         downsample_rate = kDefaultDownsampleRate;
    int         answer_tokens   = 2;
};

// Expected answers are the model's own greedy output on the original media.
Benchmark make_benchmark(const Model & model, const Corpus & samples, const BenchmarkOptions & opts);

// What drives the steering during an evaluation.
struct EvalSteering {
    const SteeringBundle *     bundle = nullptr;
    const TemporalClassifier * router = nullptr; // when set, `routed` supplies the bundles
    RoutedBundles              routed;

    std::string describe() const;
};

inline EvalSteering steered_by(const SteeringBundle * bundle) {
    EvalSteering s;
    s.bundle = bundle;
    return s;
}

struct SubtaskScore {
    std::string subtask;
    std::size_t correct = 0;
    std::size_t total   = 0;
    double      accuracy = 0.0;
};

struct EvalReport {
    std::string               benchmark;
    std::string               mode;
    int                       rate = 1;
    std::vector<SubtaskScore> subtasks; // sorted by tag
    double                    overall = 0.0;
    std::size_t               scored  = 0;
    std::size_t               errors  = 0;
    std::size_t               skipped = 0;
    std::vector<std::string>  issues;  // "<item id>: <reason>"
    std::map<std::string, std::size_t> routed; // class -> count, routed runs only

    nlohmann::ordered_json to_json() const;
};

EvalReport evaluate(const Model & model, const Benchmark & bench, const EvalSteering & steering = {},
                    std::optional<int> rate_override = std::nullopt);

struct SweepPoint {
    int        rate = 1;
    EvalReport report;
};

std::vector<SweepPoint> frame_reduction_sweep(const Model & model, const Benchmark & bench, std::span<const int> rates,
                                              const EvalSteering & steering = {});
std::string             sweep_to_csv(std::span<const SweepPoint> points);
nlohmann::ordered_json  sweep_to_json(std::span<const SweepPoint> points);

// Bundle of the top-k modules of `kind` ranked on `acts`.
SteeringBundle steering_bundle_for(const PairedActivations & acts, ModuleKind kind, std::size_t k, float alpha,
                                   const ProbeOptions & probe, bool normalize = false,
                                   TemporalClass cls = TemporalClass::Unrouted);

struct ModeComparison {
    double clean     = 0.0;
    double unsteered = 0.0;
    double head      = 0.0;
    double layer     = 0.0;

    double gap() const { return head - layer; }
    nlohmann::ordered_json to_json() const;
};

ModeComparison compare_modes(const Model & model, const PairedActivations & acts, std::size_t k_head,
                             std::size_t k_layer, float alpha, const Benchmark & bench, const ProbeOptions & probe);

struct GridSpace {
    std::vector<std::size_t> ks;
    std::vector<float>       alphas;

    static GridSpace standard_space();
    std::size_t size() const { return ks.size() * alphas.size(); }
};

struct GridOptions {
    ModuleKind   kind      = ModuleKind::Head;
    ProbeOptions probe;
    bool         normalize = false;
};

struct GridRow {
    std::size_t k       = 0;
    float       alpha   = 0.0f;
    bool        skipped = false;
    std::string reason;
    double      overall = 0.0;
};

struct GridResult {
    std::vector<GridRow>       rows;    // (K, alpha) order
    std::vector<std::size_t>   ranking; // evaluated rows, best first, ties by grid order
    std::optional<std::size_t> best;

    nlohmann::ordered_json to_json() const;
    std::string            to_csv() const;
};

GridResult grid_search(const Model & model, const PairedActivations & acts, const GridSpace & space,
                       const Benchmark & bench, const GridOptions & opts);

struct ReuseCell {
    TemporalClass selection;
    TemporalClass offsets;
    TemporalClass target;
    double        overall = 0.0;
};

struct ReuseResult {
    std::vector<ReuseCell> cells; // target-major, then selection, then offsets
    nlohmann::ordered_json to_json() const;
};

ReuseResult cross_reuse_experiment(const Model & model, const std::map<TemporalClass, const PairedActivations *> & acts,
                                   const std::map<TemporalClass, const Benchmark *> & benchmarks, std::size_t k,
                                   float alpha, const ProbeOptions & probe);

struct MixedHalf {
    std::string name;
    double      unsteered = 0.0;
    double      invariant = 0.0; // bundle from invariant data only
    double      variant   = 0.0; // bundle from variant data only
    double      pooled    = 0.0;

    double best_per_class() const { return std::max(invariant, variant); }
};

struct MixedReport {
    std::vector<MixedHalf> halves;
    nlohmann::ordered_json to_json() const;
};

MixedReport mixed_dataset_experiment(const Model & model, const PairedActivations & acts_a,
                                     const PairedActivations & acts_t, const Benchmark & bench_a,
                                     const Benchmark & bench_t, std::size_t k, float alpha, const ProbeOptions & probe);

struct Calibration {
    float  scale     = 1.0f;
    double flip_rate = 0.0;
    int    evaluations = 0;
};

// Finds a common multiplier for the plant deltas so the unsteered flip rate on
// `bench` lands in [lo, hi]. Returns the planted model's calibration.
Calibration calibrate_plants(const Model & base, const std::vector<PlantSpec> & plants, const Benchmark & bench,
                             double lo = 0.2, double hi = 0.4);

std::vector<PlantSpec> scale_plants(std::vector<PlantSpec> plants, float scale);

} // namespace tempsteer
