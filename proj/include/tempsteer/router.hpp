#pragma once

// Temporal router: frozen backbone (media projection + first block, last
// token state) with a trainable logistic head. Picks the steering bundle
// that matches the predicted temporal class.

#include "tempsteer/corpus.hpp"
#include "tempsteer/steering.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>

namespace tempsteer {

struct RouterConfig {
    std::size_t   train_per_class = 400;
    double        learning_rate   = 1e-5;
    std::size_t   batch_size      = 8;
    int           epochs          = 5;
    int           warmup_steps    = 10;
    std::string   schedule        = "cosine";
    std::uint64_t seed            = 0;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static RouterConfig from_json(const nlohmann::ordered_json & j);
};

// Learning rate at optimizer step `step` (0-based) out of `total`.
double scheduled_lr(const RouterConfig & cfg, std::size_t step, std::size_t total);

class TemporalClassifier {
public:
    virtual ~TemporalClassifier() = default;
    virtual TemporalClass classify(const FrameSeq & media, std::span<const Token> question) const = 0;
};

class ConstantClassifier : public TemporalClassifier {
public:
    explicit ConstantClassifier(TemporalClass c) : c_(c) {}
    TemporalClass classify(const FrameSeq &, std::span<const Token>) const override { return c_; }

private:
    TemporalClass c_;
};

// Linear head over standardized features; score > 0 means Variant.
struct RouterHead {
    std::vector<float> feat_mean;
    std::vector<float> feat_std;
    std::vector<float> w;
    float              b = 0.0f;

    double score(std::span<const float> features) const;
};

struct EpochLog {
    int    epoch        = 0;
    double train_loss   = 0.0;
    double val_accuracy = 0.0;
};

class Router : public TemporalClassifier {
public:
    Router(std::shared_ptr<const Model> model, RouterHead head);

    TemporalClass classify(const FrameSeq & media, std::span<const Token> question) const override;

    const Model &      model() const { return *model_; }
    const RouterHead & head() const { return head_; }

    RouterConfig          config;
    double                val_accuracy = 0.0;
    int                   best_epoch   = 0;
    std::size_t           train_n      = 0;
    std::size_t           val_n        = 0;
    std::vector<EpochLog> history;

private:
    std::shared_ptr<const Model> model_;
    RouterHead                   head_;
};

// Samples train_per_class from each set for training, keeps the rest for
// validation, and returns the head from the epoch with best validation accuracy.
Router train_router(const Corpus & d_a_f, const Corpus & d_t_f, std::shared_ptr<const Model> model,
                    const RouterConfig & cfg);

struct ConfusionCounts {
    // [truth][predicted], index 0 = Invariant, 1 = Variant
    std::size_t counts[2][2] = {{0, 0}, {0, 0}};

    std::size_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
    double      accuracy() const;
    nlohmann::ordered_json to_json() const;
};

// Truth is the generator ground truth of each sample.
ConfusionCounts route_eval(const TemporalClassifier & classifier, const Corpus & samples);

struct RoutedBundles {
    const SteeringBundle * invariant = nullptr;
    const SteeringBundle * variant   = nullptr;

    const SteeringBundle & for_class(TemporalClass c) const;
};

struct RoutedResult {
    TemporalClass    routed = TemporalClass::Unrouted;
    GenerationResult generation;
};

// Classification runs concurrently with prompt encoding; the bundle is fixed
// before any block executes.
RoutedResult route_and_generate(const TemporalClassifier & classifier, const RoutedBundles & bundles,
                                const Model & model, const GenerationRequest & req);

void   save_router(const Router & router, const std::filesystem::path & dir);
Router load_router(const std::filesystem::path & dir, std::shared_ptr<const Model> model);

} // namespace tempsteer
