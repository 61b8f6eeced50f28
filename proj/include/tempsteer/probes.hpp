#pragma once

// Per-module logistic probes separating normal from hallucination-inducing
// activations, and top-K module selection by validation accuracy.

#include "tempsteer/capture.hpp"
#include "tempsteer/offsets.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace tempsteer {

struct Probe {
    std::vector<float> w;
    float              b = 0.0f;

    double score(std::span<const float> v) const;
    bool   predict(std::span<const float> v) const { return score(v) > 0.0; } // true = hallucination origin
};

struct ProbeOptions {
    double        split_ratio = 0.8;
    std::uint64_t seed        = 0;
    double        lr          = 0.1;
    int           iterations  = 500;
    double        l2          = 1e-3;
};

struct ProbeFit {
    Probe       probe;
    double      val_accuracy = 0.0;
    std::size_t train_n      = 0;
    std::size_t val_n        = 0;
};

// x: one example per row, labels 0/1. When `groups` is given, examples sharing
// a group id land on the same side of the split and strata are keyed by each
// group's label set; otherwise the split is stratified by label.
ProbeFit train_probe(const Matrix & x, std::span<const int> labels, const ProbeOptions & opts,
                     std::span<const std::size_t> groups = {});

struct ProbeRow {
    ModuleId    module;
    std::size_t train_n  = 0;
    std::size_t val_n    = 0;
    double      accuracy = 0.0;
};

struct ProbeReport {
    ModuleKind            kind        = ModuleKind::Head;
    std::uint64_t         split_seed  = 0;
    double                split_ratio = 0.8;
    std::vector<ProbeRow> rows; // sorted by (layer, head)

    double accuracy_of(const ModuleId & id) const;
};

// Pairs (v_n, v_h) of one sample are kept on the same side of the split.
ProbeReport probe_all(const PairedActivations & acts, ModuleKind kind, const ProbeOptions & opts);

// Highest accuracy first, ties by ascending (layer, head).
std::vector<SelectedModule> top_k(const ProbeReport & report, std::size_t k);
std::vector<ModuleId>       select_top_k(const ProbeReport & report, std::size_t k);

struct LayerSummary {
    int                 layer = 0;
    double              mean  = 0.0;
    double              min   = 0.0;
    double              max   = 0.0;
    std::vector<double> accuracies; // per head (one entry for layer probes)
};

std::vector<LayerSummary> layerwise_summary(const ProbeReport & report);

// CSV columns: kind,layer,head,train_n,val_n,accuracy
std::string report_to_csv(const ProbeReport & report);
ProbeReport report_from_csv(const std::string & text);
void        save_report_csv(const ProbeReport & report, const std::filesystem::path & path);
ProbeReport load_report_csv(const std::filesystem::path & path);

std::string summary_to_csv(std::span<const LayerSummary> summary);

} // namespace tempsteer
