#pragma once

// Paired normal / hallucination-inducing prompts and the per-module
// final-position activations they produce.

#include "tempsteer/corpus.hpp"
#include "tempsteer/model.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tempsteer {

inline constexpr int kDefaultDownsampleRate = 4;

struct PromptPair {
    std::string pair_id;
    Prompt      normal;  // original media + question
    Prompt      halluc;  // downsampled media + same question
    Tokens      answer;
};

PromptPair make_pair(const CorpusSample & sample, int rate = kDefaultDownsampleRate);

std::vector<PromptPair> make_pairs(const Corpus & corpus, int rate = kDefaultDownsampleRate);

std::string dataset_fingerprint(std::span<const PromptPair> pairs);

// normal[j] / halluc[j] hold one row per pair for module index j.
struct PairedActivations {
    ModuleLayout             layout;
    std::vector<std::string> pair_ids;
    std::vector<Matrix>      normal;
    std::vector<Matrix>      halluc;
    std::string              model_fingerprint;
    std::string              dataset_fingerprint;

    std::size_t size() const { return pair_ids.size(); }
    std::size_t module_count() const { return normal.size(); }
    const Matrix & normal_of(const ModuleId & id) const { return normal[layout.index(id)]; }
    const Matrix & halluc_of(const ModuleId & id) const { return halluc[layout.index(id)]; }

    void        validate() const;
    std::string fingerprint() const;
};

PairedActivations collect_pairs(const Model & model, std::span<const PromptPair> pairs);

// Pools two activation sets captured from the same model (pair order: a then b).
PairedActivations concat(const PairedActivations & a, const PairedActivations & b);

// Scales every captured vector by c.
PairedActivations scaled(const PairedActivations & acts, float c);

// Directory: manifest.json + one blob per module (first |D| rows normal, then |D| rows halluc).
void              save_activations(const PairedActivations & acts, const std::filesystem::path & dir);
PairedActivations load_activations(const std::filesystem::path & dir);

} // namespace tempsteer
