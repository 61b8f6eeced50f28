#pragma once

// Seeded end-to-end experiments on planted models. `freeze-fixtures` writes
// their JSON output under tests/fixtures; the acceptance binary recomputes
// them, compares against the frozen copies and checks the thresholds.

#include "tempsteer/harness.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace tempsteer::scenarios {

using json = nlohmann::ordered_json;

// L=4, M=8, d_model=128 substrate shared by most experiments.
ModelConfig substrate_config(std::uint64_t seed);

// Noise-free, chunk-aligned clips: stride downsampling by up to 8 leaves the
// pooled media tokens unchanged, so only the plant separates v_n from v_h.
CorpusOptions planted_corpus_options(std::size_t n, std::uint64_t seed);

// Total RMS deviation sqrt(E||v - E v||^2) of a module's tap over clean prompts.
double activation_std(const Model & model, const ModuleId & id, std::span<const PromptPair> pairs);

// Random direction with the given L2 norm.
std::vector<float> random_direction(std::size_t dim, double norm, std::uint64_t seed);

json probe_recovery(std::uint64_t seed);   // planted head in a middle layer
json layer_plant(std::uint64_t seed);      // literal block-output plant
json cancellation(std::uint64_t seed);     // last-layer head, 100 prompts
json frame_sweep(std::uint64_t seed);      // rate-scaled plant, rates {1,2,4,8}
json head_vs_layer(std::uint64_t seed);    // all heads of the last layer planted
json pipeline(std::uint64_t seed);         // oracle judge, default constants
json two_class(std::uint64_t seed);        // router, routed steering, reuse, mixed
json grid(std::uint64_t seed);             // standard (K, alpha) space
json substrate(std::uint64_t seed);        // L=2, M=4, d=32 checksums for seed and seed + 1

struct Entry {
    std::string                         name;
    std::uint64_t                       seed;
    std::function<json(std::uint64_t)>  run;
};

const std::vector<Entry> & registry();

} // namespace tempsteer::scenarios
