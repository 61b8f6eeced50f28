#pragma once

// Greedy decoding with optional steering: alpha * offset is added to each
// bundle module from the final prompt position onward.

#include "tempsteer/model.hpp"
#include "tempsteer/offsets.hpp"

#include <optional>
#include <vector>

namespace tempsteer {

struct GenerationRequest {
    Prompt                 prompt;
    int                    max_new_tokens = 1;
    const SteeringBundle * bundle         = nullptr;
    std::optional<float>   alpha_override;
    bool                   keep_logits    = false; // record the full logit row of every step
};

struct GenerationResult {
    Tokens                          tokens;
    std::vector<float>              margins; // top1 - top2 logit per step
    std::vector<std::vector<float>> step_logits;
    std::size_t                     prompt_len = 0;
};

// Builds the injection for a bundle. Throws BundleIncompatible on dim/kind mismatch.
Intervention make_intervention(const Model & model, const SteeringBundle & bundle, float alpha, std::size_t from_position);

GenerationResult generate(const Model & model, const GenerationRequest & req);

// Decoding from an already encoded prompt; the bundle is applied from the last
// prompt row. Used when the bundle is chosen while the prompt is being encoded.
GenerationResult generate_encoded(const Model & model, EncodedPrompt enc, int max_new_tokens,
                                  const SteeringBundle * bundle, std::optional<float> alpha_override,
                                  bool keep_logits);

// Index of the largest logit; the lowest index wins ties.
Token argmax_token(std::span<const float> logits, float * margin = nullptr);

} // namespace tempsteer
