#include "tempsteer/steering.hpp"

#include <cmath>

namespace tempsteer {

Token argmax_token(std::span<const float> logits, float * margin) {
    if (logits.empty()) {
        fail(ErrorKind::Input, "empty logit row");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) {
            best = i;
        }
    }
    if (margin) {
        float second = -INFINITY;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            if (i != best) {
                second = std::max(second, logits[i]);
            }
        }
        *margin = logits.size() > 1 ? logits[best] - second : 0.0f;
    }
    return static_cast<Token>(best);
}

Intervention make_intervention(const Model & model, const SteeringBundle & bundle, float alpha, std::size_t from_position) {
    bundle.check_compatible(model.layout());
    if (!(alpha >= 0.0f) || !std::isfinite(alpha)) {
        fail(ErrorKind::BundleIncompatible, "alpha must be a finite non-negative number");
    }
    Intervention iv;
    iv.from_position = from_position;
    for (const auto & e : bundle.entries) {
        Intervention::Add add{e.module, e.offset};
        for (auto & v : add.vec) {
            v *= alpha;
        }
        iv.adds.push_back(std::move(add));
    }
    return iv;
}

GenerationResult generate_encoded(const Model & model, EncodedPrompt enc, int max_new_tokens,
                                  const SteeringBundle * bundle, std::optional<float> alpha_override,
                                  bool keep_logits) {
    if (max_new_tokens < 1) {
        fail(ErrorKind::Input, "max_new_tokens must be positive");
    }
    GenerationResult res;
    res.prompt_len = enc.x.rows;

    Intervention iv;
    RunOptions   opts;
    if (bundle && !bundle->entries.empty()) {
        iv = make_intervention(model, *bundle, alpha_override.value_or(bundle->alpha), res.prompt_len - 1);
        opts.steer = &iv;
    } else if (bundle) {
        bundle->validate();
    }

    for (int step = 0; step < max_new_tokens; ++step) {
        const Matrix logits = run_model(model, enc, opts);
        const auto   last   = logits.row(logits.rows - 1);
        float margin = 0.0f;
        const Token tok = argmax_token(last, &margin);
        res.tokens.push_back(tok);
        res.margins.push_back(margin);
        if (keep_logits) {
            res.step_logits.emplace_back(last.begin(), last.end());
        }
        if (step + 1 < max_new_tokens) {
            append_token(model, enc, tok);
        }
    }
    return res;
}

GenerationResult generate(const Model & model, const GenerationRequest & req) {
    EncodedPrompt enc = encode_prompt(model, req.prompt.media, req.prompt.question);
    return generate_encoded(model, std::move(enc), req.max_new_tokens, req.bundle, req.alpha_override, req.keep_logits);
}

} // namespace tempsteer
