#pragma once

// Toy decoder-only transformer with a tap at every attention head and every
// block output, plus optional planted perturbations used as ground-truth
// hallucination oracles.

#include "tempsteer/common.hpp"

#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tempsteer {

enum class ModuleKind { Head, Layer };

const char * to_string(ModuleKind kind);
ModuleKind   module_kind_from_string(std::string_view s);

struct ModuleId {
    ModuleKind kind  = ModuleKind::Head;
    int        layer = 0;
    int        head  = -1; // -1 for Layer modules

    static ModuleId head_of(int layer, int head) { return {ModuleKind::Head, layer, head}; }
    static ModuleId layer_of(int layer) { return {ModuleKind::Layer, layer, -1}; }

    auto operator<=>(const ModuleId &) const = default;
    std::string str() const;
};

// A clip as a sequence of per-frame feature vectors. `downsample_rate` is 1
// for original media and multiplies on every downsample() call.
struct FrameSeq {
    std::size_t        frame_dim       = 0;
    std::vector<float> data;            // frame_count x frame_dim, row-major
    int                downsample_rate = 1;
    int                scene_segments  = 0; // generator ground truth, 0 = unknown

    std::size_t frame_count() const { return frame_dim == 0 ? 0 : data.size() / frame_dim; }
    std::span<const float> frame(std::size_t i) const { return {data.data() + i * frame_dim, frame_dim}; }
    void validate() const;
};

// Keeps frames {0, r, 2r, ...}. rate == 1 is the identity.
FrameSeq downsample(const FrameSeq & media, int rate);

struct Prompt {
    FrameSeq media;
    Tokens   question;
    Tokens   answer; // optional; never part of the forward pass
};

struct ModelConfig {
    int           n_layers     = 2;
    int           n_heads      = 4;
    int           d_model      = 32;
    int           d_ff         = 0;  // 0 -> 4 * d_model
    int           vocab_size   = 64;
    int           max_seq_len  = 64;
    int           frame_dim    = 8;
    int           media_tokens = 4;  // frames are mean-pooled into this many tokens
    std::uint64_t seed         = 0;

    int d_head() const { return d_model / n_heads; }
    int ff_dim() const { return d_ff > 0 ? d_ff : 4 * d_model; }
    void validate() const;
};

// Maps ModuleId <-> dense index: heads first (layer-major), then layers.
class ModuleLayout {
public:
    ModuleLayout() = default;
    ModuleLayout(int n_layers, int n_heads, int d_model);

    int n_layers() const { return n_layers_; }
    int n_heads() const { return n_heads_; }
    int d_model() const { return d_model_; }
    int d_head() const { return d_model_ / n_heads_; }

    std::size_t count() const { return static_cast<std::size_t>(n_layers_) * (n_heads_ + 1); }
    std::size_t count(ModuleKind kind) const;
    std::size_t index(const ModuleId & id) const;
    ModuleId    id(std::size_t index) const;
    std::size_t dim(const ModuleId & id) const;
    void        check(const ModuleId & id) const;
    std::vector<ModuleId> modules(ModuleKind kind) const;

    bool operator==(const ModuleLayout &) const = default;

private:
    int n_layers_ = 0;
    int n_heads_  = 1;
    int d_model_  = 0;
};

enum class PlantTrigger {
    DownsampledMedia,     // any media with downsample_rate > 1
    DownsampledInvariant, // ... and a single scene segment
    DownsampledVariant,   // ... and two or more scene segments
};

const char * to_string(PlantTrigger t);
PlantTrigger plant_trigger_from_string(std::string_view s);

struct PlantSpec {
    ModuleId           target;
    std::vector<float> delta;
    PlantTrigger       trigger     = PlantTrigger::DownsampledMedia;
    bool               rate_scaled = false; // scale delta by log2(downsample_rate)

    bool  fires_on(const FrameSeq & media) const;
    float scale_for(const FrameSeq & media) const;
};

// Per-module final-position vectors from one forward pass, indexed by ModuleLayout.
struct TapSet {
    ModuleLayout                    layout;
    std::vector<std::vector<float>> values;

    const std::vector<float> & at(const ModuleId & id) const { return values[layout.index(id)]; }
    std::size_t size() const { return values.size(); }
};

// Additive edits applied to module outputs at positions >= from_position.
struct Intervention {
    struct Add {
        ModuleId           module;
        std::vector<float> vec;
    };
    std::vector<Add> adds;
    std::size_t      from_position = 0;
};

class Model {
public:
    static Model build(const ModelConfig & config);
    static Model build_planted(const ModelConfig & config, std::vector<PlantSpec> plants);

    const ModelConfig &       config() const { return config_; }
    const ModuleLayout &      layout() const { return layout_; }
    std::span<const PlantSpec> plants() const { return plants_; }
    std::span<const float>    parameters() const { return params_; }

    std::uint32_t checksum() const;          // CRC-32 over all parameters
    std::uint32_t backbone_checksum() const; // media projection + first block
    std::string   fingerprint() const;       // parameters + plants

    // Parameter views used by the forward pass.
    struct LayerParams {
        const float *ln1_g, *ln1_b, *wq, *wk, *wv, *wo, *bo, *ln2_g, *ln2_b, *w1, *b1, *w2, *b2;
    };
    const float * tok_embed() const { return params_.data() + off_tok_; }
    const float * media_w() const { return params_.data() + off_media_w_; }
    const float * media_b() const { return params_.data() + off_media_b_; }
    LayerParams   layer(int l) const;
    const float * lnf_g() const { return params_.data() + off_lnf_g_; }
    const float * lnf_b() const { return params_.data() + off_lnf_b_; }
    const float * unembed() const { return params_.data() + off_unembed_; }

    // Reassemble from stored parameters (checkpoint load).
    static Model from_parts(const ModelConfig & config, std::vector<float> params, std::vector<PlantSpec> plants);

private:
    void layout_params();
    void validate_plants() const;

    ModelConfig            config_;
    ModuleLayout           layout_;
    std::vector<float>     params_;
    std::vector<PlantSpec> plants_;

    std::size_t off_tok_ = 0, off_media_w_ = 0, off_media_b_ = 0, off_layers_ = 0, layer_stride_ = 0;
    std::size_t off_lnf_g_ = 0, off_lnf_b_ = 0, off_unembed_ = 0, total_ = 0;
};

// Media tokens followed by token embeddings, positional encoding added.
struct EncodedPrompt {
    Matrix      x;                // seq_len x d_model
    FrameSeq    media_meta;       // frame data dropped, metadata kept for plant triggers
    std::size_t media_positions = 0;
};

EncodedPrompt encode_prompt(const Model & model, const FrameSeq & media, std::span<const Token> tokens);
void          append_token(const Model & model, EncodedPrompt & enc, Token token);

// Mean-pools frames into `n_tokens` contiguous chunks (double accumulation).
Matrix pool_frames(const FrameSeq & media, int n_tokens);

struct RunOptions {
    const Intervention * steer     = nullptr;
    TapSet *             taps      = nullptr;  // filled at the last position
    int                  n_blocks  = -1;       // run only the first n blocks
    bool                 want_logits = true;
    std::vector<float> * last_hidden = nullptr; // residual after the last block run
};

// logits: seq_len x vocab_size (empty when want_logits = false)
Matrix run_model(const Model & model, const EncodedPrompt & enc, const RunOptions & opts);

struct ForwardResult {
    Matrix logits;
    TapSet taps;
};

ForwardResult forward_with_taps(const Model & model, const Prompt & prompt);
Matrix        forward(const Model & model, const Prompt & prompt);

// Residual stream after the first block at the last prompt position.
std::vector<float> backbone_features(const Model & model, const FrameSeq & media, std::span<const Token> question);

void  save_model(const Model & model, const std::filesystem::path & dir);
Model load_model(const std::filesystem::path & dir);

} // namespace tempsteer
