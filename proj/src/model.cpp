#include "tempsteer/model.hpp"

#include "tempsteer/io.hpp"

#include <algorithm>
#include <cmath>

namespace tempsteer {

namespace {

constexpr float kInitRange = 0.02f;
constexpr float kLnEps     = 1e-5f;

void layer_norm(std::span<const float> x, const float * g, const float * b, std::span<float> out) {
    const std::size_t n = x.size();
    float mean = 0.0f;
    for (float v : x) {
        mean += v;
    }
    mean /= static_cast<float>(n);
    float var = 0.0f;
    for (float v : x) {
        const float d = v - mean;
        var += d * d;
    }
    var /= static_cast<float>(n);
    const float inv = 1.0f / std::sqrt(var + kLnEps);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (x[i] - mean) * inv * g[i] + b[i];
    }
}

// out[i] = sum_j w[i, j] * x[j] (+ bias[i]); w is rows x cols row-major
void matvec(const float * w, const float * bias, std::span<const float> x, std::size_t rows, std::span<float> out) {
    const std::size_t cols = x.size();
    for (std::size_t i = 0; i < rows; ++i) {
        const float * wr = w + i * cols;
        float acc = 0.0f;
        for (std::size_t j = 0; j < cols; ++j) {
            acc += wr[j] * x[j];
        }
        out[i] = bias ? acc + bias[i] : acc;
    }
}

float gelu(float x) {
    constexpr float k = 0.7978845608028654f; // sqrt(2/pi)
    return 0.5f * x * (1.0f + std::tanh(k * (x + 0.044715f * x * x * x)));
}

void add_positional(std::span<float> row, std::size_t pos) {
    const std::size_t d = row.size();
    for (std::size_t i = 0; i < d; ++i) {
        const double expo  = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
        const double angle = static_cast<double>(pos) / std::pow(10000.0, expo);
        row[i] += static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
}

} // namespace

const char * to_string(ModuleKind kind) {
    return kind == ModuleKind::Head ? "head" : "layer";
}

ModuleKind module_kind_from_string(std::string_view s) {
    if (s == "head" || s == "Head") {
        return ModuleKind::Head;
    }
    if (s == "layer" || s == "Layer") {
        return ModuleKind::Layer;
    }
    fail(ErrorKind::Input, "unknown module kind '" + std::string(s) + "'");
}

std::string ModuleId::str() const {
    if (kind == ModuleKind::Head) {
        return "head:" + std::to_string(layer) + "." + std::to_string(head);
    }
    return "layer:" + std::to_string(layer);
}

void FrameSeq::validate() const {
    if (frame_dim == 0) {
        fail(ErrorKind::Input, "media has frame_dim 0");
    }
    if (data.empty() || data.size() % frame_dim != 0) {
        fail(ErrorKind::Input, "media must hold at least one whole frame");
    }
    if (downsample_rate < 1) {
        fail(ErrorKind::Input, "media downsample_rate must be >= 1");
    }
}

FrameSeq downsample(const FrameSeq & media, int rate) {
    if (rate < 1) {
        fail(ErrorKind::Input, "downsample rate must be >= 1");
    }
    FrameSeq out;
    out.frame_dim       = media.frame_dim;
    out.scene_segments  = media.scene_segments;
    out.downsample_rate = media.downsample_rate * rate;
    const std::size_t n = media.frame_count();
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(rate)) {
        const auto f = media.frame(i);
        out.data.insert(out.data.end(), f.begin(), f.end());
    }
    return out;
}

void ModelConfig::validate() const {
    if (n_layers <= 0 || n_heads <= 0 || d_model <= 0 || vocab_size <= 0 || max_seq_len <= 0 ||
        frame_dim <= 0 || media_tokens <= 0 || d_ff < 0) {
        fail(ErrorKind::Config, "model dimensions must be positive");
    }
    if (d_model % n_heads != 0) {
        fail(ErrorKind::Config, "d_model not divisible by n_heads");
    }
    if (media_tokens >= max_seq_len) {
        fail(ErrorKind::Config, "media_tokens must leave room for question tokens");
    }
}

ModuleLayout::ModuleLayout(int n_layers, int n_heads, int d_model)
    : n_layers_(n_layers), n_heads_(n_heads), d_model_(d_model) {}

std::size_t ModuleLayout::count(ModuleKind kind) const {
    return kind == ModuleKind::Head ? static_cast<std::size_t>(n_layers_) * n_heads_
                                    : static_cast<std::size_t>(n_layers_);
}

void ModuleLayout::check(const ModuleId & id) const {
    const bool layer_ok = id.layer >= 0 && id.layer < n_layers_;
    const bool head_ok  = id.kind == ModuleKind::Layer ? id.head == -1 : (id.head >= 0 && id.head < n_heads_);
    if (!layer_ok || !head_ok) {
        fail(ErrorKind::Bounds, "module " + id.str() + " outside " + std::to_string(n_layers_) + "x" +
                                    std::to_string(n_heads_) + " model");
    }
}

std::size_t ModuleLayout::index(const ModuleId & id) const {
    check(id);
    if (id.kind == ModuleKind::Head) {
        return static_cast<std::size_t>(id.layer) * n_heads_ + id.head;
    }
    return count(ModuleKind::Head) + id.layer;
}

ModuleId ModuleLayout::id(std::size_t index) const {
    const std::size_t n_head_modules = count(ModuleKind::Head);
    if (index < n_head_modules) {
        return ModuleId::head_of(static_cast<int>(index / n_heads_), static_cast<int>(index % n_heads_));
    }
    if (index < count()) {
        return ModuleId::layer_of(static_cast<int>(index - n_head_modules));
    }
    fail(ErrorKind::Bounds, "module index " + std::to_string(index) + " out of range");
}

std::size_t ModuleLayout::dim(const ModuleId & id) const {
    check(id);
    return id.kind == ModuleKind::Head ? static_cast<std::size_t>(d_head()) : static_cast<std::size_t>(d_model_);
}

std::vector<ModuleId> ModuleLayout::modules(ModuleKind kind) const {
    std::vector<ModuleId> out;
    for (int l = 0; l < n_layers_; ++l) {
        if (kind == ModuleKind::Layer) {
            out.push_back(ModuleId::layer_of(l));
        } else {
            for (int h = 0; h < n_heads_; ++h) {
                out.push_back(ModuleId::head_of(l, h));
            }
        }
    }
    return out;
}

const char * to_string(PlantTrigger t) {
    switch (t) {
        case PlantTrigger::DownsampledMedia:     return "downsampled_media";
        case PlantTrigger::DownsampledInvariant: return "downsampled_invariant";
        case PlantTrigger::DownsampledVariant:   return "downsampled_variant";
    }
    return "unknown";
}

PlantTrigger plant_trigger_from_string(std::string_view s) {
    if (s == "downsampled_media") {
        return PlantTrigger::DownsampledMedia;
    }
    if (s == "downsampled_invariant") {
        return PlantTrigger::DownsampledInvariant;
    }
    if (s == "downsampled_variant") {
        return PlantTrigger::DownsampledVariant;
    }
    fail(ErrorKind::Input, "unknown plant trigger '" + std::string(s) + "'");
}

bool PlantSpec::fires_on(const FrameSeq & media) const {
    if (media.downsample_rate <= 1) {
        return false;
    }
    switch (trigger) {
        case PlantTrigger::DownsampledMedia:     return true;
        case PlantTrigger::DownsampledInvariant: return media.scene_segments == 1;
        case PlantTrigger::DownsampledVariant:   return media.scene_segments >= 2;
    }
    return false;
}

float PlantSpec::scale_for(const FrameSeq & media) const {
    return rate_scaled ? static_cast<float>(std::log2(static_cast<double>(media.downsample_rate))) : 1.0f;
}

void Model::layout_params() {
    const std::size_t d   = config_.d_model;
    const std::size_t ff  = config_.ff_dim();
    const std::size_t voc = config_.vocab_size;
    const std::size_t fd  = config_.frame_dim;

    std::size_t off = 0;
    off_tok_     = off; off += voc * d;
    off_media_w_ = off; off += d * fd;
    off_media_b_ = off; off += d;
    off_layers_  = off;
    layer_stride_ = 2 * d + 4 * d * d + d + 2 * d + ff * d + ff + d * ff + d;
    off += layer_stride_ * config_.n_layers;
    off_lnf_g_   = off; off += d;
    off_lnf_b_   = off; off += d;
    off_unembed_ = off; off += voc * d;
    total_ = off;
}

Model::LayerParams Model::layer(int l) const {
    const std::size_t d  = config_.d_model;
    const std::size_t ff = config_.ff_dim();
    const float * p = params_.data() + off_layers_ + layer_stride_ * static_cast<std::size_t>(l);
    LayerParams lp{};
    lp.ln1_g = p; p += d;
    lp.ln1_b = p; p += d;
    lp.wq = p; p += d * d;
    lp.wk = p; p += d * d;
    lp.wv = p; p += d * d;
    lp.wo = p; p += d * d;
    lp.bo = p; p += d;
    lp.ln2_g = p; p += d;
    lp.ln2_b = p; p += d;
    lp.w1 = p; p += ff * d;
    lp.b1 = p; p += ff;
    lp.w2 = p; p += d * ff;
    lp.b2 = p;
    return lp;
}

Model Model::build(const ModelConfig & config) {
    config.validate();
    Model m;
    m.config_ = config;
    m.layout_ = ModuleLayout(config.n_layers, config.n_heads, config.d_model);
    m.layout_params();
    m.params_.assign(m.total_, 0.0f);

    const std::size_t d  = config.d_model;
    const std::size_t ff = config.ff_dim();
    Rng rng(config.seed);
    auto fill_uniform = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            m.params_[off + i] = static_cast<float>(rng.uniform(-kInitRange, kInitRange));
        }
    };
    auto fill_ones = [&](std::size_t off, std::size_t n) {
        std::fill_n(m.params_.begin() + static_cast<std::ptrdiff_t>(off), n, 1.0f);
    };

    fill_uniform(m.off_tok_, config.vocab_size * d);
    // fan-in scaled so projected media tokens sit at the scale of the positional code
    const double media_range = 1.0 / std::sqrt(static_cast<double>(config.frame_dim));
    for (std::size_t i = 0; i < d * static_cast<std::size_t>(config.frame_dim); ++i) {
        m.params_[m.off_media_w_ + i] = static_cast<float>(rng.uniform(-media_range, media_range));
    }
    for (int l = 0; l < config.n_layers; ++l) {
        std::size_t off = m.off_layers_ + m.layer_stride_ * l;
        fill_ones(off, d);          off += 2 * d;   // ln1 gain, bias stays 0
        fill_uniform(off, 4 * d * d); off += 4 * d * d;
        off += d;                                   // bo
        fill_ones(off, d);          off += 2 * d;   // ln2
        fill_uniform(off, ff * d);  off += ff * d;
        off += ff;                                  // b1
        fill_uniform(off, d * ff);
    }
    fill_ones(m.off_lnf_g_, d);
    fill_uniform(m.off_unembed_, config.vocab_size * d);
    return m;
}

Model Model::build_planted(const ModelConfig & config, std::vector<PlantSpec> plants) {
    Model m = build(config);
    m.plants_ = std::move(plants);
    m.validate_plants();
    return m;
}

Model Model::from_parts(const ModelConfig & config, std::vector<float> params, std::vector<PlantSpec> plants) {
    config.validate();
    Model m;
    m.config_ = config;
    m.layout_ = ModuleLayout(config.n_layers, config.n_heads, config.d_model);
    m.layout_params();
    if (params.size() != m.total_) {
        fail(ErrorKind::Corrupt, "parameter count " + std::to_string(params.size()) + " does not match config (" +
                                     std::to_string(m.total_) + ")");
    }
    m.params_ = std::move(params);
    m.plants_ = std::move(plants);
    m.validate_plants();
    return m;
}

void Model::validate_plants() const {
    for (const auto & p : plants_) {
        layout_.check(p.target);
        const std::size_t want = layout_.dim(p.target);
        if (p.delta.size() != want) {
            fail(ErrorKind::Config, "plant delta for " + p.target.str() + " has dim " + std::to_string(p.delta.size()) +
                                        ", module expects " + std::to_string(want));
        }
    }
}

std::uint32_t Model::checksum() const {
    return crc32_floats(params_);
}

std::uint32_t Model::backbone_checksum() const {
    const std::size_t begin = off_media_w_;
    const std::size_t end   = off_layers_ + layer_stride_;
    return crc32_floats(std::span<const float>(params_).subspan(begin, end - begin));
}

std::string Model::fingerprint() const {
    std::uint64_t h = fnv1a64_floats(params_);
    for (const auto & p : plants_) {
        h = fnv1a64(p.target.str(), h);
        h = fnv1a64(to_string(p.trigger), h);
        h = fnv1a64(p.rate_scaled ? "scaled" : "flat", h);
        h = fnv1a64_floats(p.delta, h);
    }
    return hex64(h);
}

Matrix pool_frames(const FrameSeq & media, int n_tokens) {
    media.validate();
    const std::size_t n  = media.frame_count();
    const std::size_t fd = media.frame_dim;
    const std::size_t s_count = static_cast<std::size_t>(n_tokens);
    Matrix out(s_count, fd);
    std::vector<double> acc(fd);
    for (std::size_t s = 0; s < s_count; ++s) {
        std::size_t begin = s * n / s_count;
        std::size_t end   = (s + 1) * n / s_count;
        begin = std::min(begin, n - 1);
        end   = std::max(end, begin + 1);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t f = begin; f < end; ++f) {
            const auto fr = media.frame(f);
            for (std::size_t k = 0; k < fd; ++k) {
                acc[k] += fr[k];
            }
        }
        const double inv = static_cast<double>(end - begin);
        for (std::size_t k = 0; k < fd; ++k) {
            out.at(s, k) = static_cast<float>(acc[k] / inv);
        }
    }
    return out;
}

EncodedPrompt encode_prompt(const Model & model, const FrameSeq & media, std::span<const Token> tokens) {
    const auto & cfg = model.config();
    media.validate();
    if (static_cast<int>(media.frame_dim) != cfg.frame_dim) {
        fail(ErrorKind::Input, "media frame_dim " + std::to_string(media.frame_dim) + " != model frame_dim " +
                                   std::to_string(cfg.frame_dim));
    }
    const std::size_t seq_len = static_cast<std::size_t>(cfg.media_tokens) + tokens.size();
    if (seq_len > static_cast<std::size_t>(cfg.max_seq_len)) {
        fail(ErrorKind::Length, "encoded prompt length " + std::to_string(seq_len) + " exceeds max_seq_len " +
                                    std::to_string(cfg.max_seq_len));
    }

    EncodedPrompt enc;
    enc.media_meta.frame_dim       = media.frame_dim;
    enc.media_meta.downsample_rate = media.downsample_rate;
    enc.media_meta.scene_segments  = media.scene_segments;
    enc.media_positions            = static_cast<std::size_t>(cfg.media_tokens);

    const std::size_t d = cfg.d_model;
    enc.x = Matrix(seq_len, d);
    const Matrix pooled = pool_frames(media, cfg.media_tokens);
    for (std::size_t s = 0; s < enc.media_positions; ++s) {
        matvec(model.media_w(), model.media_b(), pooled.row(s), d, enc.x.row(s));
        add_positional(enc.x.row(s), s);
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token t = tokens[i];
        if (t < 0 || t >= cfg.vocab_size) {
            fail(ErrorKind::Input, "token " + std::to_string(t) + " outside vocabulary");
        }
        const std::size_t pos = enc.media_positions + i;
        auto row = enc.x.row(pos);
        std::copy_n(model.tok_embed() + static_cast<std::size_t>(t) * d, d, row.begin());
        add_positional(row, pos);
    }
    return enc;
}

void append_token(const Model & model, EncodedPrompt & enc, Token token) {
    const auto & cfg = model.config();
    if (token < 0 || token >= cfg.vocab_size) {
        fail(ErrorKind::Input, "token " + std::to_string(token) + " outside vocabulary");
    }
    if (enc.x.rows + 1 > static_cast<std::size_t>(cfg.max_seq_len)) {
        fail(ErrorKind::Length, "sequence would exceed max_seq_len " + std::to_string(cfg.max_seq_len));
    }
    const std::size_t d = cfg.d_model;
    enc.x.data.resize((enc.x.rows + 1) * d);
    enc.x.rows += 1;
    auto row = enc.x.row(enc.x.rows - 1);
    std::copy_n(model.tok_embed() + static_cast<std::size_t>(token) * d, d, row.begin());
    add_positional(row, enc.x.rows - 1);
}

Matrix run_model(const Model & model, const EncodedPrompt & enc, const RunOptions & opts) {
    const auto & cfg    = model.config();
    const auto & layout = model.layout();
    const std::size_t T  = enc.x.rows;
    const std::size_t d  = cfg.d_model;
    const std::size_t nh = cfg.n_heads;
    const std::size_t dh = cfg.d_head();
    const std::size_t ff = cfg.ff_dim();
    const int n_blocks = opts.n_blocks < 0 ? cfg.n_layers : std::min(opts.n_blocks, cfg.n_layers);
    const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

    if (T == 0) {
        fail(ErrorKind::Input, "empty sequence");
    }
    if (opts.taps) {
        opts.taps->layout = layout;
        opts.taps->values.assign(layout.count(), {});
    }

    struct ActivePlant {
        const PlantSpec * spec;
        float             scale;
    };
    std::vector<ActivePlant> active;
    for (const auto & p : model.plants()) {
        if (p.fires_on(enc.media_meta)) {
            active.push_back({&p, p.scale_for(enc.media_meta)});
        }
    }

    auto edit = [&](const ModuleId & id, std::span<float> out, std::size_t pos) {
        for (const auto & ap : active) {
            if (ap.spec->target == id) {
                for (std::size_t k = 0; k < out.size(); ++k) {
                    out[k] += ap.scale * ap.spec->delta[k];
                }
            }
        }
        if (opts.steer && pos >= opts.steer->from_position) {
            for (const auto & add : opts.steer->adds) {
                if (add.module == id) {
                    for (std::size_t k = 0; k < out.size(); ++k) {
                        out[k] += add.vec[k];
                    }
                }
            }
        }
    };

    Matrix x = enc.x;
    Matrix h(T, d), q(T, d), k(T, d), v(T, d), z(T, d);
    std::vector<float> attn(d), scores(T), hidden(ff), mlp(d), normed(d);

    for (int l = 0; l < n_blocks; ++l) {
        const auto lp = model.layer(l);
        for (std::size_t t = 0; t < T; ++t) {
            layer_norm(x.row(t), lp.ln1_g, lp.ln1_b, h.row(t));
            matvec(lp.wq, nullptr, h.row(t), d, q.row(t));
            matvec(lp.wk, nullptr, h.row(t), d, k.row(t));
            matvec(lp.wv, nullptr, h.row(t), d, v.row(t));
        }
        for (std::size_t hd = 0; hd < nh; ++hd) {
            const std::size_t o = hd * dh;
            const ModuleId id = ModuleId::head_of(l, static_cast<int>(hd));
            for (std::size_t t = 0; t < T; ++t) {
                float mx = -INFINITY;
                for (std::size_t s = 0; s <= t; ++s) {
                    float dot = 0.0f;
                    for (std::size_t c = 0; c < dh; ++c) {
                        dot += q.at(t, o + c) * k.at(s, o + c);
                    }
                    scores[s] = dot * scale;
                    mx = std::max(mx, scores[s]);
                }
                float denom = 0.0f;
                for (std::size_t s = 0; s <= t; ++s) {
                    scores[s] = std::exp(scores[s] - mx);
                    denom += scores[s];
                }
                auto out = z.row(t).subspan(o, dh);
                std::fill(out.begin(), out.end(), 0.0f);
                for (std::size_t s = 0; s <= t; ++s) {
                    const float p = scores[s] / denom;
                    for (std::size_t c = 0; c < dh; ++c) {
                        out[c] += p * v.at(s, o + c);
                    }
                }
                edit(id, out, t);
            }
            if (opts.taps) {
                const auto last = z.row(T - 1).subspan(o, dh);
                opts.taps->values[layout.index(id)].assign(last.begin(), last.end());
            }
        }
        const ModuleId layer_id = ModuleId::layer_of(l);
        for (std::size_t t = 0; t < T; ++t) {
            auto xr = x.row(t);
            matvec(lp.wo, lp.bo, z.row(t), d, attn);
            for (std::size_t c = 0; c < d; ++c) {
                xr[c] += attn[c];
            }
            layer_norm(xr, lp.ln2_g, lp.ln2_b, normed);
            matvec(lp.w1, lp.b1, normed, ff, hidden);
            for (auto & hv : hidden) {
                hv = gelu(hv);
            }
            matvec(lp.w2, lp.b2, hidden, d, mlp);
            for (std::size_t c = 0; c < d; ++c) {
                xr[c] += mlp[c];
            }
            edit(layer_id, xr, t);
        }
        if (opts.taps) {
            const auto last = x.row(T - 1);
            opts.taps->values[layout.index(layer_id)].assign(last.begin(), last.end());
        }
    }

    if (opts.last_hidden) {
        const auto last = x.row(T - 1);
        opts.last_hidden->assign(last.begin(), last.end());
    }
    if (!opts.want_logits) {
        return {};
    }
    const std::size_t vocab = cfg.vocab_size;
    Matrix logits(T, vocab);
    for (std::size_t t = 0; t < T; ++t) {
        layer_norm(x.row(t), model.lnf_g(), model.lnf_b(), normed);
        matvec(model.unembed(), nullptr, normed, vocab, logits.row(t));
    }
    return logits;
}

ForwardResult forward_with_taps(const Model & model, const Prompt & prompt) {
    const EncodedPrompt enc = encode_prompt(model, prompt.media, prompt.question);
    ForwardResult res;
    RunOptions opts;
    opts.taps  = &res.taps;
    res.logits = run_model(model, enc, opts);
    return res;
}

Matrix forward(const Model & model, const Prompt & prompt) {
    const EncodedPrompt enc = encode_prompt(model, prompt.media, prompt.question);
    return run_model(model, enc, RunOptions{});
}

std::vector<float> backbone_features(const Model & model, const FrameSeq & media, std::span<const Token> question) {
    const EncodedPrompt enc = encode_prompt(model, media, question);
    std::vector<float> hidden;
    RunOptions opts;
    opts.n_blocks    = 1;
    opts.want_logits = false;
    opts.last_hidden = &hidden;
    run_model(model, enc, opts);
    return hidden;
}

// ---------------------------------------------------------------------------
// checkpoint

namespace {

io::json config_to_json(const ModelConfig & c) {
    return io::json{{"n_layers", c.n_layers},         {"n_heads", c.n_heads},     {"d_model", c.d_model},
                    {"d_ff", c.ff_dim()},             {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
                    {"frame_dim", c.frame_dim},       {"media_tokens", c.media_tokens}};
}

ModelConfig config_from_json(const io::json & j, std::uint64_t seed) {
    ModelConfig c;
    c.n_layers     = j.at("n_layers").get<int>();
    c.n_heads      = j.at("n_heads").get<int>();
    c.d_model      = j.at("d_model").get<int>();
    c.d_ff         = j.value("d_ff", 0);
    c.vocab_size   = j.at("vocab_size").get<int>();
    c.max_seq_len  = j.at("max_seq_len").get<int>();
    c.frame_dim    = j.at("frame_dim").get<int>();
    c.media_tokens = j.at("media_tokens").get<int>();
    c.seed         = seed;
    return c;
}

} // namespace

void save_model(const Model & model, const std::filesystem::path & dir) {
    std::filesystem::create_directories(dir);
    const std::uint32_t crc = io::write_f32_blob(dir / "params.bin", model.parameters());

    io::json plants = io::json::array();
    std::vector<float> plant_blob;
    for (const auto & p : model.plants()) {
        plants.push_back({{"kind", to_string(p.target.kind)},
                          {"layer", p.target.layer},
                          {"head", p.target.head},
                          {"trigger", to_string(p.trigger)},
                          {"rate_scaled", p.rate_scaled},
                          {"offset", plant_blob.size()},
                          {"dim", p.delta.size()}});
        plant_blob.insert(plant_blob.end(), p.delta.begin(), p.delta.end());
    }

    io::json manifest;
    manifest["schema_version"] = io::kSchemaVersion;
    manifest["kind"]           = "model";
    manifest["config"]         = config_to_json(model.config());
    manifest["seed"]           = model.config().seed;
    manifest["param_count"]    = model.parameters().size();
    manifest["checksum"]       = hex32(crc);
    manifest["fingerprint"]    = model.fingerprint();
    manifest["plants"]         = plants;
    if (!plant_blob.empty()) {
        manifest["plants_checksum"] = hex32(io::write_f32_blob(dir / "plants.bin", plant_blob));
        manifest["plants_count"]    = plant_blob.size();
    }
    io::write_json(dir / "manifest.json", manifest);
}

Model load_model(const std::filesystem::path & dir) {
    const io::json manifest = io::read_json(dir / "manifest.json");
    io::expect_schema(manifest, "model", dir / "manifest.json");
    const ModelConfig cfg = config_from_json(manifest.at("config"), manifest.at("seed").get<std::uint64_t>());
    const auto crc = static_cast<std::uint32_t>(std::stoul(manifest.at("checksum").get<std::string>(), nullptr, 16));
    std::vector<float> params = io::read_f32_blob(dir / "params.bin", manifest.at("param_count").get<std::size_t>(), crc);

    std::vector<PlantSpec> plants;
    const auto & pj = manifest.at("plants");
    if (!pj.empty()) {
        const auto pcrc = static_cast<std::uint32_t>(std::stoul(manifest.at("plants_checksum").get<std::string>(), nullptr, 16));
        const auto blob = io::read_f32_blob(dir / "plants.bin", manifest.at("plants_count").get<std::size_t>(), pcrc);
        for (const auto & p : pj) {
            PlantSpec spec;
            const ModuleKind kind = module_kind_from_string(p.at("kind").get<std::string>());
            spec.target      = {kind, p.at("layer").get<int>(), p.at("head").get<int>()};
            spec.trigger     = plant_trigger_from_string(p.at("trigger").get<std::string>());
            spec.rate_scaled = p.at("rate_scaled").get<bool>();
            const auto off = p.at("offset").get<std::size_t>();
            const auto dim = p.at("dim").get<std::size_t>();
            if (off + dim > blob.size()) {
                fail(ErrorKind::Corrupt, "plant table overruns plants.bin");
            }
            spec.delta.assign(blob.begin() + static_cast<std::ptrdiff_t>(off),
                              blob.begin() + static_cast<std::ptrdiff_t>(off + dim));
            plants.push_back(std::move(spec));
        }
    }
    return Model::from_parts(cfg, std::move(params), std::move(plants));
}

} // namespace tempsteer
