#pragma once

// Synthetic video-QA corpus and the two-branch dataset construction pipeline:
// clean -> sort by frame count -> uniform-interval pools -> judge filtering.

#include "tempsteer/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace tempsteer {

enum class TemporalClass { Invariant, Variant, Unrouted };

const char *  to_string(TemporalClass c);
TemporalClass temporal_class_from_string(std::string_view s);

struct CorpusSample {
    std::string           id;
    FrameSeq              video;
    Tokens                question;
    Tokens                answer;
    int                   scene_segments = 1;
    std::set<std::string> quality_flags;

    std::size_t   frame_count() const { return video.frame_count(); }
    TemporalClass truth() const { return scene_segments >= 2 ? TemporalClass::Variant : TemporalClass::Invariant; }
};

using Corpus = std::vector<CorpusSample>;

struct FrameRange {
    int min = 1;
    int max = 1;
};

struct CorpusOptions {
    std::size_t   n                = 1000;
    FrameRange    invariant_frames = {16, 320};
    FrameRange    variant_frames   = {64, 1280};
    double        variant_fraction = 0.5;
    std::uint64_t seed             = 0;

    int    frame_dim        = 8;
    double frame_noise      = 0.1;  // per-frame jitter around the scene centroid
    double class_separation = 3.0;  // per-dimension gap between the two content priors
    std::uint64_t prior_seed = 0x7e3a1f;  // fixed content priors shared by all corpora
    int    min_segments     = 2;  // variant clips draw segments from [min, max]
    int    max_segments     = 4;

    double duplicate_fraction = 0.0;
    double flagged_fraction   = 0.0;
    double missing_fraction   = 0.0;

    int vocab_size   = 64;
    int question_min = 4;
    int question_max = 8;
    int answer_len   = 2;

    // When > 0 every frame count is a multiple of frame_align and scene
    // boundaries fall on the edges of `align_chunks` equal chunks, so stride
    // downsampling by any divisor of frame_align / align_chunks leaves
    // chunk-pooled features unchanged.
    int frame_align  = 0;
    int align_chunks = 4;
};

Corpus generate_corpus(const CorpusOptions & opts);

std::uint64_t content_hash(const FrameSeq & video);

// Drops duplicate videos (first occurrence wins), flagged samples and samples
// with an empty question or answer. Order is preserved.
Corpus clean(const Corpus & corpus);

// Picks indices floor(i * |corpus| / n) for i in [0, n).
Corpus uniform_interval_sample(const Corpus & sorted_by_frames, std::size_t n);

Corpus sort_by_frames(const Corpus & corpus);

struct PipelineConfig {
    std::size_t   target_pool_size = 1000;
    int           frame_threshold  = 200;
    double        tau              = 0.8;
    int           downsample_rate  = 4;
    std::uint64_t seed             = 0;

    void validate() const;
};

struct CandidatePools {
    Corpus d_t_pool;
    Corpus d_a_pool;
};

CandidatePools build_candidates(const Corpus & cleaned, const PipelineConfig & cfg);

struct JudgeVerdict {
    TemporalClass klass      = TemporalClass::Invariant;
    double        confidence = 1.0;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual JudgeVerdict judge(const CorpusSample & sample) const = 0;
    virtual std::string  name() const = 0;
};

// Reads generator ground truth. Confidence is 1 - noise * u and the class is
// flipped with probability flip_rate, with u drawn from a hash of (seed, id).
class SyntheticJudge : public Judge {
public:
    explicit SyntheticJudge(double confidence_noise = 0.0, double flip_rate = 0.0, std::uint64_t seed = 0)
        : noise_(confidence_noise), flip_rate_(flip_rate), seed_(seed) {}
    JudgeVerdict judge(const CorpusSample & sample) const override;
    std::string  name() const override;

private:
    double        noise_;
    double        flip_rate_;
    std::uint64_t seed_;
};

// Client for an external chat-model judge. The transport receives a JSON
// request body and returns the raw response body; the reply must carry
// {"answer": "Yes"|"No", "confidence": p} where "Yes" means temporal-variant.
class ExternalLlmJudge : public Judge {
public:
    using Transport = std::function<std::string(const std::string & request_body)>;

    ExternalLlmJudge(Transport transport, std::string model_name);
    JudgeVerdict judge(const CorpusSample & sample) const override;
    std::string  name() const override { return "external:" + model_; }

    static const char * prompt_template();
    std::string build_request(const CorpusSample & sample) const;
    static JudgeVerdict parse_reply(const std::string & body);

private:
    Transport   transport_;
    std::string model_;
};

struct FilterResult {
    Corpus                   d_a_f;
    Corpus                   d_t_f;
    std::vector<std::string> dropped;  // "<id>: <reason>"
};

FilterResult judge_filter(const Corpus & d_a_pool, const Corpus & d_t_pool, const Judge & judge, double tau);

nlohmann::ordered_json pipeline_stats(const Corpus & d_a_f, const Corpus & d_t_f);

struct PipelineResult {
    Corpus         cleaned;
    CandidatePools pools;
    FilterResult   filtered;
};

PipelineResult run_pipeline(const Corpus & corpus, const PipelineConfig & cfg, const Judge & judge);

// Corpus directory: corpus.jsonl (one sample per line, frames referenced by
// offset into frames.bin) + frames.bin + frames checksum in index.json.
void   save_corpus(const Corpus & corpus, const std::filesystem::path & dir);
Corpus load_corpus(const std::filesystem::path & dir);

std::string corpus_fingerprint(const Corpus & corpus);

} // namespace tempsteer
