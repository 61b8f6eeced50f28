#include "tempsteer/corpus.hpp"

#include "tempsteer/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_set>

namespace tempsteer {

const char * to_string(TemporalClass c) {
    switch (c) {
        case TemporalClass::Invariant: return "invariant";
        case TemporalClass::Variant:   return "variant";
        case TemporalClass::Unrouted:  return "unrouted";
    }
    return "unknown";
}

TemporalClass temporal_class_from_string(std::string_view s) {
    if (s == "invariant") {
        return TemporalClass::Invariant;
    }
    if (s == "variant") {
        return TemporalClass::Variant;
    }
    if (s == "unrouted") {
        return TemporalClass::Unrouted;
    }
    fail(ErrorKind::Input, "unknown temporal class '" + std::string(s) + "'");
}

namespace {

int draw_frames(Rng & rng, const FrameRange & range, int align) {
    int f = range.min + static_cast<int>(rng.below(static_cast<std::size_t>(range.max - range.min + 1)));
    if (align > 0) {
        f = std::max(align, (f + align - 1) / align * align);
    }
    return f;
}

// Scene index for every frame.
std::vector<int> scene_layout(Rng & rng, int frames, int segments, const CorpusOptions & opts) {
    std::vector<int> scene(static_cast<std::size_t>(frames), 0);
    if (segments <= 1) {
        return scene;
    }
    if (opts.frame_align > 0) {
        const int chunks = opts.align_chunks;
        for (int c = 0; c < chunks; ++c) {
            const int s     = c * segments / chunks;
            const int begin = c * frames / chunks;
            const int end   = (c + 1) * frames / chunks;
            std::fill(scene.begin() + begin, scene.begin() + end, s);
        }
        return scene;
    }
    std::vector<int> cuts;
    std::vector<int> candidates(static_cast<std::size_t>(frames - 1));
    for (int i = 0; i < frames - 1; ++i) {
        candidates[static_cast<std::size_t>(i)] = i + 1;
    }
    for (int i = 0; i < segments - 1; ++i) {
        const std::size_t pick = i + rng.below(candidates.size() - i);
        std::swap(candidates[static_cast<std::size_t>(i)], candidates[pick]);
        cuts.push_back(candidates[static_cast<std::size_t>(i)]);
    }
    std::sort(cuts.begin(), cuts.end());
    int s = 0;
    std::size_t next = 0;
    for (int f = 0; f < frames; ++f) {
        while (next < cuts.size() && f >= cuts[next]) {
            ++s;
            ++next;
        }
        scene[static_cast<std::size_t>(f)] = s;
    }
    return scene;
}

} // namespace

Corpus generate_corpus(const CorpusOptions & opts) {
    if (opts.n == 0) {
        fail(ErrorKind::Config, "corpus size must be >= 1");
    }
    for (const FrameRange * r : {&opts.invariant_frames, &opts.variant_frames}) {
        if (r->min < 1 || r->max < r->min) {
            fail(ErrorKind::Config, "empty frame count range [" + std::to_string(r->min) + ", " +
                                        std::to_string(r->max) + "]");
        }
    }
    if (opts.variant_fraction < 0.0 || opts.variant_fraction > 1.0) {
        fail(ErrorKind::Config, "variant_fraction must lie in [0, 1]");
    }
    if (opts.frame_dim <= 0 || opts.min_segments < 2 || opts.max_segments < opts.min_segments || opts.vocab_size <= 2 || opts.question_min < 1 ||
        opts.question_max < opts.question_min || opts.answer_len < 1) {
        fail(ErrorKind::Config, "invalid corpus generator options");
    }
    if (opts.frame_align > 0 && (opts.align_chunks < opts.max_segments || opts.frame_align % opts.align_chunks != 0)) {
        fail(ErrorKind::Config, "aligned corpora need align_chunks >= max_segments dividing frame_align");
    }
    if (opts.frame_align == 0 && opts.variant_frames.min < opts.max_segments) {
        fail(ErrorKind::Config, "variant frame range must allow max_segments scenes");
    }

    const std::size_t fd = static_cast<std::size_t>(opts.frame_dim);

    // Content priors: one mean per class, shared across corpora.
    Rng prior_rng(opts.prior_seed);
    std::vector<double> mu_inv(fd), mu_var(fd);
    for (std::size_t k = 0; k < fd; ++k) {
        const double sign = prior_rng.uniform() < 0.5 ? -1.0 : 1.0;
        mu_inv[k] = 0.5 * opts.class_separation * sign;
        mu_var[k] = -mu_inv[k];
    }

    const auto n_variant = static_cast<std::size_t>(std::llround(static_cast<double>(opts.n) * opts.variant_fraction));
    std::vector<char> is_variant(opts.n, 0);
    std::fill_n(is_variant.begin(), n_variant, 1);
    Rng class_rng(derive_seed(opts.seed, "classes"));
    class_rng.shuffle(is_variant);

    Corpus corpus;
    corpus.reserve(opts.n);
    for (std::size_t i = 0; i < opts.n; ++i) {
        Rng rng(derive_seed(opts.seed, "sample/" + std::to_string(i)));
        CorpusSample s;
        char id[32];
        std::snprintf(id, sizeof(id), "s%06zu", i);
        s.id = id;

        const bool variant = is_variant[i];
        const int frames = draw_frames(rng, variant ? opts.variant_frames : opts.invariant_frames, opts.frame_align);
        s.scene_segments = variant ? opts.min_segments + static_cast<int>(rng.below(static_cast<std::size_t>(
                                                      opts.max_segments - opts.min_segments + 1)))
                                   : 1;
        s.scene_segments = std::min(s.scene_segments, frames);
        const auto & mu = variant ? mu_var : mu_inv;

        std::vector<std::vector<double>> centroids(static_cast<std::size_t>(s.scene_segments), std::vector<double>(fd));
        for (auto & c : centroids) {
            for (std::size_t k = 0; k < fd; ++k) {
                c[k] = mu[k] + rng.normal();
            }
        }
        const auto scene = scene_layout(rng, frames, s.scene_segments, opts);
        s.video.frame_dim      = fd;
        s.video.scene_segments = s.scene_segments;
        s.video.data.resize(static_cast<std::size_t>(frames) * fd);
        for (int f = 0; f < frames; ++f) {
            const auto & c = centroids[static_cast<std::size_t>(scene[static_cast<std::size_t>(f)])];
            for (std::size_t k = 0; k < fd; ++k) {
                const double jitter = opts.frame_noise > 0.0 ? opts.frame_noise * rng.normal() : 0.0;
                s.video.data[static_cast<std::size_t>(f) * fd + k] = static_cast<float>(c[k] + jitter);
            }
        }

        const int q_len = opts.question_min +
                          static_cast<int>(rng.below(static_cast<std::size_t>(opts.question_max - opts.question_min + 1)));
        for (int t = 0; t < q_len; ++t) {
            s.question.push_back(static_cast<Token>(2 + rng.below(static_cast<std::size_t>(opts.vocab_size - 2))));
        }
        for (int t = 0; t < opts.answer_len; ++t) {
            s.answer.push_back(static_cast<Token>(2 + rng.below(static_cast<std::size_t>(opts.vocab_size - 2))));
        }
        corpus.push_back(std::move(s));
    }

    // Data-quality defects, drawn from their own stream.
    Rng defect_rng(derive_seed(opts.seed, "defects"));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const double u_dup = defect_rng.uniform();
        const double u_flag = defect_rng.uniform();
        const double u_kind = defect_rng.uniform();
        const double u_miss = defect_rng.uniform();
        const std::size_t pick = i > 0 ? defect_rng.below(i) : 0;
        if (i > 0 && u_dup < opts.duplicate_fraction) {
            // copy an earlier video of the same class so class counts stay exact
            for (std::size_t back = 0; back < i; ++back) {
                const std::size_t j = (pick + back) % i;
                if (is_variant[j] == is_variant[i]) {
                    corpus[i].video          = corpus[j].video;
                    corpus[i].scene_segments = corpus[j].scene_segments;
                    break;
                }
            }
        }
        if (u_flag < opts.flagged_fraction) {
            corpus[i].quality_flags.insert(u_kind < 0.5 ? "blur" : "corrupt");
        }
        if (u_miss < opts.missing_fraction) {
            corpus[i].answer.clear();
        }
    }
    return corpus;
}

std::uint64_t content_hash(const FrameSeq & video) {
    std::uint64_t h = fnv1a64(std::to_string(video.frame_dim));
    return fnv1a64_floats(video.data, h);
}

Corpus clean(const Corpus & corpus) {
    Corpus out;
    std::unordered_set<std::uint64_t> seen;
    for (const auto & s : corpus) {
        if (!s.quality_flags.empty() || s.question.empty() || s.answer.empty() || s.frame_count() == 0) {
            continue;
        }
        if (!seen.insert(content_hash(s.video)).second) {
            continue;
        }
        out.push_back(s);
    }
    return out;
}

Corpus uniform_interval_sample(const Corpus & sorted_by_frames, std::size_t n) {
    const std::size_t size = sorted_by_frames.size();
    if (n > size) {
        fail(ErrorKind::Bounds, "cannot draw " + std::to_string(n) + " samples from " + std::to_string(size));
    }
    Corpus out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(sorted_by_frames[i * size / n]);
    }
    return out;
}

Corpus sort_by_frames(const Corpus & corpus) {
    Corpus sorted = corpus;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CorpusSample & a, const CorpusSample & b) { return a.frame_count() < b.frame_count(); });
    return sorted;
}

void PipelineConfig::validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) {
        fail(ErrorKind::Config, "tau must lie in (0, 1]");
    }
    if (frame_threshold < 1 || downsample_rate < 1 || target_pool_size < 1) {
        fail(ErrorKind::Config, "frame_threshold, downsample_rate and target_pool_size must be >= 1");
    }
}

CandidatePools build_candidates(const Corpus & cleaned, const PipelineConfig & cfg) {
    cfg.validate();
    if (cleaned.empty()) {
        fail(ErrorKind::Pipeline, "cleaned corpus is empty");
    }
    const Corpus sorted = sort_by_frames(cleaned);
    CandidatePools pools;
    pools.d_t_pool = uniform_interval_sample(sorted, std::min(cfg.target_pool_size, sorted.size()));

    Corpus short_clips;
    for (const auto & s : sorted) {
        if (s.frame_count() <= static_cast<std::size_t>(cfg.frame_threshold)) {
            short_clips.push_back(s);
        }
    }
    if (short_clips.empty()) {
        fail(ErrorKind::Pipeline, "no sample has at most " + std::to_string(cfg.frame_threshold) + " frames");
    }
    pools.d_a_pool = uniform_interval_sample(short_clips, std::min(cfg.target_pool_size, short_clips.size()));
    return pools;
}

JudgeVerdict SyntheticJudge::judge(const CorpusSample & sample) const {
    Rng rng(derive_seed(seed_, "judge/" + sample.id));
    const double u_conf = rng.uniform();
    const double u_flip = rng.uniform();
    JudgeVerdict v;
    v.klass = sample.truth();
    if (u_flip < flip_rate_) {
        v.klass = v.klass == TemporalClass::Variant ? TemporalClass::Invariant : TemporalClass::Variant;
    }
    v.confidence = 1.0 - noise_ * u_conf;
    return v;
}

std::string SyntheticJudge::name() const {
    if (noise_ == 0.0 && flip_rate_ == 0.0) {
        return "oracle";
    }
    std::ostringstream ss;
    ss << "synthetic(noise=" << noise_ << ",flip=" << flip_rate_ << ",seed=" << seed_ << ")";
    return ss.str();
}

ExternalLlmJudge::ExternalLlmJudge(Transport transport, std::string model_name)
    : transport_(std::move(transport)), model_(std::move(model_name)) {}

const char * ExternalLlmJudge::prompt_template() {
    return "You will be shown a video ({frame_count} frames) and a question about it.\n"
           "Question: {question}\n"
           "Decide whether answering requires tracking changes over time: several events, scene "
           "transitions or an ordering of actions (temporal-variant), or whether a single event "
           "without scene changes suffices (temporal-invariant).\n"
           "Reply with JSON {\"answer\": \"Yes\" or \"No\", \"confidence\": number in [0, 1]}, "
           "where \"Yes\" means temporal-variant.";
}

std::string ExternalLlmJudge::build_request(const CorpusSample & sample) const {
    std::string question;
    for (std::size_t i = 0; i < sample.question.size(); ++i) {
        question += (i ? " " : "") + std::to_string(sample.question[i]);
    }
    std::string prompt = prompt_template();
    auto substitute = [&](const std::string & key, const std::string & value) {
        const auto pos = prompt.find(key);
        if (pos != std::string::npos) {
            prompt.replace(pos, key.size(), value);
        }
    };
    substitute("{frame_count}", std::to_string(sample.frame_count()));
    substitute("{question}", question);

    io::json req;
    req["model"]       = model_;
    req["temperature"] = 0;
    req["messages"]    = io::json::array({io::json{{"role", "user"}, {"content", prompt}}});
    req["metadata"]    = {{"sample_id", sample.id}};
    return req.dump();
}

JudgeVerdict ExternalLlmJudge::parse_reply(const std::string & body) {
    io::json j;
    try {
        j = io::json::parse(body);
    } catch (const io::json::exception & e) {
        fail(ErrorKind::Input, std::string("judge reply is not JSON: ") + e.what());
    }
    const std::string answer = j.value("answer", std::string{});
    if (answer != "Yes" && answer != "No") {
        fail(ErrorKind::Input, "judge reply lacks a Yes/No answer");
    }
    JudgeVerdict v;
    v.klass      = answer == "Yes" ? TemporalClass::Variant : TemporalClass::Invariant;
    v.confidence = std::clamp(j.value("confidence", 0.0), 0.0, 1.0);
    return v;
}

JudgeVerdict ExternalLlmJudge::judge(const CorpusSample & sample) const {
    if (!transport_) {
        fail(ErrorKind::Config, "external judge has no transport");
    }
    return parse_reply(transport_(build_request(sample)));
}

FilterResult judge_filter(const Corpus & d_a_pool, const Corpus & d_t_pool, const Judge & judge, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        fail(ErrorKind::Config, "tau must lie in (0, 1]");
    }
    FilterResult res;
    std::map<std::string, std::optional<JudgeVerdict>> verdicts;
    std::unordered_set<std::string> logged;

    auto surviving = [&](const CorpusSample & s) -> std::optional<JudgeVerdict> {
        auto it = verdicts.find(s.id);
        if (it == verdicts.end()) {
            std::optional<JudgeVerdict> v;
            std::string reason;
            try {
                v = judge.judge(s);
                if (v->confidence < tau) {
                    std::ostringstream ss;
                    ss << "ambiguous (" << to_string(v->klass) << ", confidence " << v->confidence << " < tau " << tau
                       << ")";
                    reason = ss.str();
                    v.reset();
                }
            } catch (const std::exception & e) {
                reason = std::string("judge failure: ") + e.what();
                v.reset();
            }
            if (!v && logged.insert(s.id).second) {
                res.dropped.push_back(s.id + ": " + reason);
            }
            it = verdicts.emplace(s.id, v).first;
        }
        return it->second;
    };

    std::unordered_set<std::string> in_t;
    for (const auto & s : d_a_pool) {
        if (auto v = surviving(s); v && v->klass == TemporalClass::Invariant) {
            res.d_a_f.push_back(s);
        }
    }
    for (const auto & s : d_t_pool) {
        if (auto v = surviving(s); v && v->klass == TemporalClass::Variant && in_t.insert(s.id).second) {
            res.d_t_f.push_back(s);
        }
    }
    // variant items rejected from the invariant branch join the variant set
    for (const auto & s : d_a_pool) {
        if (auto v = surviving(s); v && v->klass == TemporalClass::Variant && in_t.insert(s.id).second) {
            res.d_t_f.push_back(s);
        }
    }
    return res;
}

nlohmann::ordered_json pipeline_stats(const Corpus & d_a_f, const Corpus & d_t_f) {
    auto summarize = [](const Corpus & c) {
        io::json j;
        j["size"] = c.size();
        if (c.empty()) {
            j["mean_frames"] = nullptr;
        } else {
            double total = 0.0;
            for (const auto & s : c) {
                total += static_cast<double>(s.frame_count());
            }
            j["mean_frames"] = total / static_cast<double>(c.size());
        }
        return j;
    };
    io::json stats;
    stats["d_a_f"] = summarize(d_a_f);
    stats["d_t_f"] = summarize(d_t_f);
    stats["reference"] = {{"d_a_f", {{"size", 422}, {"mean_frames", 104.37}}},
                          {"d_t_f", {{"size", 574}, {"mean_frames", 786.49}}}};
    return stats;
}

PipelineResult run_pipeline(const Corpus & corpus, const PipelineConfig & cfg, const Judge & judge) {
    cfg.validate();
    PipelineResult res;
    res.cleaned  = clean(corpus);
    res.pools    = build_candidates(res.cleaned, cfg);
    res.filtered = judge_filter(res.pools.d_a_pool, res.pools.d_t_pool, judge, cfg.tau);
    return res;
}

void save_corpus(const Corpus & corpus, const std::filesystem::path & dir) {
    std::filesystem::create_directories(dir);
    std::vector<float> frames;
    std::string lines;
    for (const auto & s : corpus) {
        io::json j;
        j["id"]              = s.id;
        j["frames_offset"]   = frames.size() / std::max<std::size_t>(1, s.video.frame_dim);
        j["frame_count"]     = s.frame_count();
        j["frame_dim"]       = s.video.frame_dim;
        j["downsample_rate"] = s.video.downsample_rate;
        j["scene_segments"]  = s.scene_segments;
        j["question"]        = s.question;
        j["answer"]          = s.answer;
        j["quality_flags"]   = s.quality_flags;
        if (!frames.empty() && frames.size() % s.video.frame_dim != 0) {
            fail(ErrorKind::Input, "corpus mixes frame dimensions");
        }
        frames.insert(frames.end(), s.video.data.begin(), s.video.data.end());
        lines += j.dump() + "\n";
    }
    io::write_text(dir / "corpus.jsonl", lines);
    const std::uint32_t crc = io::write_f32_blob(dir / "frames.bin", frames);

    io::json index;
    index["schema_version"]  = io::kSchemaVersion;
    index["kind"]            = "corpus";
    index["count"]           = corpus.size();
    index["frame_floats"]    = frames.size();
    index["frames_checksum"] = hex32(crc);
    index["fingerprint"]     = corpus_fingerprint(corpus);
    io::write_json(dir / "index.json", index);
}

Corpus load_corpus(const std::filesystem::path & dir) {
    const io::json index = io::read_json(dir / "index.json");
    io::expect_schema(index, "corpus", dir / "index.json");
    const auto crc = static_cast<std::uint32_t>(std::stoul(index.at("frames_checksum").get<std::string>(), nullptr, 16));
    const std::vector<float> frames = io::read_f32_blob(dir / "frames.bin", index.at("frame_floats").get<std::size_t>(), crc);

    Corpus corpus;
    std::istringstream in(io::read_text(dir / "corpus.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const io::json j = io::json::parse(line);
        CorpusSample s;
        s.id                         = j.at("id").get<std::string>();
        s.video.frame_dim            = j.at("frame_dim").get<std::size_t>();
        s.video.downsample_rate      = j.at("downsample_rate").get<int>();
        s.scene_segments             = j.at("scene_segments").get<int>();
        s.video.scene_segments       = s.scene_segments;
        s.question                   = j.at("question").get<Tokens>();
        s.answer                     = j.at("answer").get<Tokens>();
        s.quality_flags              = j.at("quality_flags").get<std::set<std::string>>();
        const std::size_t off        = j.at("frames_offset").get<std::size_t>() * s.video.frame_dim;
        const std::size_t n          = j.at("frame_count").get<std::size_t>() * s.video.frame_dim;
        if (off + n > frames.size()) {
            fail(ErrorKind::Corrupt, "sample " + s.id + " overruns frames.bin");
        }
        s.video.data.assign(frames.begin() + static_cast<std::ptrdiff_t>(off),
                            frames.begin() + static_cast<std::ptrdiff_t>(off + n));
        corpus.push_back(std::move(s));
    }
    if (corpus.size() != index.at("count").get<std::size_t>()) {
        fail(ErrorKind::Corrupt, "corpus.jsonl line count disagrees with index.json");
    }
    return corpus;
}

std::string corpus_fingerprint(const Corpus & corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto & s : corpus) {
        h = fnv1a64(s.id, h);
        h = fnv1a64_floats(s.video.data, h);
        h = fnv1a64(std::to_string(s.scene_segments) + "/" + std::to_string(s.video.downsample_rate), h);
        for (Token t : s.question) {
            h = fnv1a64(std::to_string(t) + ",", h);
        }
        h = fnv1a64("|", h);
        for (Token t : s.answer) {
            h = fnv1a64(std::to_string(t) + ",", h);
        }
        for (const auto & f : s.quality_flags) {
            h = fnv1a64(f, h);
        }
    }
    return hex64(h);
}

} // namespace tempsteer
