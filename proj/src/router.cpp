#include "tempsteer/router.hpp"

#include "tempsteer/io.hpp"

#include <cmath>
#include <future>
#include <numbers>

namespace tempsteer {

void RouterConfig::validate() const {
    if (train_per_class < 1 || batch_size < 1 || epochs < 1 || warmup_steps < 0) {
        fail(ErrorKind::Config, "router config: counts must be positive");
    }
    if (!(learning_rate > 0.0)) {
        fail(ErrorKind::Config, "router config: learning rate must be positive");
    }
    if (schedule != "cosine" && schedule != "constant") {
        fail(ErrorKind::Config, "router config: unknown schedule '" + schedule + "'");
    }
}

nlohmann::ordered_json RouterConfig::to_json() const {
    return {{"train_per_class", train_per_class}, {"learning_rate", learning_rate}, {"batch_size", batch_size},
            {"epochs", epochs},                   {"warmup_steps", warmup_steps},   {"schedule", schedule},
            {"seed", seed}};
}

RouterConfig RouterConfig::from_json(const nlohmann::ordered_json & j) {
    RouterConfig c;
    c.train_per_class = j.value("train_per_class", c.train_per_class);
    c.learning_rate   = j.value("learning_rate", c.learning_rate);
    c.batch_size      = j.value("batch_size", c.batch_size);
    c.epochs          = j.value("epochs", c.epochs);
    c.warmup_steps    = j.value("warmup_steps", c.warmup_steps);
    c.schedule        = j.value("schedule", c.schedule);
    c.seed            = j.value("seed", c.seed);
    return c;
}

double scheduled_lr(const RouterConfig & cfg, std::size_t step, std::size_t total) {
    const auto warm = static_cast<std::size_t>(cfg.warmup_steps);
    if (step < warm) {
        return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warm);
    }
    if (cfg.schedule == "constant" || total <= warm) {
        return cfg.learning_rate;
    }
    const double progress = static_cast<double>(step - warm) / static_cast<double>(total - warm);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double RouterHead::score(std::span<const float> f) const {
    if (f.size() != w.size()) {
        fail(ErrorKind::Input, "router expects " + std::to_string(w.size()) + " features, got " + std::to_string(f.size()));
    }
    double s = b;
    for (std::size_t k = 0; k < f.size(); ++k) {
        s += static_cast<double>(w[k]) * ((static_cast<double>(f[k]) - feat_mean[k]) / feat_std[k]);
    }
    return s;
}

Router::Router(std::shared_ptr<const Model> model, RouterHead head) : model_(std::move(model)), head_(std::move(head)) {
    if (!model_) {
        fail(ErrorKind::Config, "router needs a backbone model");
    }
    const std::size_t d = static_cast<std::size_t>(model_->config().d_model);
    if (head_.w.size() != d || head_.feat_mean.size() != d || head_.feat_std.size() != d) {
        fail(ErrorKind::Input, "router head does not match backbone width " + std::to_string(d));
    }
}

TemporalClass Router::classify(const FrameSeq & media, std::span<const Token> question) const {
    const auto f = backbone_features(*model_, media, question);
    return head_.score(f) > 0.0 ? TemporalClass::Variant : TemporalClass::Invariant;
}

namespace {

struct Example {
    std::vector<float> features;
    int                label = 0;
};

std::vector<Example> featurize(const Model & model, const std::vector<const CorpusSample *> & samples,
                               const std::vector<int> & labels) {
    std::vector<Example> out(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        out[i].features = backbone_features(model, samples[i]->video, samples[i]->question);
        out[i].label    = labels[i];
    });
    return out;
}

double accuracy_of(const RouterHead & head, const std::vector<Example> & xs) {
    if (xs.empty()) {
        return 0.0;
    }
    std::size_t ok = 0;
    for (const auto & e : xs) {
        ok += (head.score(e.features) > 0.0) == (e.label == 1) ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(xs.size());
}

} // namespace

Router train_router(const Corpus & d_a_f, const Corpus & d_t_f, std::shared_ptr<const Model> model,
                    const RouterConfig & cfg) {
    cfg.validate();
    if (!model) {
        fail(ErrorKind::Config, "router needs a backbone model");
    }
    if (d_a_f.size() < cfg.train_per_class || d_t_f.size() < cfg.train_per_class) {
        fail(ErrorKind::Config, "router needs " + std::to_string(cfg.train_per_class) + " samples per class, have " +
                                    std::to_string(d_a_f.size()) + " invariant / " + std::to_string(d_t_f.size()) +
                                    " variant");
    }

    std::vector<const CorpusSample *> train_s, val_s;
    std::vector<int> train_y, val_y;
    auto split = [&](const Corpus & c, int label, std::string_view tag) {
        std::vector<std::size_t> idx(c.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        Rng rng(derive_seed(cfg.seed, std::string("router/sample/") + std::string(tag)));
        rng.shuffle(idx);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (j < cfg.train_per_class) {
                train_s.push_back(&c[idx[j]]);
                train_y.push_back(label);
            } else {
                val_s.push_back(&c[idx[j]]);
                val_y.push_back(label);
            }
        }
    };
    split(d_a_f, 0, "invariant");
    split(d_t_f, 1, "variant");

    const std::uint32_t backbone_before = model->backbone_checksum();
    const auto train = featurize(*model, train_s, train_y);
    const auto val   = featurize(*model, val_s, val_y);
    const std::size_t d = static_cast<std::size_t>(model->config().d_model);

    RouterHead head;
    head.feat_mean.assign(d, 0.0f);
    head.feat_std.assign(d, 1.0f);
    head.w.assign(d, 0.0f);
    {
        std::vector<double> mu(d, 0.0), var(d, 0.0);
        for (const auto & e : train) {
            for (std::size_t k = 0; k < d; ++k) {
                mu[k] += e.features[k];
            }
        }
        for (auto & m : mu) {
            m /= static_cast<double>(train.size());
        }
        for (const auto & e : train) {
            for (std::size_t k = 0; k < d; ++k) {
                const double c = e.features[k] - mu[k];
                var[k] += c * c;
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            const double sd = std::sqrt(var[k] / static_cast<double>(train.size()));
            head.feat_mean[k] = static_cast<float>(mu[k]);
            head.feat_std[k]  = sd > 1e-12 ? static_cast<float>(sd) : 1.0f;
        }
    }

    // standardized training matrix, using the stored float statistics
    std::vector<double> z(train.size() * d);
    for (std::size_t i = 0; i < train.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            z[i * d + k] = (static_cast<double>(train[i].features[k]) - head.feat_mean[k]) / head.feat_std[k];
        }
    }

    std::vector<double> w(d, 0.0), gw(d);
    double b = 0.0;
    const std::size_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps     = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
    std::size_t step = 0;

    Router best(model, head);
    best.config = cfg;
    double best_acc = -1.0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, "router/epoch/" + std::to_string(epoch)));
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t j = start; j < end; ++j) {
                const std::size_t i = order[j];
                const double * zr = &z[i * d];
                double s = b;
                for (std::size_t k = 0; k < d; ++k) {
                    s += w[k] * zr[k];
                }
                const double p = 1.0 / (1.0 + std::exp(-s));
                const double y = train[i].label;
                loss_sum += -(y * std::log(std::max(p, 1e-12)) + (1.0 - y) * std::log(std::max(1.0 - p, 1e-12)));
                const double err = p - y;
                for (std::size_t k = 0; k < d; ++k) {
                    gw[k] += err * zr[k];
                }
                gb += err;
            }
            const double lr  = scheduled_lr(cfg, step++, total_steps);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = 0; k < d; ++k) {
                w[k] -= lr * gw[k] * inv;
            }
            b -= lr * gb * inv;
        }

        RouterHead snap = head;
        for (std::size_t k = 0; k < d; ++k) {
            snap.w[k] = static_cast<float>(w[k]);
        }
        snap.b = static_cast<float>(b);
        const double acc = accuracy_of(snap, val.empty() ? train : val);
        best.history.push_back({epoch, loss_sum / static_cast<double>(train.size()), acc});
        if (acc > best_acc) {
            best_acc = acc;
            auto history = best.history;
            best = Router(model, snap);
            best.history    = std::move(history);
            best.best_epoch = epoch;
        }
    }
    best.config       = cfg;
    best.val_accuracy = best_acc;
    best.train_n      = train.size();
    best.val_n        = val.size();

    if (model->backbone_checksum() != backbone_before) {
        fail(ErrorKind::Corrupt, "backbone parameters changed during router training");
    }
    return best;
}

double ConfusionCounts::accuracy() const {
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(counts[0][0] + counts[1][1]) / static_cast<double>(n);
}

nlohmann::ordered_json ConfusionCounts::to_json() const {
    return {{"invariant", {{"routed_invariant", counts[0][0]}, {"routed_variant", counts[0][1]}}},
            {"variant", {{"routed_invariant", counts[1][0]}, {"routed_variant", counts[1][1]}}},
            {"total", total()},
            {"accuracy", accuracy()}};
}

ConfusionCounts route_eval(const TemporalClassifier & classifier, const Corpus & samples) {
    std::vector<TemporalClass> pred(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        pred[i] = classifier.classify(samples[i].video, samples[i].question);
    });
    ConfusionCounts cc;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int t = samples[i].truth() == TemporalClass::Variant ? 1 : 0;
        const int p = pred[i] == TemporalClass::Variant ? 1 : 0;
        ++cc.counts[t][p];
    }
    return cc;
}

const SteeringBundle & RoutedBundles::for_class(TemporalClass c) const {
    const SteeringBundle * b = c == TemporalClass::Invariant ? invariant : c == TemporalClass::Variant ? variant : nullptr;
    if (!b) {
        fail(ErrorKind::Routing, std::string("no steering bundle for routed class ") + to_string(c));
    }
    return *b;
}

RoutedResult route_and_generate(const TemporalClassifier & classifier, const RoutedBundles & bundles,
                                const Model & model, const GenerationRequest & req) {
    auto decision = std::async(std::launch::async, [&] {
        return classifier.classify(req.prompt.media, req.prompt.question);
    });
    EncodedPrompt enc = encode_prompt(model, req.prompt.media, req.prompt.question);
    RoutedResult res;
    res.routed = decision.get(); // sync point: nothing has been injected yet
    const SteeringBundle & bundle = bundles.for_class(res.routed);
    res.generation = generate_encoded(model, std::move(enc), req.max_new_tokens, &bundle, req.alpha_override,
                                      req.keep_logits);
    return res;
}

void save_router(const Router & router, const std::filesystem::path & dir) {
    std::filesystem::create_directories(dir);
    const auto & h = router.head();
    std::vector<float> blob = h.feat_mean;
    blob.insert(blob.end(), h.feat_std.begin(), h.feat_std.end());
    blob.insert(blob.end(), h.w.begin(), h.w.end());
    blob.push_back(h.b);
    const std::uint32_t crc = io::write_f32_blob(dir / "head.bin", blob);

    io::json history = io::json::array();
    for (const auto & e : router.history) {
        history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
    }
    io::json m;
    m["schema_version"]    = io::kSchemaVersion;
    m["kind"]              = "router";
    m["feature_dim"]       = h.w.size();
    m["backbone_checksum"] = hex32(router.model().backbone_checksum());
    m["model_fingerprint"] = router.model().fingerprint();
    m["config"]            = router.config.to_json();
    m["val_accuracy"]      = router.val_accuracy;
    m["best_epoch"]        = router.best_epoch;
    m["train_n"]           = router.train_n;
    m["val_n"]             = router.val_n;
    m["history"]           = history;
    m["head_floats"]       = blob.size();
    m["head_checksum"]     = hex32(crc);
    io::write_json(dir / "manifest.json", m);
}

Router load_router(const std::filesystem::path & dir, std::shared_ptr<const Model> model) {
    const io::json m = io::read_json(dir / "manifest.json");
    io::expect_schema(m, "router", dir / "manifest.json");
    if (!model) {
        fail(ErrorKind::Config, "router needs a backbone model");
    }
    if (m.at("backbone_checksum").get<std::string>() != hex32(model->backbone_checksum())) {
        fail(ErrorKind::Input, "router was trained on a different backbone");
    }
    const std::size_t d = m.at("feature_dim").get<std::size_t>();
    const auto crc  = static_cast<std::uint32_t>(std::stoul(m.at("head_checksum").get<std::string>(), nullptr, 16));
    const auto blob = io::read_f32_blob(dir / "head.bin", 3 * d + 1, crc);
    RouterHead h;
    h.feat_mean.assign(blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(d));
    h.feat_std.assign(blob.begin() + static_cast<std::ptrdiff_t>(d), blob.begin() + static_cast<std::ptrdiff_t>(2 * d));
    h.w.assign(blob.begin() + static_cast<std::ptrdiff_t>(2 * d), blob.begin() + static_cast<std::ptrdiff_t>(3 * d));
    h.b = blob[3 * d];
    Router r(std::move(model), std::move(h));
    r.config       = RouterConfig::from_json(m.at("config"));
    r.val_accuracy = m.at("val_accuracy").get<double>();
    r.best_epoch   = m.at("best_epoch").get<int>();
    r.train_n      = m.at("train_n").get<std::size_t>();
    r.val_n        = m.at("val_n").get<std::size_t>();
    for (const auto & e : m.at("history")) {
        r.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(), e.at("val_accuracy").get<double>()});
    }
    return r;
}

} // namespace tempsteer
