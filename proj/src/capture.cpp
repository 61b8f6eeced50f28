#include "tempsteer/capture.hpp"

#include "tempsteer/io.hpp"

#include <cstdio>

namespace tempsteer {

PromptPair make_pair(const CorpusSample & sample, int rate) {
    if (rate < 1) {
        fail(ErrorKind::Input, "downsample rate must be >= 1");
    }
    if (sample.frame_count() < static_cast<std::size_t>(rate)) {
        fail(ErrorKind::Input, "sample " + sample.id + " has " + std::to_string(sample.frame_count()) +
                                   " frames, fewer than rate " + std::to_string(rate));
    }
    PromptPair p;
    p.pair_id         = sample.id;
    p.normal.media    = sample.video;
    p.normal.media.scene_segments = sample.scene_segments;
    p.normal.question = sample.question;
    p.normal.answer   = sample.answer;
    p.halluc.media    = downsample(p.normal.media, rate);
    p.halluc.question = sample.question;
    p.halluc.answer   = sample.answer;
    p.answer          = sample.answer;
    return p;
}

std::vector<PromptPair> make_pairs(const Corpus & corpus, int rate) {
    std::vector<PromptPair> pairs;
    pairs.reserve(corpus.size());
    for (const auto & s : corpus) {
        pairs.push_back(make_pair(s, rate));
    }
    return pairs;
}

std::string dataset_fingerprint(std::span<const PromptPair> pairs) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto & p : pairs) {
        h = fnv1a64(p.pair_id, h);
        for (const Prompt * pr : {&p.normal, &p.halluc}) {
            h = fnv1a64_floats(pr->media.data, h);
            h = fnv1a64(std::to_string(pr->media.downsample_rate) + "/" + std::to_string(pr->media.scene_segments), h);
            for (Token t : pr->question) {
                h = fnv1a64(std::to_string(t) + ",", h);
            }
        }
    }
    return hex64(h);
}

void PairedActivations::validate() const {
    if (pair_ids.empty()) {
        fail(ErrorKind::Corrupt, "activation set is empty");
    }
    if (normal.size() != layout.count() || halluc.size() != layout.count()) {
        fail(ErrorKind::Corrupt, "activation set has " + std::to_string(normal.size()) + " modules, layout expects " +
                                     std::to_string(layout.count()));
    }
    for (std::size_t j = 0; j < normal.size(); ++j) {
        const std::size_t dim = layout.dim(layout.id(j));
        for (const Matrix * m : {&normal[j], &halluc[j]}) {
            if (m->rows != pair_ids.size() || m->cols != dim || m->data.size() != m->rows * m->cols) {
                fail(ErrorKind::Corrupt, "module " + layout.id(j).str() + " has inconsistent vector shape");
            }
        }
    }
}

std::string PairedActivations::fingerprint() const {
    std::uint64_t h = fnv1a64(model_fingerprint);
    h = fnv1a64(dataset_fingerprint, h);
    for (const auto & id : pair_ids) {
        h = fnv1a64(id, h);
    }
    for (std::size_t j = 0; j < normal.size(); ++j) {
        h = fnv1a64_floats(normal[j].data, h);
        h = fnv1a64_floats(halluc[j].data, h);
    }
    return hex64(h);
}

PairedActivations collect_pairs(const Model & model, std::span<const PromptPair> pairs) {
    if (pairs.empty()) {
        fail(ErrorKind::Input, "collect_pairs needs at least one pair");
    }
    const ModuleLayout & layout = model.layout();
    const std::size_t n = pairs.size();

    std::vector<TapSet> taps_n(n), taps_h(n);
    parallel_for(n, [&](std::size_t i) {
        try {
            taps_n[i] = forward_with_taps(model, pairs[i].normal).taps;
            taps_h[i] = forward_with_taps(model, pairs[i].halluc).taps;
        } catch (const Error & e) {
            throw Error(e.kind(), "pair " + pairs[i].pair_id + ": " + e.what());
        }
    });

    PairedActivations acts;
    acts.layout              = layout;
    acts.model_fingerprint   = model.fingerprint();
    acts.dataset_fingerprint = dataset_fingerprint(pairs);
    for (const auto & p : pairs) {
        acts.pair_ids.push_back(p.pair_id);
    }
    for (std::size_t j = 0; j < layout.count(); ++j) {
        const std::size_t dim = layout.dim(layout.id(j));
        Matrix mn(n, dim), mh(n, dim);
        for (std::size_t i = 0; i < n; ++i) {
            std::copy(taps_n[i].values[j].begin(), taps_n[i].values[j].end(), mn.row(i).begin());
            std::copy(taps_h[i].values[j].begin(), taps_h[i].values[j].end(), mh.row(i).begin());
        }
        acts.normal.push_back(std::move(mn));
        acts.halluc.push_back(std::move(mh));
    }
    return acts;
}

PairedActivations concat(const PairedActivations & a, const PairedActivations & b) {
    a.validate();
    b.validate();
    if (!(a.layout == b.layout)) {
        fail(ErrorKind::Input, "cannot pool activations from differently shaped models");
    }
    if (a.model_fingerprint != b.model_fingerprint) {
        fail(ErrorKind::Input, "cannot pool activations captured from different models");
    }
    PairedActivations out;
    out.layout              = a.layout;
    out.model_fingerprint   = a.model_fingerprint;
    out.dataset_fingerprint = hex64(fnv1a64(b.dataset_fingerprint, fnv1a64(a.dataset_fingerprint)));
    out.pair_ids            = a.pair_ids;
    out.pair_ids.insert(out.pair_ids.end(), b.pair_ids.begin(), b.pair_ids.end());
    auto join = [](const Matrix & x, const Matrix & y) {
        Matrix m(x.rows + y.rows, x.cols);
        std::copy(x.data.begin(), x.data.end(), m.data.begin());
        std::copy(y.data.begin(), y.data.end(), m.data.begin() + static_cast<std::ptrdiff_t>(x.data.size()));
        return m;
    };
    for (std::size_t j = 0; j < a.module_count(); ++j) {
        out.normal.push_back(join(a.normal[j], b.normal[j]));
        out.halluc.push_back(join(a.halluc[j], b.halluc[j]));
    }
    return out;
}

PairedActivations scaled(const PairedActivations & acts, float c) {
    PairedActivations out = acts;
    for (std::size_t j = 0; j < out.module_count(); ++j) {
        for (auto & v : out.normal[j].data) {
            v *= c;
        }
        for (auto & v : out.halluc[j].data) {
            v *= c;
        }
    }
    return out;
}

void save_activations(const PairedActivations & acts, const std::filesystem::path & dir) {
    acts.validate();
    std::filesystem::create_directories(dir);
    io::json modules = io::json::array();
    for (std::size_t j = 0; j < acts.module_count(); ++j) {
        const ModuleId id = acts.layout.id(j);
        char name[32];
        std::snprintf(name, sizeof(name), "module_%05zu.bin", j);
        std::vector<float> blob = acts.normal[j].data;
        blob.insert(blob.end(), acts.halluc[j].data.begin(), acts.halluc[j].data.end());
        const std::uint32_t crc = io::write_f32_blob(dir / name, blob);
        modules.push_back({{"index", j},
                           {"kind", to_string(id.kind)},
                           {"layer", id.layer},
                           {"head", id.head},
                           {"dim", acts.normal[j].cols},
                           {"file", name},
                           {"checksum", hex32(crc)}});
    }
    io::json manifest;
    manifest["schema_version"]      = io::kSchemaVersion;
    manifest["kind"]                = "activations";
    manifest["n_layers"]            = acts.layout.n_layers();
    manifest["n_heads"]             = acts.layout.n_heads();
    manifest["d_model"]             = acts.layout.d_model();
    manifest["d_head"]              = acts.layout.d_head();
    manifest["count"]               = acts.size();
    manifest["pair_ids"]            = acts.pair_ids;
    manifest["model_fingerprint"]   = acts.model_fingerprint;
    manifest["dataset_fingerprint"] = acts.dataset_fingerprint;
    manifest["fingerprint"]         = acts.fingerprint();
    manifest["modules"]             = modules;
    io::write_json(dir / "manifest.json", manifest);
}

PairedActivations load_activations(const std::filesystem::path & dir) {
    const io::json manifest = io::read_json(dir / "manifest.json");
    io::expect_schema(manifest, "activations", dir / "manifest.json");
    PairedActivations acts;
    acts.layout = ModuleLayout(manifest.at("n_layers").get<int>(), manifest.at("n_heads").get<int>(),
                               manifest.at("d_model").get<int>());
    acts.pair_ids            = manifest.at("pair_ids").get<std::vector<std::string>>();
    acts.model_fingerprint   = manifest.at("model_fingerprint").get<std::string>();
    acts.dataset_fingerprint = manifest.at("dataset_fingerprint").get<std::string>();
    const std::size_t n = manifest.at("count").get<std::size_t>();
    if (n != acts.pair_ids.size()) {
        fail(ErrorKind::Corrupt, "activation count disagrees with pair_ids");
    }
    const auto & modules = manifest.at("modules");
    if (modules.size() != acts.layout.count()) {
        fail(ErrorKind::Corrupt, "activation manifest lists " + std::to_string(modules.size()) + " modules");
    }
    for (std::size_t j = 0; j < modules.size(); ++j) {
        const auto & m = modules[j];
        const ModuleId id{module_kind_from_string(m.at("kind").get<std::string>()), m.at("layer").get<int>(),
                          m.at("head").get<int>()};
        if (acts.layout.index(id) != j) {
            fail(ErrorKind::Corrupt, "module table out of order at " + id.str());
        }
        const std::size_t dim = m.at("dim").get<std::size_t>();
        if (dim != acts.layout.dim(id)) {
            fail(ErrorKind::Corrupt, "module " + id.str() + " dim mismatch");
        }
        const auto crc = static_cast<std::uint32_t>(std::stoul(m.at("checksum").get<std::string>(), nullptr, 16));
        const auto blob = io::read_f32_blob(dir / m.at("file").get<std::string>(), 2 * n * dim, crc);
        Matrix mn(n, dim), mh(n, dim);
        std::copy(blob.begin(), blob.begin() + static_cast<std::ptrdiff_t>(n * dim), mn.data.begin());
        std::copy(blob.begin() + static_cast<std::ptrdiff_t>(n * dim), blob.end(), mh.data.begin());
        acts.normal.push_back(std::move(mn));
        acts.halluc.push_back(std::move(mh));
    }
    acts.validate();
    return acts;
}

} // namespace tempsteer
