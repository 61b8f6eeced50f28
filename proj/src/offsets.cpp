#include "tempsteer/offsets.hpp"

#include "tempsteer/io.hpp"

#include <cmath>
#include <set>

namespace tempsteer {

namespace {

std::vector<float> module_mean(const Matrix & vn, const Matrix & vh) {
    const std::size_t n = vn.rows;
    std::vector<float> sum(vn.cols, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = vn.row(i);
        const auto b = vh.row(i);
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += a[k] - b[k];
        }
    }
    const float denom = static_cast<float>(n);
    for (auto & s : sum) {
        s /= denom;
    }
    return sum;
}

void check_module(const PairedActivations & acts, std::size_t j) {
    const Matrix & vn = acts.normal[j];
    const Matrix & vh = acts.halluc[j];
    if (vn.rows != vh.rows || vn.cols != vh.cols || vn.data.size() != vn.rows * vn.cols ||
        vh.data.size() != vh.rows * vh.cols || vn.rows != acts.size()) {
        fail(ErrorKind::Corrupt, "dimension mismatch inside module " + acts.layout.id(j).str());
    }
}

} // namespace

OffsetSet compute_offsets(const PairedActivations & acts) {
    if (acts.size() == 0 || acts.module_count() == 0) {
        fail(ErrorKind::Input, "empty activation set");
    }
    OffsetSet out;
    out.layout = acts.layout;
    out.samples.resize(acts.module_count());
    out.mean.resize(acts.module_count());
    for (std::size_t j = 0; j < acts.module_count(); ++j) {
        check_module(acts, j);
        const Matrix & vn = acts.normal[j];
        const Matrix & vh = acts.halluc[j];
        Matrix diff(vn.rows, vn.cols);
        for (std::size_t k = 0; k < diff.data.size(); ++k) {
            diff.data[k] = vn.data[k] - vh.data[k];
        }
        out.samples[j] = std::move(diff);
        out.mean[j]    = module_mean(vn, vh);
    }
    return out;
}

std::vector<float> mean_offset(const PairedActivations & acts, const ModuleId & id) {
    if (acts.size() == 0) {
        fail(ErrorKind::Input, "empty activation set");
    }
    const std::size_t j = acts.layout.index(id);
    check_module(acts, j);
    return module_mean(acts.normal[j], acts.halluc[j]);
}

std::optional<ModuleKind> SteeringBundle::kind() const {
    if (entries.empty()) {
        return std::nullopt;
    }
    return entries.front().module.kind;
}

void SteeringBundle::validate() const {
    if (!(alpha >= 0.0f) || !std::isfinite(alpha)) {
        fail(ErrorKind::BundleIncompatible, "bundle alpha must be a finite non-negative number");
    }
    std::set<ModuleId> seen;
    for (const auto & e : entries) {
        if (e.module.kind != entries.front().module.kind) {
            fail(ErrorKind::BundleIncompatible, "bundle mixes head and layer entries");
        }
        if (!seen.insert(e.module).second) {
            fail(ErrorKind::BundleIncompatible, "bundle lists " + e.module.str() + " twice");
        }
    }
}

void SteeringBundle::check_compatible(const ModuleLayout & layout) const {
    validate();
    for (const auto & e : entries) {
        try {
            layout.check(e.module);
        } catch (const Error &) {
            fail(ErrorKind::BundleIncompatible, "bundle module " + e.module.str() + " does not exist in the model");
        }
        if (e.offset.size() != layout.dim(e.module)) {
            fail(ErrorKind::BundleIncompatible, "bundle entry " + e.module.str() + " has dim " +
                                                    std::to_string(e.offset.size()) + ", model expects " +
                                                    std::to_string(layout.dim(e.module)));
        }
    }
}

SteeringBundle make_bundle(const PairedActivations & acts, std::span<const SelectedModule> selected,
                           const BundleOptions & opts) {
    SteeringBundle b;
    b.alpha                   = opts.alpha;
    b.temporal_class          = opts.temporal_class;
    b.normalized              = opts.normalize;
    b.model_fingerprint       = acts.model_fingerprint;
    b.activations_fingerprint = acts.fingerprint();
    for (const auto & s : selected) {
        BundleEntry e;
        e.module   = s.module;
        e.offset   = mean_offset(acts, s.module);
        e.accuracy = s.accuracy;
        if (opts.normalize) {
            const double norm = l2_norm(e.offset);
            if (norm > 0.0) {
                for (auto & v : e.offset) {
                    v = static_cast<float>(v / norm);
                }
            }
        }
        b.entries.push_back(std::move(e));
    }
    b.validate();
    return b;
}

SteeringBundle rebase_bundle(const SteeringBundle & bundle, const PairedActivations & offsets_from) {
    std::vector<SelectedModule> selected;
    for (const auto & e : bundle.entries) {
        selected.push_back({e.module, e.accuracy});
    }
    BundleOptions opts{bundle.alpha, bundle.temporal_class, bundle.normalized};
    return make_bundle(offsets_from, selected, opts);
}

void save_bundle(const SteeringBundle & bundle, const std::filesystem::path & dir) {
    bundle.validate();
    std::filesystem::create_directories(dir);
    std::vector<float> rows;
    io::json table = io::json::array();
    for (const auto & e : bundle.entries) {
        table.push_back({{"kind", to_string(e.module.kind)},
                         {"layer", e.module.layer},
                         {"head", e.module.head},
                         {"dim", e.offset.size()},
                         {"accuracy", e.accuracy}});
        rows.insert(rows.end(), e.offset.begin(), e.offset.end());
    }
    const std::uint32_t crc = io::write_f32_blob(dir / "offsets.bin", rows);
    io::json manifest;
    manifest["schema_version"]          = io::kSchemaVersion;
    manifest["kind"]                    = "bundle";
    manifest["module_kind"]             = bundle.kind() ? to_string(*bundle.kind()) : "none";
    manifest["count"]                   = bundle.entries.size();
    manifest["alpha"]                   = static_cast<double>(bundle.alpha);
    manifest["temporal_class"]          = to_string(bundle.temporal_class);
    manifest["normalized"]              = bundle.normalized;
    manifest["model_fingerprint"]       = bundle.model_fingerprint;
    manifest["activations_fingerprint"] = bundle.activations_fingerprint;
    manifest["offsets_floats"]          = rows.size();
    manifest["offsets_checksum"]        = hex32(crc);
    manifest["modules"]                 = table;
    io::write_json(dir / "manifest.json", manifest);
}

SteeringBundle load_bundle(const std::filesystem::path & dir) {
    const io::json manifest = io::read_json(dir / "manifest.json");
    io::expect_schema(manifest, "bundle", dir / "manifest.json");
    const auto crc = static_cast<std::uint32_t>(std::stoul(manifest.at("offsets_checksum").get<std::string>(), nullptr, 16));
    const auto rows = io::read_f32_blob(dir / "offsets.bin", manifest.at("offsets_floats").get<std::size_t>(), crc);

    SteeringBundle b;
    b.alpha                   = static_cast<float>(manifest.at("alpha").get<double>());
    b.temporal_class          = temporal_class_from_string(manifest.at("temporal_class").get<std::string>());
    b.normalized              = manifest.at("normalized").get<bool>();
    b.model_fingerprint       = manifest.at("model_fingerprint").get<std::string>();
    b.activations_fingerprint = manifest.at("activations_fingerprint").get<std::string>();
    std::size_t off = 0;
    for (const auto & m : manifest.at("modules")) {
        BundleEntry e;
        e.module   = {module_kind_from_string(m.at("kind").get<std::string>()), m.at("layer").get<int>(),
                      m.at("head").get<int>()};
        e.accuracy = m.at("accuracy").get<double>();
        const std::size_t dim = m.at("dim").get<std::size_t>();
        if (off + dim > rows.size()) {
            fail(ErrorKind::Corrupt, "bundle module table overruns offsets.bin");
        }
        e.offset.assign(rows.begin() + static_cast<std::ptrdiff_t>(off), rows.begin() + static_cast<std::ptrdiff_t>(off + dim));
        off += dim;
        b.entries.push_back(std::move(e));
    }
    if (off != rows.size() || b.entries.size() != manifest.at("count").get<std::size_t>()) {
        fail(ErrorKind::Corrupt, "bundle manifest disagrees with offsets.bin");
    }
    try {
        b.validate();
    } catch (const Error & e) {
        fail(ErrorKind::Corrupt, std::string("invalid bundle on disk: ") + e.what());
    }
    return b;
}

} // namespace tempsteer
