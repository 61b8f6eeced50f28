#pragma once

// Offset vectors (normal minus hallucination-inducing activation), their
// per-module means, and steering bundles built from them.

#include "tempsteer/capture.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace tempsteer {

struct OffsetSet {
    ModuleLayout                    layout;
    std::vector<Matrix>             samples; // per module: one row v_n - v_h per pair
    std::vector<std::vector<float>> mean;    // per module: f32 sum in pair order / |D|

    const std::vector<float> & mean_of(const ModuleId & id) const { return mean[layout.index(id)]; }
    const Matrix &             samples_of(const ModuleId & id) const { return samples[layout.index(id)]; }
};

OffsetSet compute_offsets(const PairedActivations & acts);

// Mean offset of a single module without materializing the full set.
std::vector<float> mean_offset(const PairedActivations & acts, const ModuleId & id);

struct BundleEntry {
    ModuleId           module;
    std::vector<float> offset;
    double             accuracy = 0.0;
};

struct SteeringBundle {
    std::vector<BundleEntry> entries;
    float                    alpha          = 1.0f;
    TemporalClass            temporal_class = TemporalClass::Unrouted;
    bool                     normalized     = false;
    std::string              model_fingerprint;
    std::string              activations_fingerprint;

    std::optional<ModuleKind> kind() const;
    void validate() const;
    void check_compatible(const ModuleLayout & layout) const;
};

struct SelectedModule {
    ModuleId module;
    double   accuracy = 0.0;
};

struct BundleOptions {
    float         alpha          = 1.0f;
    TemporalClass temporal_class = TemporalClass::Unrouted;
    bool          normalize      = false; // store unit-L2 directions instead of raw means
};

SteeringBundle make_bundle(const PairedActivations & acts, std::span<const SelectedModule> selected,
                           const BundleOptions & opts);

// Same modules, offsets taken from a different activation set.
SteeringBundle rebase_bundle(const SteeringBundle & bundle, const PairedActivations & offsets_from);

// Directory: manifest.json + offsets.bin (rows in manifest order).
void           save_bundle(const SteeringBundle & bundle, const std::filesystem::path & dir);
SteeringBundle load_bundle(const std::filesystem::path & dir);

} // namespace tempsteer
