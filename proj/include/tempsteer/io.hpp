#pragma once

// On-disk container conventions shared by every artifact: a manifest.json
// next to raw little-endian f32 blobs, each blob guarded by a CRC-32.

#include "tempsteer/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tempsteer::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

json read_json(const fs::path & path);
void write_json(const fs::path & path, const json & doc);
void write_text(const fs::path & path, const std::string & text);
std::string read_text(const fs::path & path);

// Writes v as little-endian f32 and returns the CRC-32 of the written bytes.
std::uint32_t write_f32_blob(const fs::path & path, std::span<const float> v);

// Reads exactly `count` floats; any size or checksum mismatch is a Corrupt error.
std::vector<float> read_f32_blob(const fs::path & path, std::size_t count, std::uint32_t expected_crc);

// Manifest checks common to every container.
void expect_schema(const json & manifest, std::string_view kind, const fs::path & where);

// A directory that becomes visible under its final name only on commit().
// Destruction without commit removes the partial output.
class StagingDir {
public:
    explicit StagingDir(fs::path final_path);
    ~StagingDir();
    StagingDir(const StagingDir &) = delete;
    StagingDir & operator=(const StagingDir &) = delete;

    const fs::path & path() const { return temp_; }
    const fs::path & final_path() const { return final_; }
    void commit();

private:
    fs::path final_;
    fs::path temp_;
    bool     committed_ = false;
};

// f32 <-> json without loss: values are emitted as doubles that parse back exactly.
json floats_to_json(std::span<const float> v);
std::vector<float> floats_from_json(const json & j);

} // namespace tempsteer::io
