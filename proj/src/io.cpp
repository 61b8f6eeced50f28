#include "tempsteer/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace tempsteer::io {

static_assert(std::endian::native == std::endian::little,
              "blob writers assume a little-endian host");

json read_json(const fs::path & path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception & e) {
        fail(ErrorKind::Corrupt, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path & path, const json & doc) {
    write_text(path, doc.dump(2) + "\n");
}

void write_text(const fs::path & path, const std::string & text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        fail(ErrorKind::Io, "short write to " + path.string());
    }
}

std::string read_text(const fs::path & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Io, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint32_t write_f32_blob(const fs::path & path, std::span<const float> v) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + path.string());
    }
    const auto bytes = std::as_bytes(v);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorKind::Io, "short write to " + path.string());
    }
    return crc32_bytes(bytes);
}

std::vector<float> read_f32_blob(const fs::path & path, std::size_t count, std::uint32_t expected_crc) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) {
        fail(ErrorKind::Io, "cannot stat " + path.string());
    }
    if (size != count * sizeof(float)) {
        fail(ErrorKind::Corrupt, "checksum error: " + path.string() + " holds " + std::to_string(size) +
                                     " bytes, expected " + std::to_string(count * sizeof(float)));
    }
    std::vector<float> v(count);
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(size));
    if (!in) {
        fail(ErrorKind::Io, "short read from " + path.string());
    }
    const std::uint32_t crc = crc32_floats(v);
    if (crc != expected_crc) {
        fail(ErrorKind::Corrupt, "checksum error: " + path.string() + " crc " + hex32(crc) +
                                     " != manifest " + hex32(expected_crc));
    }
    return v;
}

void expect_schema(const json & manifest, std::string_view kind, const fs::path & where) {
    if (!manifest.contains("schema_version") || !manifest["schema_version"].is_number_integer()) {
        fail(ErrorKind::Corrupt, "missing schema_version in " + where.string());
    }
    const int version = manifest["schema_version"].get<int>();
    if (version != kSchemaVersion) {
        fail(ErrorKind::Corrupt, "schema version mismatch in " + where.string() + ": found " +
                                     std::to_string(version) + ", expected " + std::to_string(kSchemaVersion));
    }
    if (manifest.value("kind", std::string{}) != kind) {
        fail(ErrorKind::Corrupt, where.string() + " is not a " + std::string(kind) + " manifest");
    }
}

StagingDir::StagingDir(fs::path final_path) : final_(std::move(final_path)) {
    if (final_.has_parent_path()) {
        fs::create_directories(final_.parent_path());
    }
    temp_ = final_;
    temp_ += ".tmp-" + std::to_string(::getpid());
    std::error_code ec;
    fs::remove_all(temp_, ec);
    fs::create_directories(temp_);
}

StagingDir::~StagingDir() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(temp_, ec);
    }
}

void StagingDir::commit() {
    std::error_code ec;
    if (fs::exists(final_)) {
        fs::remove_all(final_, ec);
        if (ec) {
            fail(ErrorKind::Io, "cannot replace " + final_.string() + ": " + ec.message());
        }
    }
    fs::rename(temp_, final_, ec);
    if (ec) {
        fail(ErrorKind::Io, "cannot publish " + final_.string() + ": " + ec.message());
    }
    committed_ = true;
}

json floats_to_json(std::span<const float> v) {
    json arr = json::array();
    for (float x : v) {
        arr.push_back(static_cast<double>(x));
    }
    return arr;
}

std::vector<float> floats_from_json(const json & j) {
    std::vector<float> v;
    v.reserve(j.size());
    for (const auto & x : j) {
        v.push_back(static_cast<float>(x.get<double>()));
    }
    return v;
}

} // namespace tempsteer::io
