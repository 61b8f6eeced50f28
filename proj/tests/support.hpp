#pragma once

#include "tempsteer/harness.hpp"
#include "tempsteer/io.hpp"
#include "tempsteer/scenarios.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

namespace tst {

using namespace tempsteer;
namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string & tag) {
        path = fs::temp_directory_path() / ("tempsteer-test-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    TempDir(const TempDir &) = delete;
    TempDir & operator=(const TempDir &) = delete;
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string & s) const { return path / s; }
};

inline ModelConfig small_config(std::uint64_t seed = 7) {
    ModelConfig c;
    c.n_layers = 2;
    c.n_heads  = 4;
    c.d_model  = 32;
    c.seed     = seed;
    return c;
}

inline Corpus small_corpus(std::size_t n, std::uint64_t seed) {
    return generate_corpus(scenarios::planted_corpus_options(n, seed));
}

inline std::string slurp(const fs::path & p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void flip_byte(const fs::path & p, std::size_t at) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(at));
    char c = 0;
    f.read(&c, 1);
    c = static_cast<char>(c ^ 0x5a);
    f.seekp(static_cast<std::streamoff>(at));
    f.write(&c, 1);
}

inline void truncate_file(const fs::path & p, std::size_t keep) {
    fs::resize_file(p, keep);
}

template <typename F>
ErrorKind error_kind_of(F && fn) {
    try {
        fn();
    } catch (const Error & e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Input;
}

// Rows-identical tap sets.
inline bool same_taps(const TapSet & a, const TapSet & b) {
    return a.values == b.values;
}

} // namespace tst
