#pragma once

// Shared building blocks: error type, deterministic RNG, hashing, dense matrix.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tempsteer {

enum class ErrorKind {
    Config,             // invalid configuration or dimensions
    Length,             // prompt does not fit the context window
    Corrupt,            // checksum / schema / shape failure while reading data
    Bounds,             // index or count out of range
    Degenerate,         // data cannot support the requested fit
    Pipeline,           // dataset construction could not proceed
    Routing,            // no bundle for the routed class
    BundleIncompatible, // bundle dims or kinds do not match the model
    Io,                 // filesystem failure
    Input,              // malformed user input
};

const char * to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string & msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string & msg);

using Token  = std::int32_t;
using Tokens = std::vector<Token>;

// Portable RNG: std::mt19937_64 is fully specified by the standard, the
// distributions are not, so uniform/normal draws are derived by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }
    double        uniform();                 // [0, 1)
    double        uniform(double lo, double hi);
    double        normal();                  // N(0, 1), Box-Muller
    std::size_t   below(std::size_t n);      // [0, n)

    template <typename T>
    void shuffle(std::vector<T> & v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool   has_spare_ = false;
    double spare_     = 0.0;
};

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_floats(std::span<const float> v, std::uint64_t h = 0xcbf29ce484222325ULL);

// Child seed for a named component; adding a component never disturbs the others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view component);

std::uint32_t crc32_bytes(std::span<const std::byte> bytes);
std::uint32_t crc32_floats(std::span<const float> v);

std::string hex64(std::uint64_t v);
std::string hex32(std::uint32_t v);

struct Matrix {
    std::size_t        rows = 0;
    std::size_t        cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    std::span<float>       row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    float &       at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float         at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads. Callers
// write results into pre-sized slots so assembly order never depends on timing.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> & fn);

double l2_norm(std::span<const float> v);
double cosine(std::span<const float> a, std::span<const float> b);

} // namespace tempsteer
