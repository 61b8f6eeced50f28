#include "tempsteer/common.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

namespace tempsteer {

const char * to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config:             return "config";
        case ErrorKind::Length:             return "length";
        case ErrorKind::Corrupt:            return "corrupt";
        case ErrorKind::Bounds:             return "bounds";
        case ErrorKind::Degenerate:         return "degenerate";
        case ErrorKind::Pipeline:           return "pipeline";
        case ErrorKind::Routing:            return "routing";
        case ErrorKind::BundleIncompatible: return "bundle-incompatible";
        case ErrorKind::Io:                 return "io";
        case ErrorKind::Input:              return "input";
    }
    return "unknown";
}

void fail(ErrorKind kind, const std::string & msg) {
    throw Error(kind, msg);
}

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r  = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_     = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) {
        fail(ErrorKind::Bounds, "Rng::below(0)");
    }
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = eng_();
    while (x >= limit) {
        x = eng_();
    }
    return static_cast<std::size_t>(x % n);
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t h) {
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h) {
    return fnv1a64(std::as_bytes(std::span<const char>(s.data(), s.size())), h);
}

std::uint64_t fnv1a64_floats(std::span<const float> v, std::uint64_t h) {
    return fnv1a64(std::as_bytes(v), h);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view component) {
    // splitmix64 finalizer over (root, name hash)
    std::uint64_t z = root ^ fnv1a64(component);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint32_t crc32_bytes(std::span<const std::byte> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    const auto * p = reinterpret_cast<const Bytef *>(bytes.data());
    std::size_t left = bytes.size();
    while (left > 0) {
        const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32_floats(std::span<const float> v) {
    return crc32_bytes(std::as_bytes(v));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> & fn) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_threads = std::min(hw, n);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += n_threads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto & w : workers) {
        w.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

double l2_norm(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) {
        s += static_cast<double>(x) * x;
    }
    return std::sqrt(s);
}

double cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (na * nb);
}

} // namespace tempsteer
