#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace coalsort {

// Error taxonomy mirrors the CLI exit-code contract:
// usage -> 2, io/format -> 3, numeric -> 4.
enum class ErrorKind { usage, io, numeric, logic };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::usage: return 2;
            case ErrorKind::io: return 3;
            case ErrorKind::numeric: return 4;
            case ErrorKind::logic: return 1;
        }
        return 1;
    }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

// ---------------------------------------------------------------------------
// Seeded random streams.
//
// Distributions are hand-rolled on top of mt19937_64 so that every draw is
// bit-stable across standard libraries; std::uniform_real_distribution makes
// no such promise. Sub-streams are derived by splitmix64-mixing the master
// seed with caller-supplied tags, so parallel per-image streams are
// schedule-independent.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
uint64_t derive_seed(uint64_t seed, uint64_t tag, Rest... rest) {
    return derive_seed(splitmix64(seed ^ splitmix64(tag)), rest...);
}

// Tag helper so stream names read as words at call sites.
inline uint64_t stream_tag(const char* name) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* p = name; *p; ++p) h = (h ^ uint64_t(uint8_t(*p))) * 0x100000001b3ULL;
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; draws two uniforms per pair, caches the second value.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // uniform integer in [0, n)
    size_t below(size_t n) { return n == 0 ? 0 : size_t(gen_() % n); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stable in-place Fisher-Yates (std::shuffle ordering is
// implementation-defined, this one is not).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

// Deterministic parallel map: workers own disjoint index ranges, outputs land
// in caller-owned slots, so the result is independent of scheduling.
inline void parallel_for(size_t n, unsigned threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = std::min<unsigned>(threads, unsigned(n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (size_t i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace coalsort
