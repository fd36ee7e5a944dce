#pragma once

#include <cstdint>
#include <string_view>

namespace epifit {

/// splitmix64 step: advances `state` and returns the next 64-bit output.
/// Used both as the library's generator and as the mixing function for
/// seed derivation, so every stream is reproducible from one master seed.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a label, used to give each named stream a distinct offset.
inline std::uint64_t hash_tag(std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derives an independent child seed from a master seed, a stream label and
/// an index. Streams with different labels or indices never share state, so
/// dataset sampling, weight init and batch shuffling can be reseeded
/// independently while staying reproducible end to end.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master ^ hash_tag(tag);
    splitmix64_next(s);
    s ^= 0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL;
    splitmix64_next(s);
    return splitmix64_next(s);
}

/// Minimal deterministic generator with a portable output sequence.
/// std::mt19937 plus the standard distributions would not reproduce across
/// library implementations; this produces identical bytes everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here: n is
    /// always tiny relative to 2^64 so the bias is far below observability.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Fisher-Yates shuffle of an index-addressable container.
    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

} // namespace epifit
