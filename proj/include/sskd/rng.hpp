#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sskd/errors.hpp"

namespace sskd {

/// Deterministic counter-based random stream.
///
/// Each draw is a pure function of (seed, stream id, draw index): the i-th
/// output is fin(key + i * GOLDEN) where `key` mixes seed and stream id and
/// `fin` is the 64-bit xor-shift-multiply finalizer. Streams are splittable:
/// substream(tag) derives an independent stream without touching this one.
/// Identical (seed, stream) always replays the identical sequence; uint64
/// draws are bit-exact across platforms (floating-point derivations match to
/// the last ulp of the platform libm).
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream), key_(mix_key(seed, stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t draws() const { return counter_; }

    std::uint64_t next_u64() {
        ++counter_;
        return finalize(key_ + counter_ * kGolden);
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; never zero, safe for log().
    double uniform_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per draw
    /// (the sine partner is discarded so every draw is self-contained).
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw InvalidParameterError("uniform_below: n must be positive");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// True with probability p. Consumes one draw only when 0 < p < 1.
    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    /// Derive an independent stream. Deterministic in (this stream's identity,
    /// tag); does not consume any draws.
    RngStream substream(std::uint64_t tag) const {
        RngStream s;
        s.seed_ = seed_;
        s.stream_ = finalize(key_ ^ finalize(tag + kSplitSalt));
        s.key_ = mix_key(s.seed_, s.stream_);
        return s;
    }

    RngStream substream(std::string_view tag) const {
        return substream(hash_tag(tag));
    }

    RngStream substream(std::string_view tag, std::uint64_t a) const {
        return substream(hash_tag(tag)).substream(a + 1);
    }

    RngStream substream(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
        return substream(hash_tag(tag)).substream(a + 1).substream(b + 1);
    }

    /// Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

    static std::uint64_t hash_tag(std::string_view tag) {
        // FNV-1a
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return h;
    }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
    static constexpr std::uint64_t kSplitSalt = 0xb5297a4d3f84d5a7ull;
    static constexpr double kPi = 3.141592653589793238462643383279502884;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix_key(std::uint64_t seed, std::uint64_t stream) {
        return finalize(finalize(seed + kGolden) ^ (stream * 0xd6e8feb86659fd93ull));
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace sskd
