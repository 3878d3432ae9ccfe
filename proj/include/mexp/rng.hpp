#pragma once

// Counter-based random streams. Each (seed, path, stream) triple addresses an
// independent Philox4x32-10 sequence, so a path draws the same numbers no
// matter which worker simulates it or in which order.

#include <array>
#include <cstdint>
#include <limits>

namespace mexp {

class PhiloxEngine {
public:
    using result_type = std::uint64_t;

    PhiloxEngine(std::uint64_t seed, std::uint32_t path, std::uint32_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, path, stream} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ >= 2) refill();
        const auto lo = static_cast<std::uint64_t>(block_[2 * used_]);
        const auto hi = static_cast<std::uint64_t>(block_[2 * used_ + 1]);
        ++used_;
        return (hi << 32) | lo;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() {
        std::array<std::uint32_t, 4> x = counter_;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
            x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        block_ = x;
        used_ = 0;
        if (++counter_[0] == 0) ++counter_[1];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 2;
};

/// Stream identifiers within one path.
enum class Stream : std::uint32_t { kChain = 1, kBrownian = 2, kOpinion = 3, kParticles = 4 };

inline PhiloxEngine make_stream(std::uint64_t seed, std::uint64_t path, Stream s) {
    return PhiloxEngine(seed, static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(s));
}

}  // namespace mexp
