#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace renewal_ldp {

/// Philox4x32-10 block function.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Deterministic stream of uniforms for one sample index under one master
/// seed. Streams for different indices are independent blocks of the same
/// counter-based generator, so results do not depend on how indices are
/// distributed over threads.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          index_lo_(static_cast<std::uint32_t>(index)), index_hi_(static_cast<std::uint32_t>(index >> 32)) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return block_[pos_++];
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() {
        const std::uint64_t a = next_u32() >> 5, b = next_u32() >> 6;
        return (static_cast<double>((a << 26) | b) + 0.5) * 0x1p-53;
    }

    /// Standard normal by the Box-Muller transform; the second variate is kept for the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t blocks_used() const { return counter_; }

private:
    void refill() {
        block_ = philox4x32_10({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                index_lo_, index_hi_},
                               key_);
        ++counter_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t index_lo_, index_hi_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace renewal_ldp
