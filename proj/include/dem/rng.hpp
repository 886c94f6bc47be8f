#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace dem {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 64-bit seed becomes the two-word key; the 128-bit counter starts at
/// zero and increments once per block of four 32-bit outputs. Outputs depend
/// only on (seed, position), so streams are reproducible across platforms and
/// trial k of an experiment simply uses seed `seed_base + k`.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed = 0) noexcept;

    /// The raw bijection: ten rounds applied to `counter` under `key`.
    static Block generate_block(Block counter, Key key) noexcept;

    std::uint32_t next_u32() noexcept;
    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

    /// Uniform integer in [0, bound); bound must be positive. Unbiased
    /// (Lemire's multiply-and-reject).
    std::uint64_t uniform_below(std::uint64_t bound) noexcept;

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    std::uint64_t seed() const noexcept { return seed_; }

    // UniformRandomBitGenerator
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept { return next_u64(); }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    Key key_;
    std::uint64_t block_index_ = 0;
    Block buffer_{};
    int used_ = 4;
};

}  // namespace dem
