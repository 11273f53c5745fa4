#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gpml {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// The 64-bit seed is the Philox key; the 128-bit counter is split into a
/// 64-bit block index and a 64-bit stream id, so independent streams of one
/// seed never overlap. Each block yields two 64-bit outputs. Child seeds for
/// replication index r are `seed ^ r`.
///
/// Derived variates have a fixed stream layout: `uniform()` consumes one
/// output, `normal()` consumes one output (inverse-CDF transform) and
/// `bounded(m)` consumes one output per rejection round.
class Philox {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept;
    /// Standard normal via the inverse CDF of `uniform_open()`.
    double normal();
    /// Unbiased integer in [0, m); m must be > 0.
    std::uint64_t bounded(std::uint64_t m) noexcept;

    /// Ten-round Philox bijection; exposed for known-answer tests.
    static Block permute(Block counter, Key key) noexcept;

private:
    Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int used_ = 2;
};

inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return seed ^ index;
}

}  // namespace gpml
