#include "gpml/rng.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>

namespace gpml {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

Philox::Block Philox::permute(Block ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

Philox::result_type Philox::operator()() noexcept {
    if (used_ == 2) {
        const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_),
                        static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = permute(ctr, key_);
        ++block_;
        used_ = 0;
    }
    const int k = 2 * used_++;
    return static_cast<std::uint64_t>(buffer_[k]) |
           (static_cast<std::uint64_t>(buffer_[k + 1]) << 32);
}

double Philox::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Philox::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double Philox::normal() {
    const double u = uniform_open();
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

std::uint64_t Philox::bounded(std::uint64_t m) noexcept {
    // Rejection on the top of the range keeps every residue equally likely.
    const std::uint64_t limit = max() - (max() % m + 1) % m;
    for (;;) {
        const std::uint64_t r = (*this)();
        if (r <= limit) return r % m;
    }
}

}  // namespace gpml
