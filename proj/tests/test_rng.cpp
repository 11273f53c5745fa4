#include <doctest.h>

#include "gpml/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <set>
#include <vector>

using namespace gpml;

// Published known-answer vectors for Philox4x32-10.
TEST_CASE("Philox known answers") {
    CHECK(Philox::permute({0, 0, 0, 0}, {0, 0}) ==
          Philox::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::permute({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Philox::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::permute({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Philox::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream layout: block 0 of seed 0 stream 0") {
    Philox rng(0);
    CHECK(rng() == 0xe169c58d6627e8d5ULL);
    CHECK(rng() == 0x9b00dbd8bc57ac4cULL);
}

TEST_CASE("same seed and stream reproduce; streams and seeds differ") {
    Philox a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    for (int i = 0; i < 100; ++i) {
        const auto va = a();
        CHECK(va == b());
        CHECK(va != c());
        CHECK(va != d());
    }
}

TEST_CASE("uniform ranges") {
    Philox rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        const double v = rng.uniform_open();
        CHECK((v > 0.0 && v < 1.0));
    }
}

TEST_CASE("normal draws are the inverse CDF of the open uniform") {
    Philox a(9), b(9);
    const boost::math::normal_distribution<> standard;
    for (int i = 0; i < 200; ++i) {
        const double z = a.normal();
        const double u = b.uniform_open();
        CHECK(z == doctest::Approx(boost::math::quantile(standard, u)).epsilon(1e-12));
    }
}

TEST_CASE("normal moments") {
    Philox rng(2024);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        s2 += z * z;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("bounded draws cover every residue evenly") {
    Philox rng(5);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto r = rng.bounded(7);
        REQUIRE(r < 7);
        ++counts[r];
    }
    // Chi-square with 6 degrees of freedom; 22.5 is its 0.999 quantile.
    double chi2 = 0;
    for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    CHECK(chi2 < 22.5);
    CHECK(rng.bounded(1) == 0);
}

TEST_CASE("child seeds") {
    CHECK(child_seed(10, 3) == (10ULL ^ 3ULL));
    std::set<std::uint64_t> seen;
    for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(child_seed(12345, r));
    CHECK(seen.size() == 1000);
}
