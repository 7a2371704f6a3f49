#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "wfcodec/subband_analysis.hpp"

using namespace wfc;

TEST_CASE("constant video puts all level-1 energy in hhh") {
    auto st = subband_energy(dwt3d(new_tensor(3, 5, 8, 8, 2.0f)), 1);
    CHECK_FALSE(st.degenerate);
    CHECK(st.bands[0].key == "hhh");
    CHECK(st.bands[0].energy_fraction == doctest::Approx(1.0).epsilon(1e-9));
    for (int k = 1; k < 8; ++k) CHECK(st.bands[k].energy_fraction <= 1e-12);
}

TEST_CASE("zero video is degenerate") {
    auto st = subband_energy(dwt3d(new_tensor(3, 5, 8, 8, 0.0f)), 1);
    CHECK(st.degenerate);
    for (const auto& b : st.bands) CHECK(b.energy_fraction == 0.0);
}

TEST_CASE("energy fractions sum to one and match the oracle") {
    Rng rng(21);
    auto v = random_normal(rng, Shape{2, 6, 8, 8}, 0, 1);
    auto s = dwt3d(v);
    auto st = subband_energy(s, 1);
    double sum = 0, total = 0;
    for (int k = 0; k < 8; ++k) {
        const double e = oracle::sum_squares(oracle::dwt3d_band(v, oracle::kKeys3D[k]));
        CHECK(st.bands[k].energy == doctest::Approx(e).epsilon(1e-5));
        sum += st.bands[k].energy_fraction;
        total += st.bands[k].energy;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-6);
    CHECK(std::fabs(total - oracle::sum_squares(v)) / oracle::sum_squares(v) <= 1e-4);
}

TEST_CASE("energy is invariant under sign flip") {
    Rng rng(22);
    auto v = random_normal(rng, Shape{1, 4, 8, 8}, 0, 1);
    auto s = dwt3d(v);
    auto flipped = s;
    for (auto& x : flipped.bands[2].data()) x = -x;
    auto a = subband_energy(s, 1), b = subband_energy(flipped, 1);
    for (int k = 0; k < 8; ++k) CHECK(a.bands[k].energy == b.bands[k].energy);
}

TEST_CASE("smooth fixture is dominated by hhh") {
    auto v = oracle::smooth_fixture(Shape{3, 33, 64, 64});
    double hhh = oracle::sum_squares(oracle::dwt3d_band(v, "hhh")), total = 0;
    for (auto key : oracle::kKeys3D) total += oracle::sum_squares(oracle::dwt3d_band(v, key));
    const double expected = hhh / total;
    CHECK(expected > 0.9);
    auto st = subband_energy(dwt3d(v), 1);
    CHECK(st.bands[0].energy_fraction == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("histogram entropy") {
    CHECK(histogram_entropy_bits(std::vector<float>{3, 3, 3, 3}, 256) == 0.0);
    CHECK(histogram_entropy_bits(std::vector<float>{-1, 1, -1, 1}, 2) == doctest::Approx(1.0));
    CHECK_THROWS_AS(histogram_entropy_bits(std::vector<float>{1, 2}, 1), ParameterError);

    Rng rng(23);
    auto u = random_uniform(rng, Shape{1, 1, 100, 100}, 0, 1);
    const double h = histogram_entropy_bits(u.data(), 256);
    CHECK(h >= 7.5);
    CHECK(h <= 8.0);

    // Affine rescaling leaves the histogram unchanged.
    Tensor scaled = u;
    for (auto& x : scaled.data()) x = 3.0f * x - 7.0f;
    CHECK(histogram_entropy_bits(scaled.data(), 256) == doctest::Approx(h).epsilon(1e-3));
}

TEST_CASE("entropy is bounded by log2(bins) for every band") {
    Rng rng(24);
    auto p = build_pyramid(random_normal(rng, Shape{3, 9, 16, 16}, 0, 1));
    auto levels = analyze_pyramid(p, 64);
    REQUIRE(levels.size() == 3);
    CHECK(levels[0].bands.size() == 8);
    CHECK(levels[2].bands.size() == 4);
    CHECK(levels[2].bands[0].key == "hh");
    for (const auto& l : levels)
        for (const auto& b : l.bands) {
            CHECK(b.entropy_bits >= 0.0);
            CHECK(b.entropy_bits <= 6.0 + 1e-12);
        }
    CHECK_THROWS_AS(subband_entropy(p.level1, 1, 1), ParameterError);
}
