#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdt/wavelet.hpp"

using namespace vdt;

namespace {

double l2(const std::vector<double>& v) {
    double acc = 0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("constant volume: approximation carries everything, details vanish") {
    const double c = 1.7;
    LatentSpec spec{1, 1};
    Tensor x = Tensor::full({1, 4, 4, 4}, c);
    Tensor z = wavelet_encode(x, spec);
    CHECK(z.shape() == Shape{8, 2, 2, 2});
    const double expected = c * std::pow(std::sqrt(2.0), 3);
    for (int64_t i = 0; i < 8; ++i) CHECK(z.at({0, i / 4, (i / 2) % 2, i % 2}) ==
                                          doctest::Approx(expected).epsilon(1e-14));
    for (int64_t ch = 1; ch < 8; ++ch)
        for (int64_t i = 0; i < 8; ++i) CHECK(z.at({ch, i / 4, (i / 2) % 2, i % 2}) == 0.0);
}

TEST_CASE("single impulse at origin: all eight taps have magnitude (1/sqrt2)^3") {
    LatentSpec spec{1, 1};
    std::vector<double> v(8, 0.0);
    v[0] = 1.0;
    Tensor x = Tensor::from({1, 2, 2, 2}, v);
    Tensor z = wavelet_encode(x, spec);
    CHECK(z.shape() == Shape{8, 1, 1, 1});
    // direct 8-tap evaluation: the origin tap weight is +1/sqrt2 on every axis
    const double mag = std::pow(0.5 * std::sqrt(2.0), 3);
    for (int64_t ch = 0; ch < 8; ++ch)
        CHECK(std::abs(z.at({ch, 0, 0, 0})) == doctest::Approx(mag).epsilon(1e-14));
}

TEST_CASE("energy preservation (orthonormality)") {
    LatentSpec spec{2, 1};
    Rng rng(100);
    Tensor x = randn(rng, {1, 8, 8, 8});
    Tensor z = wavelet_encode(x, spec);
    CHECK(std::abs(l2(z.values()) - l2(x.values())) < 1e-10);
}

TEST_CASE("perfect reconstruction over 100 seeded volumes, levels=3") {
    LatentSpec spec{3, 1};
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Tensor x = randn(rng, {1, 16, 16, 16});
        Tensor back = wavelet_decode(wavelet_encode(x, spec), spec);
        double worst = 0;
        for (size_t i = 0; i < x.values().size(); ++i)
            worst = std::max(worst, std::abs(back.values()[i] - x.values()[i]));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("latent geometry contract: reduction 2^levels per axis") {
    LatentSpec spec{3, 1};
    Rng rng(7);
    Tensor x = randn(rng, {1, 16, 16, 16});
    Tensor z = wavelet_encode(x, spec);
    CHECK(z.shape() == Shape{512, 2, 2, 2});
    CHECK(spec.spatial_factor() == 8);  // levels=3 gives the 8x-per-axis contract
    CHECK(spec.latent_channels() == 512);
}

TEST_CASE("all-zero latent decodes to all-zero volume") {
    LatentSpec spec{1, 1};
    Tensor z = Tensor::zeros({8, 2, 2, 2});
    Tensor x = wavelet_decode(z, spec);
    for (double v : x.values()) CHECK(v == 0.0);
}

TEST_CASE("one-hot latent reproduces the matching Haar basis volume") {
    LatentSpec spec{1, 1};
    const double s = 1.0 / std::sqrt(2.0);
    // subband letters read (depth, height, width); tap sign -1 on offset 1 of a highpass axis
    auto tap = [&](int bit, int off) { return (bit && off) ? -s : s; };
    for (int band = 0; band < 8; ++band) {
        Tensor z = Tensor::zeros({8, 1, 1, 1});
        z.mutable_values()[static_cast<size_t>(band)] = 1.0;
        Tensor x = wavelet_decode(z, spec);
        int bd = (band >> 2) & 1, bh = (band >> 1) & 1, bw = band & 1;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    CHECK(x.at({0, i, j, k}) ==
                          doctest::Approx(tap(bd, i) * tap(bh, j) * tap(bw, k)).epsilon(1e-14));
    }
}

TEST_CASE("dimension errors") {
    LatentSpec spec{3, 1};
    Rng rng(1);
    CHECK_THROWS_AS(wavelet_encode(randn(rng, {1, 12, 16, 16}), spec), DimensionError);
    CHECK_THROWS_AS(wavelet_decode(randn(rng, {64, 2, 2, 2}), spec), DimensionError);
}
