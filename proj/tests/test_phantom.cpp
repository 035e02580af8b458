#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdt/metrics.hpp"
#include "vdt/phantom.hpp"

using namespace vdt;

TEST_CASE("same seed gives a bit-identical phantom") {
    Phantom a = generate_phantom(42, {32, 32, 32}, 2);
    Phantom b = generate_phantom(42, {32, 32, 32}, 2);
    CHECK(a.volume.values() == b.volume.values());
    CHECK(a.mask.values() == b.mask.values());
}

TEST_CASE("mask is one-hot at every voxel") {
    Phantom p = generate_phantom(7, {32, 32, 32}, 2);
    CHECK(p.mask.shape() == Shape{3, 32, 32, 32});
    int64_t voxels = 32 * 32 * 32;
    for (int64_t i = 0; i < voxels; ++i) {
        double total = 0;
        for (int64_t c = 0; c < 3; ++c) {
            double v = p.mask.values()[c * voxels + i];
            CHECK((v == 0.0 || v == 1.0));
            total += v;
        }
        CHECK(total == 1.0);
    }
}

TEST_CASE("intensity range and band separation support threshold prediction") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        Phantom p = generate_phantom(seed, {32, 32, 32}, 2);
        for (double v : p.volume.values()) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
        for (int label = 1; label <= 2; ++label) {
            Tensor pred = predict_mask_from_volume(p.volume, label);
            CHECK(dice(pred, mask_label(p.mask, label)) > 0.99);
        }
    }
}

TEST_CASE("each structure holds at least one percent of the volume") {
    const int64_t voxels = 32 * 32 * 32;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        Phantom p = generate_phantom(1000 + seed, {32, 32, 32}, 2);
        for (int label = 1; label <= 2; ++label) {
            const auto& m = mask_label(p.mask, label).values();
            int64_t count = 0;
            for (double v : m) count += v > 0.5;
            CHECK(count * 100 >= voxels);
        }
    }
}

TEST_CASE("dataset split sizes follow 75/5/20 by index") {
    PhantomDataset ds = phantom_dataset(5, 100, {16, 16, 16}, 1);
    CHECK(ds.items.size() == 100);
    CHECK(ds.indices(Split::Train).size() == 75);
    CHECK(ds.indices(Split::Val).size() == 5);
    CHECK(ds.indices(Split::Test).size() == 20);
    // split is by index: train first, then val, then test
    CHECK(ds.indices(Split::Train).front() == 0);
    CHECK(ds.indices(Split::Val).front() == 75);
    CHECK(ds.indices(Split::Test).front() == 80);

    PhantomDataset tiny = phantom_dataset(5, 4, {16, 16, 16}, 1);
    CHECK(tiny.indices(Split::Train).size() == 3);
    CHECK(tiny.indices(Split::Val).empty());
    CHECK(tiny.indices(Split::Test).size() == 1);
}

TEST_CASE("distinct seeds give pairwise distinct phantoms") {
    PhantomDataset ds = phantom_dataset(11, 6, {32, 32, 32}, 2);
    for (size_t i = 0; i < ds.items.size(); ++i)
        for (size_t j = i + 1; j < ds.items.size(); ++j)
            CHECK(ds.items[i].volume.values() != ds.items[j].volume.values());
}

TEST_CASE("real-phantom MS-SSIM diversity baseline sits strictly between 0.1 and 0.9") {
    PhantomDataset ds = phantom_dataset(21, 12, {32, 32, 32}, 2);
    Rng rng(99);
    double acc = 0;
    const int pairs = 40;
    auto mapped = [](const Tensor& v) {
        std::vector<double> m = v.values();
        for (auto& x : m) x = 0.5 * (x + 1.0);
        return Tensor::from({32, 32, 32}, std::move(m));
    };
    for (int p = 0; p < pairs; ++p) {
        int64_t i = rng.uniform_int(0, 11);
        int64_t j = rng.uniform_int(0, 10);
        if (j >= i) ++j;
        acc += ms_ssim(mapped(ds.items[i].volume), mapped(ds.items[j].volume));
    }
    double mean = acc / pairs;
    CHECK(mean > 0.1);
    CHECK(mean < 0.9);
}

TEST_CASE("geometry below 16 is rejected") {
    CHECK_THROWS_AS(generate_phantom(1, {8, 32, 32}, 2), ConfigError);
}
