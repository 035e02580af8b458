#pragma once

#include <array>

#include "vdt/tensor.hpp"

namespace vdt {

// Intensity bands of the procedural phantoms. Generation keeps each structure
// inside its band and the bands separated by >= 0.3, so thresholding at
// level +- kBandHalfWidth is a valid segmentation stand-in.
constexpr double kBackgroundLevel = -0.6;
constexpr double kOrganLevel = 0.0;
constexpr double kVesselLevel = 0.6;
constexpr double kBandHalfWidth = 0.2;

double label_level(int label);  // 1 = organ, 2 = vessel

struct PhantomParams {
    std::array<double, 3> organ_center{}, organ_radii{}, organ_angles{};
    std::array<double, 3> vessel_p0{}, vessel_p1{}, vessel_p2{};
    double vessel_radius = 0;
    std::array<double, 4> field_phases{};
};

// Synthetic volume paired with an exact multi-label mask. Mask channels:
// 0 = background, 1 = organ (ellipsoid), 2 = vessel (bent tube); one-hot at
// every voxel, vessel wins overlaps.
struct Phantom {
    Tensor volume;  // [1, D, H, W], intensities in [-1, 1]
    Tensor mask;    // [n_labels + 1, D, H, W] one-hot
    uint64_t seed = 0;
    PhantomParams params;
};

// Deterministic from seed. Geometry extents must be >= 16 per axis. Each
// labeled structure occupies >= 1% of the volume (pose is redrawn from the
// same stream until that holds).
Phantom generate_phantom(uint64_t seed, std::array<int64_t, 3> geometry, int n_labels = 2);

enum class Split { Train, Val, Test };

struct PhantomDataset {
    std::vector<Phantom> items;
    std::vector<Split> split;  // by index: 0.75 / 0.05 / 0.20

    std::vector<int> indices(Split s) const;
};

PhantomDataset phantom_dataset(uint64_t seed, int n, std::array<int64_t, 3> geometry,
                               int n_labels = 2);

// Binary [D,H,W] view of one mask label channel.
Tensor mask_label(const Tensor& mask, int label);

// Threshold at the label's intensity band, then keep the largest 6-connected
// component. All-zero output when nothing falls in the band.
Tensor predict_mask_from_volume(const Tensor& volume, int label);

}  // namespace vdt
