#include "vdt/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace vdt {

namespace {

struct Vec3 {
    double x, y, z;
};

Vec3 bezier(const std::array<double, 3>& p0, const std::array<double, 3>& p1,
            const std::array<double, 3>& p2, double t) {
    double u = 1.0 - t;
    return {u * u * p0[0] + 2 * u * t * p1[0] + t * t * p2[0],
            u * u * p0[1] + 2 * u * t * p1[1] + t * t * p2[1],
            u * u * p0[2] + 2 * u * t * p1[2] + t * t * p2[2]};
}

// Rotation by ZYX Euler angles applied to a point.
Vec3 rotate(const Vec3& p, const std::array<double, 3>& ang) {
    double ca = std::cos(ang[0]), sa = std::sin(ang[0]);
    double cb = std::cos(ang[1]), sb = std::sin(ang[1]);
    double cc = std::cos(ang[2]), sc = std::sin(ang[2]);
    Vec3 a{p.x, p.y * ca - p.z * sa, p.y * sa + p.z * ca};
    Vec3 b{a.x * cb + a.z * sb, a.y, -a.x * sb + a.z * cb};
    return {b.x * cc - b.y * sc, b.x * sc + b.y * cc, b.z};
}

PhantomParams draw_params(Rng& rng, const std::array<int64_t, 3>& g, int n_labels) {
    PhantomParams p;
    for (int a = 0; a < 3; ++a) {
        p.organ_center[a] = rng.uniform(0.38, 0.62) * g[a];
        p.organ_radii[a] = rng.uniform(0.17, 0.23) * g[a];
        p.organ_angles[a] = rng.uniform(0.0, M_PI);
    }
    for (auto& ph : p.field_phases) ph = rng.uniform(0.0, 2.0 * M_PI);
    if (n_labels >= 2) {
        int axis = static_cast<int>(rng.uniform_int(0, 2));
        for (int a = 0; a < 3; ++a) {
            if (a == axis) {
                p.vessel_p0[a] = 0.12 * g[a];
                p.vessel_p2[a] = 0.88 * g[a];
                p.vessel_p1[a] = 0.5 * g[a];
            } else {
                p.vessel_p0[a] = rng.uniform(0.30, 0.70) * g[a];
                p.vessel_p2[a] = rng.uniform(0.30, 0.70) * g[a];
                p.vessel_p1[a] = 0.5 * (p.vessel_p0[a] + p.vessel_p2[a]) +
                                 rng.uniform(-0.15, 0.15) * g[a];
            }
        }
        p.vessel_radius = rng.uniform(0.088, 0.11) * (g[0] + g[1] + g[2]) / 3.0;
    }
    return p;
}

}  // namespace

double label_level(int label) {
    if (label == 1) return kOrganLevel;
    if (label == 2) return kVesselLevel;
    throw ContractError("label_level: label must be 1 or 2");
}

Phantom generate_phantom(uint64_t seed, std::array<int64_t, 3> geometry, int n_labels) {
    for (int64_t e : geometry)
        if (e < 16) throw ConfigError("phantom: geometry extents must be >= 16, got " +
                                      std::to_string(e));
    if (n_labels < 1 || n_labels > 2)
        throw ConfigError("phantom: n_labels must be 1 or 2");
    const auto [D, H, W] = geometry;
    const int64_t voxels = D * H * W;
    Rng rng(mix_seed(seed, 0x9e0));

    // redraw pose until every structure holds >= 1% of the volume
    PhantomParams params;
    std::vector<uint8_t> label(static_cast<size_t>(voxels));
    const int64_t min_voxels = std::max<int64_t>(voxels / 100, 1);
    bool ok = false;
    for (int attempt = 0; attempt < 16 && !ok; ++attempt) {
        params = draw_params(rng, geometry, n_labels);
        std::fill(label.begin(), label.end(), 0);

        std::vector<Vec3> curve;
        if (n_labels >= 2) {
            int64_t steps = 3 * std::max({D, H, W});
            for (int64_t i = 0; i <= steps; ++i)
                curve.push_back(bezier(params.vessel_p0, params.vessel_p1, params.vessel_p2,
                                       static_cast<double>(i) / steps));
        }
        int64_t n_organ = 0, n_vessel = 0;
        double r2 = params.vessel_radius * params.vessel_radius;
        for (int64_t d = 0; d < D; ++d)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w) {
                    size_t idx = static_cast<size_t>((d * H + h) * W + w);
                    Vec3 rel{(d + 0.5) - params.organ_center[0], (h + 0.5) - params.organ_center[1],
                             (w + 0.5) - params.organ_center[2]};
                    Vec3 rp = rotate(rel, params.organ_angles);
                    double q = rp.x * rp.x / (params.organ_radii[0] * params.organ_radii[0]) +
                               rp.y * rp.y / (params.organ_radii[1] * params.organ_radii[1]) +
                               rp.z * rp.z / (params.organ_radii[2] * params.organ_radii[2]);
                    if (q <= 1.0) {
                        label[idx] = 1;
                        ++n_organ;
                    }
                    if (n_labels >= 2) {
                        double best = HUGE_VAL;
                        for (const auto& c : curve) {
                            double dd = (d + 0.5) - c.x, dh = (h + 0.5) - c.y, dw = (w + 0.5) - c.z;
                            best = std::min(best, dd * dd + dh * dh + dw * dw);
                            if (best <= r2) break;
                        }
                        if (best <= r2) {
                            if (label[idx] == 1) --n_organ;
                            label[idx] = 2;  // vessel wins overlaps
                            ++n_vessel;
                        }
                    }
                }
        ok = n_organ >= min_voxels && (n_labels < 2 || n_vessel >= min_voxels);
    }
    if (!ok) throw ContractError("phantom: could not place structures above 1% volume");

    // intensities: smooth per-region fields + low-amplitude noise, clamped to [-1, 1]
    std::vector<double> vol(static_cast<size_t>(voxels));
    const auto& ph = params.field_phases;
    for (int64_t d = 0; d < D; ++d)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                size_t idx = static_cast<size_t>((d * H + h) * W + w);
                double base;
                switch (label[idx]) {
                    case 1:
                        base = kOrganLevel +
                               0.05 * std::sin(2.0 * M_PI * (d + h) / (D + H) + ph[2]);
                        break;
                    case 2:
                        base = kVesselLevel + 0.04 * std::cos(2.0 * M_PI * w / W + ph[3]);
                        break;
                    default:
                        base = kBackgroundLevel + 0.05 * std::sin(2.0 * M_PI * d / D + ph[0]) +
                               0.04 * std::cos(2.0 * M_PI * h / H + ph[1]) +
                               0.03 * std::sin(2.0 * M_PI * w / W + ph[0] + ph[1]);
                }
                vol[idx] = std::clamp(base + rng.uniform(-0.02, 0.02), -1.0, 1.0);
            }

    int channels = n_labels + 1;
    std::vector<double> mask(static_cast<size_t>(channels * voxels), 0.0);
    for (int64_t i = 0; i < voxels; ++i) mask[label[i] * voxels + i] = 1.0;

    Phantom out;
    out.volume = Tensor::from({1, D, H, W}, std::move(vol));
    out.mask = Tensor::from({channels, D, H, W}, std::move(mask));
    out.seed = seed;
    out.params = params;
    return out;
}

std::vector<int> PhantomDataset::indices(Split s) const {
    std::vector<int> out;
    for (size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(static_cast<int>(i));
    return out;
}

PhantomDataset phantom_dataset(uint64_t seed, int n, std::array<int64_t, 3> geometry,
                               int n_labels) {
    if (n < 1) throw ContractError("phantom_dataset: n must be >= 1");
    PhantomDataset ds;
    int n_train = static_cast<int>(std::floor(0.75 * n));
    int n_val = static_cast<int>(std::floor(0.05 * n));
    for (int i = 0; i < n; ++i) {
        ds.items.push_back(generate_phantom(mix_seed(seed, static_cast<uint64_t>(i)), geometry,
                                            n_labels));
        ds.split.push_back(i < n_train ? Split::Train
                                       : (i < n_train + n_val ? Split::Val : Split::Test));
    }
    return ds;
}

Tensor mask_label(const Tensor& mask, int label) {
    if (mask.rank() != 4 || label < 0 || label >= mask.dim(0))
        throw DimensionError("mask_label: label " + std::to_string(label) + " invalid for " +
                             shape_str(mask.shape()));
    int64_t D = mask.dim(1), H = mask.dim(2), W = mask.dim(3);
    int64_t voxels = D * H * W;
    std::vector<double> out(mask.values().begin() + label * voxels,
                            mask.values().begin() + (label + 1) * voxels);
    return Tensor::from({D, H, W}, std::move(out));
}

Tensor predict_mask_from_volume(const Tensor& volume, int label) {
    double level = label_level(label);
    int64_t D, H, W;
    if (volume.rank() == 4 && volume.dim(0) == 1) {
        D = volume.dim(1);
        H = volume.dim(2);
        W = volume.dim(3);
    } else if (volume.rank() == 3) {
        D = volume.dim(0);
        H = volume.dim(1);
        W = volume.dim(2);
    } else {
        throw DimensionError("predict_mask_from_volume: expected single-channel volume, got " +
                             shape_str(volume.shape()));
    }
    int64_t voxels = D * H * W;
    const double* v = volume.values().data();
    std::vector<uint8_t> in_band(static_cast<size_t>(voxels));
    for (int64_t i = 0; i < voxels; ++i)
        in_band[i] = std::abs(v[i] - level) <= kBandHalfWidth ? 1 : 0;

    // largest 6-connected component
    std::vector<int32_t> comp(static_cast<size_t>(voxels), -1);
    int32_t n_comp = 0;
    int64_t best_size = 0;
    int32_t best_comp = -1;
    std::vector<int64_t> stack;
    for (int64_t s = 0; s < voxels; ++s) {
        if (!in_band[s] || comp[s] >= 0) continue;
        int32_t c = n_comp++;
        int64_t size = 0;
        stack.push_back(s);
        comp[s] = c;
        while (!stack.empty()) {
            int64_t cur = stack.back();
            stack.pop_back();
            ++size;
            int64_t d = cur / (H * W), h = (cur / W) % H, w = cur % W;
            const int64_t nd[6] = {d - 1, d + 1, d, d, d, d};
            const int64_t nh[6] = {h, h, h - 1, h + 1, h, h};
            const int64_t nw[6] = {w, w, w, w, w - 1, w + 1};
            for (int i = 0; i < 6; ++i) {
                if (nd[i] < 0 || nd[i] >= D || nh[i] < 0 || nh[i] >= H || nw[i] < 0 || nw[i] >= W)
                    continue;
                int64_t nx = (nd[i] * H + nh[i]) * W + nw[i];
                if (in_band[nx] && comp[nx] < 0) {
                    comp[nx] = c;
                    stack.push_back(nx);
                }
            }
        }
        if (size > best_size) {
            best_size = size;
            best_comp = c;
        }
    }
    std::vector<double> out(static_cast<size_t>(voxels), 0.0);
    if (best_comp >= 0)
        for (int64_t i = 0; i < voxels; ++i)
            if (comp[i] == best_comp) out[i] = 1.0;
    return Tensor::from({D, H, W}, std::move(out));
}

}  // namespace vdt
