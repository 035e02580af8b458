#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

#include "vdt/tensor.hpp"

namespace vdt {

struct FeatureSet {
    Eigen::MatrixXd features;  // n_samples x feat_dim
    std::string provenance;    // "real" | "synthetic"
    std::string extractor_id;

    int64_t n() const { return features.rows(); }
    int64_t dim() const { return features.cols(); }
    void validate() const;  // finite values, n >= 1
};

enum class FeatureExtractor { PooledMoments, RandomProjection };
std::string extractor_name(FeatureExtractor ex);

// Deterministic desk-scale feature extractors. PooledMoments: per-octant
// mean/variance/mean-gradient-magnitude (24 dims). RandomProjection:
// fixed-seed Gaussian projection of the average-pooled volume.
FeatureSet extract_features(const std::vector<Tensor>& volumes, FeatureExtractor ex,
                            const std::string& provenance, uint64_t seed = 17,
                            int64_t proj_dim = 32);

// Per-slice features along one anatomical axis (0=depth, 1=height, 2=width);
// every slice of every volume contributes one row.
FeatureSet extract_slice_features(const std::vector<Tensor>& volumes, int axis,
                                  FeatureExtractor ex, const std::string& provenance,
                                  uint64_t seed = 17, int64_t proj_dim = 32);

// ||mu_r - mu_f||^2 + Tr(Sr + Sf - 2 (Sf^1/2 Sr Sf^1/2)^1/2), covariances
// regularized by eps*I, matrix square roots via symmetric eigendecomposition.
double frechet_distance(const FeatureSet& real, const FeatureSet& fake, double eps = 1e-10);

// Mean of the per-axis Fréchet distances over slice features.
double frechet_25d(const std::vector<Tensor>& real_volumes,
                   const std::vector<Tensor>& fake_volumes, FeatureExtractor ex,
                   uint64_t seed = 17);

struct PRDCResult {
    double precision = 0, recall = 0, density = 0, coverage = 0;
    int k = 0;
};

// k-NN-ball precision/recall/density/coverage.
PRDCResult prdc(const FeatureSet& real, const FeatureSet& fake, int k);

struct SelectKResult {
    int k = 0;
    bool saturated = false;  // no k < n/2 reached the threshold
    PRDCResult scores;       // scores at the returned k
};

// Smallest k whose real-vs-real PRDC (seeded 50/50 split) exceeds the
// threshold on all four scores. Saturation is an outcome, not an error.
SelectKResult select_k(const FeatureSet& real, double threshold, uint64_t seed = 17);

struct MsSsimOptions {
    int scales = 3;
    double data_range = 1.0;
    int window = 11;   // clamped per scale to the largest odd width that fits
    double sigma = 1.5;
};

// 3D multi-scale SSIM, Gaussian window, standard constants and exponents,
// 2x average-pool between scales. Volumes: [D,H,W] or [1,D,H,W].
double ms_ssim(const Tensor& a, const Tensor& b, const MsSsimOptions& opt = {});

// 2|a n b| / (|a| + |b|); both-empty -> 1. Foreground = value > 0.5.
double dice(const Tensor& a, const Tensor& b);

// 95th percentile of pooled symmetric surface distances (6-connectivity
// boundary), linear interpolation between order statistics, scaled by voxel
// spacing. Both masks must be nonempty.
double hd95(const Tensor& a, const Tensor& b, std::array<double, 3> spacing = {1.0, 1.0, 1.0});

}  // namespace vdt
