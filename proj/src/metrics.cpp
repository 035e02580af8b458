#include "vdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vdt {

namespace {

// Accepts [D,H,W] or [1,D,H,W].
std::array<int64_t, 3> volume_dims(const Tensor& v) {
    if (v.rank() == 3) return {v.dim(0), v.dim(1), v.dim(2)};
    if (v.rank() == 4 && v.dim(0) == 1) return {v.dim(1), v.dim(2), v.dim(3)};
    throw DimensionError("expected a single-channel volume, got " + shape_str(v.shape()));
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& x) {
    Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mu;
    return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::VectorXd an = a.rowwise().squaredNorm();
    Eigen::VectorXd bn = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
    d2.colwise() += an;
    d2.rowwise() += bn.transpose();
    return d2.cwiseMax(0.0).cwiseSqrt();
}

// k-th nearest neighbor distance within one set, self excluded.
Eigen::VectorXd knn_radii(const Eigen::MatrixXd& x, int k) {
    Eigen::MatrixXd d = pairwise_distances(x, x);
    int64_t n = x.rows();
    Eigen::VectorXd radii(n);
    std::vector<double> row(n - 1);
    for (int64_t i = 0; i < n; ++i) {
        int64_t m = 0;
        for (int64_t j = 0; j < n; ++j)
            if (j != i) row[m++] = d(i, j);
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        radii[i] = row[k - 1];
    }
    return radii;
}

// ---- feature extractors --------------------------------------------------

// 24-dim pooled moments: per octant mean, variance, mean gradient magnitude.
Eigen::VectorXd pooled_moments_3d(const Tensor& vol) {
    auto [D, H, W] = volume_dims(vol);
    const auto& v = vol.values();
    auto at = [&](int64_t d, int64_t h, int64_t w) { return v[(d * H + h) * W + w]; };
    // central differences, clamped at the border
    auto grad_mag = [&](int64_t d, int64_t h, int64_t w) {
        auto cd = [](double p, double m, double steps) { return (p - m) / steps; };
        double gd = cd(at(std::min(d + 1, D - 1), h, w), at(std::max<int64_t>(d - 1, 0), h, w),
                       std::min(d + 1, D - 1) - std::max<int64_t>(d - 1, 0));
        double gh = cd(at(d, std::min(h + 1, H - 1), w), at(d, std::max<int64_t>(h - 1, 0), w),
                       std::min(h + 1, H - 1) - std::max<int64_t>(h - 1, 0));
        double gw = cd(at(d, h, std::min(w + 1, W - 1)), at(d, h, std::max<int64_t>(w - 1, 0)),
                       std::min(w + 1, W - 1) - std::max<int64_t>(w - 1, 0));
        return std::sqrt(gd * gd + gh * gh + gw * gw);
    };
    Eigen::VectorXd out(24);
    int idx = 0;
    for (int od = 0; od < 2; ++od)
        for (int oh = 0; oh < 2; ++oh)
            for (int ow = 0; ow < 2; ++ow) {
                int64_t d0 = od == 0 ? 0 : D / 2, d1 = od == 0 ? std::max<int64_t>(D / 2, 1) : D;
                int64_t h0 = oh == 0 ? 0 : H / 2, h1 = oh == 0 ? std::max<int64_t>(H / 2, 1) : H;
                int64_t w0 = ow == 0 ? 0 : W / 2, w1 = ow == 0 ? std::max<int64_t>(W / 2, 1) : W;
                if (d0 >= d1) d0 = d1 - 1;
                if (h0 >= h1) h0 = h1 - 1;
                if (w0 >= w1) w0 = w1 - 1;
                double n = 0, mean = 0, m2 = 0, gmean = 0;
                for (int64_t d = d0; d < d1; ++d)
                    for (int64_t h = h0; h < h1; ++h)
                        for (int64_t w = w0; w < w1; ++w) {
                            double x = at(d, h, w);
                            n += 1;
                            double delta = x - mean;
                            mean += delta / n;
                            m2 += delta * (x - mean);
                            gmean += grad_mag(d, h, w);
                        }
                out[idx++] = mean;
                out[idx++] = n > 1 ? m2 / n : 0.0;
                out[idx++] = gmean / n;
            }
    return out;
}

// 12-dim 2D analogue over quadrants, for slice features.
Eigen::VectorXd pooled_moments_2d(const std::vector<double>& img, int64_t H, int64_t W) {
    auto at = [&](int64_t h, int64_t w) { return img[h * W + w]; };
    auto grad_mag = [&](int64_t h, int64_t w) {
        double gh = (at(std::min(h + 1, H - 1), w) - at(std::max<int64_t>(h - 1, 0), w)) /
                    std::max<int64_t>(std::min(h + 1, H - 1) - std::max<int64_t>(h - 1, 0), 1);
        double gw = (at(h, std::min(w + 1, W - 1)) - at(h, std::max<int64_t>(w - 1, 0))) /
                    std::max<int64_t>(std::min(w + 1, W - 1) - std::max<int64_t>(w - 1, 0), 1);
        return std::sqrt(gh * gh + gw * gw);
    };
    Eigen::VectorXd out(12);
    int idx = 0;
    for (int oh = 0; oh < 2; ++oh)
        for (int ow = 0; ow < 2; ++ow) {
            int64_t h0 = oh == 0 ? 0 : H / 2, h1 = oh == 0 ? std::max<int64_t>(H / 2, 1) : H;
            int64_t w0 = ow == 0 ? 0 : W / 2, w1 = ow == 0 ? std::max<int64_t>(W / 2, 1) : W;
            if (h0 >= h1) h0 = h1 - 1;
            if (w0 >= w1) w0 = w1 - 1;
            double n = 0, mean = 0, m2 = 0, gmean = 0;
            for (int64_t h = h0; h < h1; ++h)
                for (int64_t w = w0; w < w1; ++w) {
                    double x = at(h, w);
                    n += 1;
                    double delta = x - mean;
                    mean += delta / n;
                    m2 += delta * (x - mean);
                    gmean += grad_mag(h, w);
                }
            out[idx++] = mean;
            out[idx++] = n > 1 ? m2 / n : 0.0;
            out[idx++] = gmean / n;
        }
    return out;
}

// Average-pool a volume down to at most target^3, then flatten.
std::vector<double> pool_to(const Tensor& vol, int64_t target) {
    auto [D, H, W] = volume_dims(vol);
    const auto& v = vol.values();
    int64_t od = std::min(D, target), oh = std::min(H, target), ow = std::min(W, target);
    std::vector<double> out(static_cast<size_t>(od * oh * ow), 0.0);
    std::vector<double> cnt(out.size(), 0.0);
    for (int64_t d = 0; d < D; ++d)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                int64_t i = ((d * od / D) * oh + h * oh / H) * ow + w * ow / W;
                out[i] += v[(d * H + h) * W + w];
                cnt[i] += 1.0;
            }
    for (size_t i = 0; i < out.size(); ++i) out[i] /= cnt[i];
    return out;
}

Eigen::VectorXd random_projection(const std::vector<double>& flat, int64_t proj_dim, uint64_t seed) {
    // fixed-seed Gaussian matrix, generated per (input size, seed)
    Rng rng(mix_seed(seed, static_cast<uint64_t>(flat.size())));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(proj_dim);
    double norm = 1.0 / std::sqrt(static_cast<double>(flat.size()));
    for (int64_t j = 0; j < proj_dim; ++j) {
        double acc = 0.0;
        for (double x : flat) acc += x * rng.normal();
        out[j] = acc * norm;
    }
    return out;
}

}  // namespace

void FeatureSet::validate() const {
    if (features.rows() < 1) throw ContractError("feature set is empty");
    if (!features.allFinite()) throw ContractError("feature set contains non-finite values");
}

std::string extractor_name(FeatureExtractor ex) {
    return ex == FeatureExtractor::PooledMoments ? "pooled_moments" : "random_projection";
}

FeatureSet extract_features(const std::vector<Tensor>& volumes, FeatureExtractor ex,
                            const std::string& provenance, uint64_t seed, int64_t proj_dim) {
    if (volumes.empty()) throw ContractError("extract_features: no volumes");
    FeatureSet fs;
    fs.provenance = provenance;
    fs.extractor_id = extractor_name(ex);
    int64_t dim = ex == FeatureExtractor::PooledMoments ? 24 : proj_dim;
    fs.features.resize(static_cast<int64_t>(volumes.size()), dim);
    for (size_t i = 0; i < volumes.size(); ++i) {
        if (ex == FeatureExtractor::PooledMoments) {
            fs.features.row(static_cast<int64_t>(i)) = pooled_moments_3d(volumes[i]).transpose();
        } else {
            fs.features.row(static_cast<int64_t>(i)) =
                random_projection(pool_to(volumes[i], 8), proj_dim, seed).transpose();
        }
    }
    fs.validate();
    return fs;
}

FeatureSet extract_slice_features(const std::vector<Tensor>& volumes, int axis,
                                  FeatureExtractor ex, const std::string& provenance,
                                  uint64_t seed, int64_t proj_dim) {
    if (volumes.empty()) throw ContractError("extract_slice_features: no volumes");
    if (axis < 0 || axis > 2) throw ContractError("extract_slice_features: axis must be 0..2");
    FeatureSet fs;
    fs.provenance = provenance;
    fs.extractor_id = extractor_name(ex) + "_2d_axis" + std::to_string(axis);
    std::vector<Eigen::VectorXd> rows;
    for (const auto& vol : volumes) {
        auto [D, H, W] = volume_dims(vol);
        const auto& v = vol.values();
        int64_t n_slices = axis == 0 ? D : (axis == 1 ? H : W);
        int64_t sh = axis == 0 ? H : D;
        int64_t sw = axis == 2 ? H : W;
        std::vector<double> slice(static_cast<size_t>(sh * sw));
        for (int64_t s = 0; s < n_slices; ++s) {
            int64_t idx = 0;
            for (int64_t i = 0; i < sh; ++i)
                for (int64_t j = 0; j < sw; ++j) {
                    int64_t d = axis == 0 ? s : i;
                    int64_t h = axis == 1 ? s : (axis == 0 ? i : j);
                    int64_t w = axis == 2 ? s : j;
                    slice[idx++] = v[(d * H + h) * W + w];
                }
            if (ex == FeatureExtractor::PooledMoments) {
                rows.push_back(pooled_moments_2d(slice, sh, sw));
            } else {
                rows.push_back(random_projection(slice, proj_dim, seed));
            }
        }
    }
    fs.features.resize(static_cast<int64_t>(rows.size()), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) fs.features.row(static_cast<int64_t>(i)) = rows[i].transpose();
    fs.validate();
    return fs;
}

double frechet_distance(const FeatureSet& real, const FeatureSet& fake, double eps) {
    real.validate();
    fake.validate();
    if (real.dim() != fake.dim())
        throw ContractError("frechet_distance: feature dims differ (" + std::to_string(real.dim()) +
                            " vs " + std::to_string(fake.dim()) + ")");
    if (real.n() < 2 || fake.n() < 2)
        throw ContractError("frechet_distance: need >= 2 samples per set");
    Eigen::RowVectorXd mu_r = real.features.colwise().mean();
    Eigen::RowVectorXd mu_f = fake.features.colwise().mean();
    int64_t d = real.dim();
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd cov_r = covariance(real.features) + eps * id;
    Eigen::MatrixXd cov_f = covariance(fake.features) + eps * id;
    Eigen::MatrixXd sf = sqrtm_psd(cov_f);
    Eigen::MatrixXd inner = sf * cov_r * sf;
    inner = 0.5 * (inner + inner.transpose());  // symmetrize against roundoff
    double tr_sqrt = sqrtm_psd(inner).trace();
    double dist = (mu_r - mu_f).squaredNorm() + cov_r.trace() + cov_f.trace() - 2.0 * tr_sqrt;
    return std::max(dist, 0.0);
}

double frechet_25d(const std::vector<Tensor>& real_volumes,
                   const std::vector<Tensor>& fake_volumes, FeatureExtractor ex, uint64_t seed) {
    double acc = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        FeatureSet r = extract_slice_features(real_volumes, axis, ex, "real", seed);
        FeatureSet f = extract_slice_features(fake_volumes, axis, ex, "synthetic", seed);
        acc += frechet_distance(r, f);
    }
    return acc / 3.0;
}

PRDCResult prdc(const FeatureSet& real, const FeatureSet& fake, int k) {
    real.validate();
    fake.validate();
    if (real.dim() != fake.dim()) throw ContractError("prdc: feature dims differ");
    int64_t n = real.n(), m = fake.n();
    if (k < 1 || k >= std::min(n, m))
        throw ContractError("prdc: k = " + std::to_string(k) + " must satisfy 1 <= k < min(n, m) = " +
                            std::to_string(std::min(n, m)));
    Eigen::VectorXd rad_real = knn_radii(real.features, k);
    Eigen::VectorXd rad_fake = knn_radii(fake.features, k);
    Eigen::MatrixXd d_rf = pairwise_distances(real.features, fake.features);  // [n x m]

    PRDCResult out;
    out.k = k;
    int64_t prec_hits = 0;
    double density_acc = 0.0;
    for (int64_t j = 0; j < m; ++j) {
        int64_t inside = 0;
        for (int64_t i = 0; i < n; ++i)
            if (d_rf(i, j) <= rad_real[i]) ++inside;
        if (inside > 0) ++prec_hits;
        density_acc += static_cast<double>(inside);
    }
    int64_t recall_hits = 0, cover_hits = 0;
    for (int64_t i = 0; i < n; ++i) {
        bool rec = false, cov = false;
        for (int64_t j = 0; j < m; ++j) {
            if (d_rf(i, j) <= rad_fake[j]) rec = true;
            if (d_rf(i, j) <= rad_real[i]) cov = true;
        }
        if (rec) ++recall_hits;
        if (cov) ++cover_hits;
    }
    out.precision = static_cast<double>(prec_hits) / m;
    out.recall = static_cast<double>(recall_hits) / n;
    out.density = density_acc / (static_cast<double>(k) * m);
    out.coverage = static_cast<double>(cover_hits) / n;
    return out;
}

SelectKResult select_k(const FeatureSet& real, double threshold, uint64_t seed) {
    real.validate();
    if (threshold < 0.0 || threshold >= 1.0)
        throw ContractError("select_k: threshold must be in [0, 1)");
    if (real.n() < 4) throw ContractError("select_k: need at least 4 real samples");
    std::vector<int64_t> idx(real.n());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    int64_t half = real.n() / 2;
    FeatureSet a, b;
    a.provenance = b.provenance = "real";
    a.extractor_id = b.extractor_id = real.extractor_id;
    a.features.resize(half, real.dim());
    b.features.resize(real.n() - half, real.dim());
    for (int64_t i = 0; i < half; ++i) a.features.row(i) = real.features.row(idx[i]);
    for (int64_t i = half; i < real.n(); ++i) b.features.row(i - half) = real.features.row(idx[i]);

    int k_max = static_cast<int>(std::min(a.n(), b.n())) - 1;
    SelectKResult out;
    for (int k = 1; k <= k_max; ++k) {
        PRDCResult r = prdc(a, b, k);
        out.k = k;
        out.scores = r;
        if (r.precision > threshold && r.recall > threshold && r.density > threshold &&
            r.coverage > threshold) {
            out.saturated = false;
            return out;
        }
    }
    out.saturated = true;
    return out;
}

// ---- MS-SSIM ----------------------------------------------------------------

namespace {

struct Vol {
    std::vector<double> v;
    int64_t D, H, W;
    double at(int64_t d, int64_t h, int64_t w) const { return v[(d * H + h) * W + w]; }
};

Vol downsample2(const Vol& x) {
    Vol o;
    o.D = x.D / 2;
    o.H = x.H / 2;
    o.W = x.W / 2;
    o.v.resize(static_cast<size_t>(o.D * o.H * o.W));
    for (int64_t d = 0; d < o.D; ++d)
        for (int64_t h = 0; h < o.H; ++h)
            for (int64_t w = 0; w < o.W; ++w) {
                double acc = 0.0;
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int k = 0; k < 2; ++k) acc += x.at(2 * d + i, 2 * h + j, 2 * w + k);
                o.v[(d * o.H + h) * o.W + w] = acc / 8.0;
            }
    return o;
}

// Separable valid-mode Gaussian filter along all three axes.
Vol gauss3(const Vol& x, const std::vector<double>& kern) {
    int64_t k = static_cast<int64_t>(kern.size());
    Vol t1{{}, x.D - k + 1, x.H, x.W};
    t1.v.resize(static_cast<size_t>(t1.D * t1.H * t1.W));
    for (int64_t d = 0; d < t1.D; ++d)
        for (int64_t h = 0; h < x.H; ++h)
            for (int64_t w = 0; w < x.W; ++w) {
                double acc = 0.0;
                for (int64_t i = 0; i < k; ++i) acc += kern[i] * x.at(d + i, h, w);
                t1.v[(d * t1.H + h) * t1.W + w] = acc;
            }
    Vol t2{{}, t1.D, t1.H - k + 1, t1.W};
    t2.v.resize(static_cast<size_t>(t2.D * t2.H * t2.W));
    for (int64_t d = 0; d < t2.D; ++d)
        for (int64_t h = 0; h < t2.H; ++h)
            for (int64_t w = 0; w < t2.W; ++w) {
                double acc = 0.0;
                for (int64_t i = 0; i < k; ++i) acc += kern[i] * t1.at(d, h + i, w);
                t2.v[(d * t2.H + h) * t2.W + w] = acc;
            }
    Vol t3{{}, t2.D, t2.H, t2.W - k + 1};
    t3.v.resize(static_cast<size_t>(t3.D * t3.H * t3.W));
    for (int64_t d = 0; d < t3.D; ++d)
        for (int64_t h = 0; h < t3.H; ++h)
            for (int64_t w = 0; w < t3.W; ++w) {
                double acc = 0.0;
                for (int64_t i = 0; i < k; ++i) acc += kern[i] * t2.at(d, h, w + i);
                t3.v[(d * t3.H + h) * t3.W + w] = acc;
            }
    return t3;
}

std::vector<double> gauss_kernel(int width, double sigma) {
    std::vector<double> k(width);
    double c = (width - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < width; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// mean luminance term and mean contrast-structure term at one scale
std::pair<double, double> ssim_terms(const Vol& x, const Vol& y, int window, double sigma,
                                     double c1, double c2) {
    int w = std::min<int64_t>({window, x.D, x.H, x.W});
    if (w % 2 == 0) --w;
    auto kern = gauss_kernel(w, sigma);
    Vol mx = gauss3(x, kern), my = gauss3(y, kern);
    Vol xx = x, yy = y, xy = x;
    for (size_t i = 0; i < x.v.size(); ++i) {
        xx.v[i] = x.v[i] * x.v[i];
        yy.v[i] = y.v[i] * y.v[i];
        xy.v[i] = x.v[i] * y.v[i];
    }
    Vol mxx = gauss3(xx, kern), myy = gauss3(yy, kern), mxy = gauss3(xy, kern);
    double lum = 0.0, cs = 0.0;
    for (size_t i = 0; i < mx.v.size(); ++i) {
        double ux = mx.v[i], uy = my.v[i];
        double vx = mxx.v[i] - ux * ux;
        double vy = myy.v[i] - uy * uy;
        double vxy = mxy.v[i] - ux * uy;
        lum += (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
        cs += (2.0 * vxy + c2) / (vx + vy + c2);
    }
    return {lum / mx.v.size(), cs / mx.v.size()};
}

}  // namespace

double ms_ssim(const Tensor& a, const Tensor& b, const MsSsimOptions& opt) {
    auto da = volume_dims(a);
    auto db = volume_dims(b);
    if (da != db)
        throw DimensionError("ms_ssim: geometry mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    if (opt.scales < 1) throw ContractError("ms_ssim: scales must be >= 1");
    int64_t min_ext = std::min({da[0], da[1], da[2]});
    int64_t needed = int64_t{4} << (opt.scales - 1);
    if (min_ext < needed)
        throw ContractError("ms_ssim: volume too small for " + std::to_string(opt.scales) +
                            " scales (min extent " + std::to_string(min_ext) + " < " +
                            std::to_string(needed) + ")");
    static const double kWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    int scales = std::min(opt.scales, 5);
    double wsum = 0.0;
    for (int i = 0; i < scales; ++i) wsum += kWeights[i];

    double c1 = 0.01 * opt.data_range;
    c1 *= c1;
    double c2 = 0.03 * opt.data_range;
    c2 *= c2;

    Vol x{a.values(), da[0], da[1], da[2]};
    Vol y{b.values(), db[0], db[1], db[2]};
    double result = 1.0;
    for (int s = 0; s < scales; ++s) {
        auto [lum, cs] = ssim_terms(x, y, opt.window, opt.sigma, c1, c2);
        double w = kWeights[s] / wsum;
        if (s + 1 == scales) {
            result *= std::pow(std::max(lum, 0.0), w) * std::pow(std::max(cs, 0.0), w);
        } else {
            result *= std::pow(std::max(cs, 0.0), w);
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return result;
}

// ---- mask metrics ---------------------------------------------------------

double dice(const Tensor& a, const Tensor& b) {
    auto da = volume_dims(a);
    auto db = volume_dims(b);
    if (da != db)
        throw DimensionError("dice: geometry mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    int64_t inter = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.values().size(); ++i) {
        bool fa = a.values()[i] > 0.5;
        bool fb = b.values()[i] > 0.5;
        na += fa;
        nb += fb;
        inter += fa && fb;
    }
    if (na + nb == 0) return 1.0;  // both empty
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

namespace {

std::vector<std::array<int64_t, 3>> surface_voxels(const Tensor& m) {
    auto [D, H, W] = volume_dims(m);
    const auto& v = m.values();
    auto fg = [&](int64_t d, int64_t h, int64_t w) {
        if (d < 0 || d >= D || h < 0 || h >= H || w < 0 || w >= W) return false;
        return v[(d * H + h) * W + w] > 0.5;
    };
    std::vector<std::array<int64_t, 3>> out;
    for (int64_t d = 0; d < D; ++d)
        for (int64_t h = 0; h < H; ++h)
            for (int64_t w = 0; w < W; ++w) {
                if (!fg(d, h, w)) continue;
                if (!fg(d - 1, h, w) || !fg(d + 1, h, w) || !fg(d, h - 1, w) || !fg(d, h + 1, w) ||
                    !fg(d, h, w - 1) || !fg(d, h, w + 1))
                    out.push_back({d, h, w});
            }
    return out;
}

void directed_distances(const std::vector<std::array<int64_t, 3>>& from,
                        const std::vector<std::array<int64_t, 3>>& to,
                        const std::array<double, 3>& sp, std::vector<double>& pooled) {
    for (const auto& p : from) {
        double best = HUGE_VAL;
        for (const auto& q : to) {
            double dd = (p[0] - q[0]) * sp[0];
            double dh = (p[1] - q[1]) * sp[1];
            double dw = (p[2] - q[2]) * sp[2];
            best = std::min(best, dd * dd + dh * dh + dw * dw);
        }
        pooled.push_back(std::sqrt(best));
    }
}

}  // namespace

double hd95(const Tensor& a, const Tensor& b, std::array<double, 3> spacing) {
    auto da = volume_dims(a);
    auto db = volume_dims(b);
    if (da != db)
        throw DimensionError("hd95: geometry mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    auto sa = surface_voxels(a);
    auto sb = surface_voxels(b);
    if (sa.empty() || sb.empty()) throw ContractError("hd95: empty mask");
    std::vector<double> pooled;
    pooled.reserve(sa.size() + sb.size());
    directed_distances(sa, sb, spacing, pooled);
    directed_distances(sb, sa, spacing, pooled);
    std::sort(pooled.begin(), pooled.end());
    double q = 0.95 * static_cast<double>(pooled.size() - 1);
    size_t lo = static_cast<size_t>(q);
    double frac = q - static_cast<double>(lo);
    if (lo + 1 >= pooled.size()) return pooled.back();
    return pooled[lo] + (pooled[lo + 1] - pooled[lo]) * frac;
}

}  // namespace vdt
