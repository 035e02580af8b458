#include "vdt/wavelet.hpp"

#include <cmath>

namespace vdt {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

// Orthonormal Haar tap: lowpass (1/sqrt2, 1/sqrt2), highpass (1/sqrt2, -1/sqrt2).
inline double tap(int band_bit, int offset) {
    return (band_bit && offset) ? -kInvSqrt2 : kInvSqrt2;
}

// One analysis level: [C,D,H,W] -> [8C, D/2, H/2, W/2].
Tensor analyze_level(const Tensor& x) {
    int64_t C = x.dim(0), D = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t d2 = D / 2, h2 = H / 2, w2 = W / 2;
    std::vector<double> out(static_cast<size_t>(C * 8 * d2 * h2 * w2));
    const auto& xv = x.values();
    for (int64_t c = 0; c < C; ++c) {
        for (int b = 0; b < 8; ++b) {
            int bd = (b >> 2) & 1, bh = (b >> 1) & 1, bw = b & 1;
            int64_t oc = c * 8 + b;
            for (int64_t d = 0; d < d2; ++d)
                for (int64_t h = 0; h < h2; ++h)
                    for (int64_t w = 0; w < w2; ++w) {
                        double acc = 0.0;
                        for (int i = 0; i < 2; ++i)
                            for (int j = 0; j < 2; ++j)
                                for (int k = 0; k < 2; ++k) {
                                    double coeff = tap(bd, i) * tap(bh, j) * tap(bw, k);
                                    acc += coeff *
                                           xv[((c * D + 2 * d + i) * H + 2 * h + j) * W + 2 * w + k];
                                }
                        out[((oc * d2 + d) * h2 + h) * w2 + w] = acc;
                    }
        }
    }
    return Tensor::from({C * 8, d2, h2, w2}, std::move(out));
}

// One synthesis level: [8C, D, H, W] -> [C, 2D, 2H, 2W]. Orthonormal, so the
// inverse uses the same taps.
Tensor synthesize_level(const Tensor& z) {
    int64_t C8 = z.dim(0), D = z.dim(1), H = z.dim(2), W = z.dim(3);
    int64_t C = C8 / 8;
    int64_t D2 = D * 2, H2 = H * 2, W2 = W * 2;
    std::vector<double> out(static_cast<size_t>(C * D2 * H2 * W2), 0.0);
    const auto& zv = z.values();
    for (int64_t c = 0; c < C; ++c) {
        for (int b = 0; b < 8; ++b) {
            int bd = (b >> 2) & 1, bh = (b >> 1) & 1, bw = b & 1;
            int64_t zc = c * 8 + b;
            for (int64_t d = 0; d < D; ++d)
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w) {
                        double v = zv[((zc * D + d) * H + h) * W + w];
                        for (int i = 0; i < 2; ++i)
                            for (int j = 0; j < 2; ++j)
                                for (int k = 0; k < 2; ++k) {
                                    double coeff = tap(bd, i) * tap(bh, j) * tap(bw, k);
                                    out[((c * D2 + 2 * d + i) * H2 + 2 * h + j) * W2 + 2 * w + k] +=
                                        coeff * v;
                                }
                    }
        }
    }
    return Tensor::from({C, D2, H2, W2}, std::move(out));
}

}  // namespace

int64_t LatentSpec::latent_channels() const {
    int64_t c = input_channels;
    for (int i = 0; i < levels; ++i) c *= 8;
    return c;
}

int64_t LatentSpec::spatial_factor() const { return int64_t{1} << levels; }

void LatentSpec::validate() const {
    if (levels < 1) throw ConfigError("latent spec: levels must be >= 1");
    if (input_channels < 1) throw ConfigError("latent spec: input_channels must be >= 1");
}

Tensor wavelet_encode(const Tensor& x, const LatentSpec& spec) {
    spec.validate();
    if (x.rank() != 4 || x.dim(0) != spec.input_channels)
        throw DimensionError("wavelet_encode: expected [" + std::to_string(spec.input_channels) +
                             ",D,H,W], got " + shape_str(x.shape()));
    int64_t f = spec.spatial_factor();
    for (size_t a = 1; a < 4; ++a)
        if (x.dim(a) % f != 0)
            throw DimensionError("wavelet_encode: extent " + std::to_string(x.dim(a)) +
                                 " not divisible by " + std::to_string(f));
    Tensor cur = Tensor::from(x.shape(), x.values());
    for (int l = 0; l < spec.levels; ++l) cur = analyze_level(cur);
    return cur;
}

Tensor wavelet_decode(const Tensor& z, const LatentSpec& spec) {
    spec.validate();
    if (z.rank() != 4 || z.dim(0) != spec.latent_channels())
        throw DimensionError("wavelet_decode: expected " + std::to_string(spec.latent_channels()) +
                             " channels, got " + shape_str(z.shape()));
    Tensor cur = Tensor::from(z.shape(), z.values());
    for (int l = 0; l < spec.levels; ++l) cur = synthesize_level(cur);
    return cur;
}

}  // namespace vdt
