#pragma once

#include "vdt/tensor.hpp"

namespace vdt {

// Invertible volumetric codec: multi-level separable 3D Haar analysis with
// orthonormal filters. Each level halves every spatial extent and stacks the
// eight subbands into channels, so levels=3 gives the 8x-per-axis spatial
// compression the latent space is built on.
struct LatentSpec {
    int levels = 3;
    int input_channels = 1;

    int64_t latent_channels() const;  // input_channels * 8^levels
    int64_t spatial_factor() const;   // 2^levels
    void validate() const;
};

// Subband channel order per level, for input channel c:
//   c*8 + b, b in {LLL, LLH, LHL, LHH, HLL, HLH, HHL, HHH}
// with letters read as (depth, height, width), L=lowpass H=highpass.
// x: [C, D, H, W] with extents divisible by 2^levels.
Tensor wavelet_encode(const Tensor& x, const LatentSpec& spec);

// Exact inverse of wavelet_encode. z: [C*8^levels, D', H', W'].
Tensor wavelet_decode(const Tensor& z, const LatentSpec& spec);

}  // namespace vdt
