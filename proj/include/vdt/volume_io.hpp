#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "vdt/tensor.hpp"

namespace vdt {

// Raw volume file: one ASCII header line
//   VDTVOL1 f32 <C> <D> <H> <W> <sx> <sy> <sz>
// followed by C*D*H*W little-endian f32 voxels in row-major order.
// Writes are atomic (temp file + rename).

struct VolumeFile {
    Tensor data;  // [C, D, H, W]
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
};

void write_volume(const std::filesystem::path& path, const Tensor& volume,
                  std::array<double, 3> spacing = {1.0, 1.0, 1.0});

VolumeFile read_volume(const std::filesystem::path& path);

// Sorted *.raw volumes of a directory (data tensors only).
std::vector<Tensor> read_volume_dir(const std::filesystem::path& dir);

uint64_t file_hash(const std::filesystem::path& path);

}  // namespace vdt
