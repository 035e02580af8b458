#pragma once

#include <filesystem>
#include <utility>

#include "vdt/dit.hpp"
#include "vdt/tgca.hpp"

namespace vdt {

uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL);

// Hash of the concatenated f32 blobs in parameter order; identifies a trained
// parameter set (stored in adapter headers to pin their backbone).
uint64_t params_hash_f32(const std::vector<Tensor>& params);

// Container: "VDTCKPT1\n", decimal JSON-header length + "\n", JSON header,
// then raw little-endian f32 parameter blobs in header table order. The
// header records a hash of the blob bytes; load verifies it.
struct CheckpointHeader {
    int format_version = 1;
    std::string kind;         // "backbone" | "adapter"
    std::string config_echo;  // run config text, verbatim
    std::vector<std::pair<std::string, Shape>> params;
    int codec_levels = 3;
    int codec_input_channels = 1;
    int sched_T = 300;
    double sched_s = 0.008;
    std::string rng_state;
    uint64_t blob_hash = 0;
    // adapter-only fields
    uint64_t backbone_hash = 0;
    std::string gate_mode;  // "learned" | "fixed"
    double fixed_pi = 1.0;
};

// Snaps the in-memory parameters to their f32 values first, so a reloaded
// model reproduces the saved one exactly.
void save_checkpoint(const std::filesystem::path& path, CheckpointHeader header,
                     std::vector<Tensor> params);

struct LoadedCheckpoint {
    CheckpointHeader header;
    std::vector<std::vector<double>> blobs;  // f32 values widened to double
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

void load_parameters(DiTModel& model, const LoadedCheckpoint& ckpt);
void load_parameters(ControlAdapter& adapter, const LoadedCheckpoint& ckpt);

}  // namespace vdt
