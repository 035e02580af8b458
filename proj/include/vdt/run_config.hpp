#pragma once

#include <filesystem>
#include <string>

#include "vdt/dit.hpp"
#include "vdt/wavelet.hpp"

namespace vdt {

// Run configuration: sectioned key=value text, echoed verbatim into
// checkpoint headers. Every cross-field divisibility constraint is checked
// by validate() before any work starts.
struct RunConfig {
    // [model]
    std::string size = "XS";
    int patch = 2;
    // [codec]
    int levels = 3;
    // [schedule]
    int T = 300;
    double s = 0.008;
    // [train]
    int steps = 500;
    int batch = 2;
    double lr = 1e-4;
    uint64_t seed = 42;
    int val_interval = 50;
    double huber_delta = 1.0;
    // [data]
    int n = 16;
    int64_t geometry = 32;
    int n_labels = 2;
    // [adapter]
    std::string adapter_mode = "learned";  // learned | fixed
    double pi = 1.0;
    std::string injection = "all";  // "all" or comma-separated 1-based layers
    int adapter_steps = 400;
    // [sample]
    int sample_n = 100;
    std::string sample_mode = "deterministic";  // deterministic | ancestral
    // [out]
    std::string out_dir = "out";

    std::string echo;  // the exact text this config was parsed from

    void validate() const;
    LatentSpec latent_spec() const;
    std::array<int64_t, 3> volume_geometry() const;
    std::array<int64_t, 3> latent_extents() const;
    DiTConfig dit_config() const;
    std::vector<int> injection_layers() const;  // resolved against depth
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string render_run_config(const RunConfig& cfg);

}  // namespace vdt
