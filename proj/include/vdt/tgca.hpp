#pragma once

#include "vdt/dit.hpp"
#include "vdt/tensor.hpp"

namespace vdt {

// Timestep-gated control adapter: a strided 3D conv stack maps a segmentation
// volume to one control token per backbone token; a sigmoid gate of the time
// embedding and a learnable per-layer scale modulate the additive injection.
// The final encoder conv is zero-initialized, so a fresh adapter is silent.
struct AdapterConfig {
    int cond_channels = 3;  // one-hot labels incl. background
    int stages = 4;         // stride-2 convs; codec levels + log2(patch)
    int token_dim = 384;
    std::array<int64_t, 3> input_extents{32, 32, 32};
    std::array<int64_t, 3> grid{2, 2, 2};  // backbone token grid
    std::vector<int> injection_layers;     // 1-based, default all backbone layers
    enum class GateMode { Learned, Fixed } mode = GateMode::Learned;
    double fixed_pi = 1.0;
    int gate_hidden = 96;

    void validate() const;
    int64_t stage_channels(int stage) const;  // doubling schedule ending at token_dim
};

// Derives the adapter geometry from the backbone + codec: the encoder
// downsamples by 2^(levels + log2 p), landing exactly on the token grid.
AdapterConfig make_adapter_config(const DiTConfig& backbone, int codec_levels, int cond_channels);

std::vector<ParamSpec> adapter_param_specs(const AdapterConfig& cfg);

class ControlAdapter {
  public:
    ControlAdapter(AdapterConfig cfg, uint64_t seed);

    const AdapterConfig& config() const { return cfg_; }

    // s: [C_s, D, H, W] at full input resolution -> [N_tok, d], flattened in
    // patchify order.
    Tensor encode_condition(const Tensor& s) const;

    // gamma(t) = sigmoid(MLP(t_emb)), scalar strictly inside (0,1).
    // ContractError when called in fixed mode.
    Tensor gate(const Tensor& t_emb) const;

    Tensor lambda(int layer) const;  // scalar view into the per-layer scale vector

    // Bundles tokens + per-layer multiplier for DiTModel::forward.
    ControlHook make_hook(const Tensor& s, const Tensor& t_emb) const;

    // Same, with tokens already encoded (sampling reuses them across steps).
    ControlHook make_hook_from_tokens(const Tensor& tokens, const Tensor& t_emb) const;

    // Ablation mode: effective multiplier becomes the constant pi for all t, l.
    void set_fixed_scale(double pi);
    void set_learned_mode();

    const std::vector<std::string>& param_names() const { return names_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    std::vector<Tensor> parameters();
    void set_requires_grad(bool rg);

  private:
    AdapterConfig cfg_;
    std::vector<std::string> names_;
    std::map<std::string, Tensor> params_;
};

}  // namespace vdt
