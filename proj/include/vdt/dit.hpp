#pragma once

#include <array>
#include <map>
#include <string>

#include "vdt/tensor.hpp"

namespace vdt {

enum class ModelSize { XS, S, B, L };
ModelSize parse_model_size(const std::string& name);
std::string model_size_name(ModelSize size);

struct DiTConfig {
    int depth = 6;
    int hidden = 384;
    int heads = 6;
    int patch = 2;
    int64_t latent_channels = 8;
    std::array<int64_t, 3> latent_extents{4, 4, 4};
    int mlp_ratio = 4;
    int time_freq_dim = 256;

    std::array<int64_t, 3> grid() const;  // latent extents / patch
    int64_t token_count() const;          // D'H'W' / p^3
    int64_t patch_dim() const;            // p^3 * C_z
    void validate() const;
};

// Size ladder: XS (6, 384, 6) / S (12, 384, 6) / B (12, 768, 12) / L (24, 1152, 16).
DiTConfig make_config(ModelSize size, int patch, int64_t latent_channels,
                      std::array<int64_t, 3> latent_extents);

struct ParamSpec {
    std::string name;
    Shape shape;
    enum class Init { Normal, Zero, One } init;
};

// Canonical parameter table; also the checkpoint blob order.
std::vector<ParamSpec> dit_param_specs(const DiTConfig& cfg);
int64_t dit_param_count(const DiTConfig& cfg);

// Interleaved sin/cos features of a (possibly fractional) position: dim even,
// feat[2j] = sin(pos w_j), feat[2j+1] = cos(pos w_j), w_j = 10000^(-j/(dim/2)).
Tensor sinusoidal_features(double pos, int64_t dim);

// Fixed 3D positional table [N_tok, d]: d split into equal thirds
// (depth, height, width), each third the 1-D encoding of that grid coordinate.
// Row order matches the patchify flattening (depth-major, then height, width).
Tensor posenc3d(std::array<int64_t, 3> grid, int64_t d);

// [C,D,H,W] -> [N, p^3*C], token n = (gd*GH + gh)*GW + gw, columns in
// (c, pd, ph, pw) order. Pure rearrangement (no weights).
Tensor patchify_blocks(const Tensor& z, int64_t p);

// Exact inverse of the patchify arrangement: [N, p^3*C] -> [C,D,H,W].
Tensor unpatchify(const Tensor& y, int64_t p, int64_t channels,
                  std::array<int64_t, 3> extents);

// Global self-attention over all tokens. attention_out, when given, receives
// the [N,N] softmax weights per head.
Tensor multi_head_attention(const Tensor& x, const Tensor& wqkv, const Tensor& bqkv,
                            const Tensor& wout, const Tensor& bout, int heads,
                            std::vector<Tensor>* attention_out = nullptr);

// Token-level control injection: x + lambda_l * gamma * c_tok.
Tensor inject(const Tensor& x, const Tensor& c_tok, const Tensor& gamma, const Tensor& lambda_l);

// Control signal handed to DiTModel::forward by the adapter: tokens plus a
// per-layer multiplier (lambda_l * gamma(t), or a fixed pi).
struct ControlHook {
    Tensor tokens;                                 // [N_tok, d]
    std::function<Tensor(int layer)> multiplier;   // 1-based layer -> scalar tensor
    std::vector<int> layers;                       // 1-based injection set
    bool applies_to(int layer) const;
};

class DiTModel {
  public:
    DiTModel(DiTConfig cfg, uint64_t seed);

    const DiTConfig& config() const { return cfg_; }

    // patchify + posenc -> L adaLN-Zero blocks -> final projection -> unpatchify.
    // Output shape equals input shape.
    Tensor forward(const Tensor& z_t, int t, const ControlHook* control = nullptr) const;

    Tensor time_embedding(int t) const;  // [d]
    Tensor patchify(const Tensor& z) const;  // learned patch embedding, [N_tok, d]
    Tensor run_block(int layer, const Tensor& x, const Tensor& t_emb,
                     std::vector<Tensor>* attention_out = nullptr) const;  // layer 1-based
    Tensor final_layer(const Tensor& x, const Tensor& t_emb) const;  // [N_tok, p^3*C_z]

    const std::vector<std::string>& param_names() const { return names_; }
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    std::vector<Tensor> parameters();
    void set_requires_grad(bool rg);
    int64_t parameter_count() const;

    const Tensor& positional_table() const { return pos_; }

  private:
    DiTConfig cfg_;
    std::vector<std::string> names_;
    std::map<std::string, Tensor> params_;
    Tensor pos_;
};

}  // namespace vdt
