#include "vdt/dit.hpp"

#include <algorithm>
#include <cmath>

namespace vdt {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kInitSd = 0.02;

// [k] x [k,m] (+ [m]) -> [m]
Tensor linear_vec(const Tensor& v, const Tensor& w, const Tensor& b) {
    Tensor row = reshape(v, {1, v.numel()});
    Tensor y = add_vec_last(matmul(row, w), b);
    return reshape(y, {y.numel()});
}

Tensor modulate(const Tensor& h, const Tensor& shift, const Tensor& scl) {
    return add_vec_last(mul_vec_last(h, add_scalar(scl, 1.0)), shift);
}

}  // namespace

ModelSize parse_model_size(const std::string& name) {
    if (name == "XS") return ModelSize::XS;
    if (name == "S") return ModelSize::S;
    if (name == "B") return ModelSize::B;
    if (name == "L") return ModelSize::L;
    throw ConfigError("unknown model size '" + name + "' (expected XS, S, B or L)");
}

std::string model_size_name(ModelSize size) {
    switch (size) {
        case ModelSize::XS: return "XS";
        case ModelSize::S: return "S";
        case ModelSize::B: return "B";
        case ModelSize::L: return "L";
    }
    return "?";
}

std::array<int64_t, 3> DiTConfig::grid() const {
    return {latent_extents[0] / patch, latent_extents[1] / patch, latent_extents[2] / patch};
}

int64_t DiTConfig::token_count() const {
    auto g = grid();
    return g[0] * g[1] * g[2];
}

int64_t DiTConfig::patch_dim() const {
    return static_cast<int64_t>(patch) * patch * patch * latent_channels;
}

void DiTConfig::validate() const {
    if (depth < 1) throw ConfigError("dit config: depth must be >= 1");
    if (hidden < 6 || hidden % 6 != 0)
        throw ConfigError("dit config: hidden must be divisible by 6 (three-axis sin-cos split), got " +
                          std::to_string(hidden));
    if (heads < 1 || hidden % heads != 0)
        throw ConfigError("dit config: hidden " + std::to_string(hidden) +
                          " not divisible by heads " + std::to_string(heads));
    if (patch < 1) throw ConfigError("dit config: patch must be >= 1");
    if (latent_channels < 1) throw ConfigError("dit config: latent_channels must be >= 1");
    for (int64_t e : latent_extents)
        if (e < 1 || e % patch != 0)
            throw ConfigError("dit config: latent extent " + std::to_string(e) +
                              " not divisible by patch " + std::to_string(patch));
    if (mlp_ratio < 1) throw ConfigError("dit config: mlp_ratio must be >= 1");
    if (time_freq_dim < 2 || time_freq_dim % 2 != 0)
        throw ConfigError("dit config: time_freq_dim must be even and >= 2");
}

DiTConfig make_config(ModelSize size, int patch, int64_t latent_channels,
                      std::array<int64_t, 3> latent_extents) {
    DiTConfig cfg;
    switch (size) {
        case ModelSize::XS: cfg.depth = 6;  cfg.hidden = 384;  cfg.heads = 6;  break;
        case ModelSize::S:  cfg.depth = 12; cfg.hidden = 384;  cfg.heads = 6;  break;
        case ModelSize::B:  cfg.depth = 12; cfg.hidden = 768;  cfg.heads = 12; break;
        case ModelSize::L:  cfg.depth = 24; cfg.hidden = 1152; cfg.heads = 16; break;
    }
    cfg.patch = patch;
    cfg.latent_channels = latent_channels;
    cfg.latent_extents = latent_extents;
    cfg.validate();
    return cfg;
}

std::vector<ParamSpec> dit_param_specs(const DiTConfig& cfg) {
    cfg.validate();
    const int64_t d = cfg.hidden;
    const int64_t m = d * cfg.mlp_ratio;
    const int64_t pd = cfg.patch_dim();
    using Init = ParamSpec::Init;
    std::vector<ParamSpec> specs;
    specs.push_back({"patch_embed.weight",
                     {d, cfg.latent_channels, cfg.patch, cfg.patch, cfg.patch},
                     Init::Normal});
    specs.push_back({"patch_embed.bias", {d}, Init::Zero});
    specs.push_back({"t_embed.fc1.weight", {cfg.time_freq_dim, d}, Init::Normal});
    specs.push_back({"t_embed.fc1.bias", {d}, Init::Zero});
    specs.push_back({"t_embed.fc2.weight", {d, d}, Init::Normal});
    specs.push_back({"t_embed.fc2.bias", {d}, Init::Zero});
    for (int i = 0; i < cfg.depth; ++i) {
        std::string p = "blocks." + std::to_string(i) + ".";
        specs.push_back({p + "adaln.weight", {d, 6 * d}, Init::Zero});
        specs.push_back({p + "adaln.bias", {6 * d}, Init::Zero});
        specs.push_back({p + "attn.qkv.weight", {d, 3 * d}, Init::Normal});
        specs.push_back({p + "attn.qkv.bias", {3 * d}, Init::Zero});
        specs.push_back({p + "attn.out.weight", {d, d}, Init::Normal});
        specs.push_back({p + "attn.out.bias", {d}, Init::Zero});
        specs.push_back({p + "mlp.fc1.weight", {d, m}, Init::Normal});
        specs.push_back({p + "mlp.fc1.bias", {m}, Init::Zero});
        specs.push_back({p + "mlp.fc2.weight", {m, d}, Init::Normal});
        specs.push_back({p + "mlp.fc2.bias", {d}, Init::Zero});
    }
    specs.push_back({"final.adaln.weight", {d, 2 * d}, Init::Zero});
    specs.push_back({"final.adaln.bias", {2 * d}, Init::Zero});
    specs.push_back({"final.proj.weight", {d, pd}, Init::Zero});
    specs.push_back({"final.proj.bias", {pd}, Init::Zero});
    return specs;
}

int64_t dit_param_count(const DiTConfig& cfg) {
    int64_t n = 0;
    for (const auto& s : dit_param_specs(cfg)) n += shape_numel(s.shape);
    return n;
}

Tensor sinusoidal_features(double pos, int64_t dim) {
    if (dim < 2 || dim % 2 != 0) throw ContractError("sinusoidal_features: dim must be even");
    int64_t half = dim / 2;
    std::vector<double> v(dim);
    for (int64_t j = 0; j < half; ++j) {
        double omega = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
        v[2 * j] = std::sin(pos * omega);
        v[2 * j + 1] = std::cos(pos * omega);
    }
    return Tensor::from({dim}, std::move(v));
}

Tensor posenc3d(std::array<int64_t, 3> grid, int64_t d) {
    if (d % 6 != 0) throw ConfigError("posenc3d: d must be divisible by 6, got " + std::to_string(d));
    int64_t g = d / 3;
    int64_t n = grid[0] * grid[1] * grid[2];
    std::vector<double> table(static_cast<size_t>(n * d));
    // 1-D encodings per axis, cached per coordinate
    std::array<std::vector<Tensor>, 3> axis_enc;
    for (int a = 0; a < 3; ++a)
        for (int64_t c = 0; c < grid[a]; ++c)
            axis_enc[a].push_back(sinusoidal_features(static_cast<double>(c), g));
    int64_t row = 0;
    for (int64_t gd = 0; gd < grid[0]; ++gd)
        for (int64_t gh = 0; gh < grid[1]; ++gh)
            for (int64_t gw = 0; gw < grid[2]; ++gw) {
                const auto& ed = axis_enc[0][gd].values();
                const auto& eh = axis_enc[1][gh].values();
                const auto& ew = axis_enc[2][gw].values();
                for (int64_t j = 0; j < g; ++j) {
                    table[row * d + j] = ed[j];
                    table[row * d + g + j] = eh[j];
                    table[row * d + 2 * g + j] = ew[j];
                }
                ++row;
            }
    return Tensor::from({n, d}, std::move(table));
}

Tensor patchify_blocks(const Tensor& z, int64_t p) {
    if (z.rank() != 4) throw DimensionError("patchify_blocks: expected [C,D,H,W], got " + shape_str(z.shape()));
    return im2col(z, p, p);
}

Tensor unpatchify(const Tensor& y, int64_t p, int64_t channels, std::array<int64_t, 3> extents) {
    auto [gd, gh, gw] = std::array<int64_t, 3>{extents[0] / p, extents[1] / p, extents[2] / p};
    int64_t n = gd * gh * gw;
    int64_t width = p * p * p * channels;
    if (y.rank() != 2 || y.dim(0) != n || y.dim(1) != width)
        throw DimensionError("unpatchify: tokens " + shape_str(y.shape()) + " inconsistent with " +
                             std::to_string(n) + " patches of width " + std::to_string(width));
    for (int64_t e : extents)
        if (e % p != 0) throw DimensionError("unpatchify: extent not divisible by patch");
    std::vector<double> out(static_cast<size_t>(channels * extents[0] * extents[1] * extents[2]));
    auto map = std::make_shared<std::vector<int64_t>>(out.size());  // dst -> src
    const auto& yv = y.values();
    int64_t tok = 0;
    for (int64_t a = 0; a < gd; ++a)
        for (int64_t b = 0; b < gh; ++b)
            for (int64_t c = 0; c < gw; ++c) {
                int64_t col = 0;
                for (int64_t ch = 0; ch < channels; ++ch)
                    for (int64_t pd = 0; pd < p; ++pd)
                        for (int64_t ph = 0; ph < p; ++ph)
                            for (int64_t pw = 0; pw < p; ++pw) {
                                int64_t dst = ((ch * extents[0] + a * p + pd) * extents[1] +
                                               b * p + ph) * extents[2] + c * p + pw;
                                int64_t src = tok * width + col;
                                out[dst] = yv[src];
                                (*map)[dst] = src;
                                ++col;
                            }
                ++tok;
            }
    auto yn = y.node();
    Tensor t = Tensor::from({channels, extents[0], extents[1], extents[2]}, std::move(out));
    if (y.requires_grad()) {
        // pure permutation: gradient routes back through the same index map
        auto node = t.node();
        node->requires_grad = true;
        node->parents = {yn};
        node->backward_fn = [yn, map](TensorNode& self) {
            yn->ensure_grad();
            for (size_t dst = 0; dst < self.grad.size(); ++dst)
                yn->grad[(*map)[dst]] += self.grad[dst];
        };
    }
    return t;
}

Tensor multi_head_attention(const Tensor& x, const Tensor& wqkv, const Tensor& bqkv,
                            const Tensor& wout, const Tensor& bout, int heads,
                            std::vector<Tensor>* attention_out) {
    int64_t d = x.dim(1);
    if (d % heads != 0) throw DimensionError("attention: token dim not divisible by head count");
    int64_t dh = d / heads;
    Tensor qkv = add_vec_last(matmul(x, wqkv), bqkv);
    Tensor q = slice_last(qkv, 0, d);
    Tensor k = slice_last(qkv, d, d);
    Tensor v = slice_last(qkv, 2 * d, d);
    double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tensor qh = slice_last(q, h * dh, dh);
        Tensor kh = slice_last(k, h * dh, dh);
        Tensor vh = slice_last(v, h * dh, dh);
        Tensor scores = scale(matmul(qh, transpose2d(kh)), inv_sqrt_dh);
        Tensor a = softmax(scores, 1);
        if (attention_out) attention_out->push_back(a);
        outs.push_back(matmul(a, vh));
    }
    Tensor cat = heads == 1 ? outs[0] : concat_last(outs);
    return add_vec_last(matmul(cat, wout), bout);
}

Tensor inject(const Tensor& x, const Tensor& c_tok, const Tensor& gamma, const Tensor& lambda_l) {
    if (x.shape() != c_tok.shape())
        throw DimensionError("inject: x " + shape_str(x.shape()) + " vs control tokens " +
                             shape_str(c_tok.shape()));
    return add(x, scale_by(scale_by(c_tok, gamma), lambda_l));
}

bool ControlHook::applies_to(int layer) const {
    return std::find(layers.begin(), layers.end(), layer) != layers.end();
}

DiTModel::DiTModel(DiTConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    for (const auto& spec : dit_param_specs(cfg_)) {
        Tensor t;
        switch (spec.init) {
            case ParamSpec::Init::Normal: t = randn(rng, spec.shape, 0.0, kInitSd); break;
            case ParamSpec::Init::Zero: t = Tensor::zeros(spec.shape); break;
            case ParamSpec::Init::One: t = Tensor::full(spec.shape, 1.0); break;
        }
        t.set_requires_grad(true);
        names_.push_back(spec.name);
        params_.emplace(spec.name, t);
    }
    pos_ = posenc3d(cfg_.grid(), cfg_.hidden);
}

Tensor& DiTModel::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& DiTModel::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
}

std::vector<Tensor> DiTModel::parameters() {
    std::vector<Tensor> out;
    out.reserve(names_.size());
    for (const auto& n : names_) out.push_back(params_.at(n));
    return out;
}

void DiTModel::set_requires_grad(bool rg) {
    for (const auto& n : names_) params_.at(n).set_requires_grad(rg);
}

int64_t DiTModel::parameter_count() const {
    int64_t n = 0;
    for (const auto& name : names_) n += params_.at(name).numel();
    return n;
}

Tensor DiTModel::time_embedding(int t) const {
    if (t < 0) throw ContractError("time_embedding: t must be >= 0");
    Tensor feats = sinusoidal_features(static_cast<double>(t), cfg_.time_freq_dim);
    Tensor h = linear_vec(feats, param("t_embed.fc1.weight"), param("t_embed.fc1.bias"));
    return linear_vec(silu(h), param("t_embed.fc2.weight"), param("t_embed.fc2.bias"));
}

Tensor DiTModel::patchify(const Tensor& z) const {
    const auto& w = param("patch_embed.weight");
    Tensor wmat = transpose2d(reshape(w, {cfg_.hidden, cfg_.patch_dim()}));
    Tensor tokens = matmul(patchify_blocks(z, cfg_.patch), wmat);
    return add_vec_last(tokens, param("patch_embed.bias"));
}

Tensor DiTModel::run_block(int layer, const Tensor& x, const Tensor& t_emb,
                           std::vector<Tensor>* attention_out) const {
    if (layer < 1 || layer > cfg_.depth) throw ContractError("run_block: layer out of range");
    const std::string p = "blocks." + std::to_string(layer - 1) + ".";
    const int64_t d = cfg_.hidden;
    Tensor mod = linear_vec(silu(t_emb), param(p + "adaln.weight"), param(p + "adaln.bias"));
    Tensor shift1 = slice_last(mod, 0, d), scale1 = slice_last(mod, d, d),
           gate1 = slice_last(mod, 2 * d, d), shift2 = slice_last(mod, 3 * d, d),
           scale2 = slice_last(mod, 4 * d, d), gate2 = slice_last(mod, 5 * d, d);

    Tensor h = modulate(layer_norm(x, 1, kLnEps), shift1, scale1);
    Tensor attn = multi_head_attention(h, param(p + "attn.qkv.weight"), param(p + "attn.qkv.bias"),
                                       param(p + "attn.out.weight"), param(p + "attn.out.bias"),
                                       cfg_.heads, attention_out);
    Tensor x1 = add(x, mul_vec_last(attn, gate1));

    Tensor h2 = modulate(layer_norm(x1, 1, kLnEps), shift2, scale2);
    Tensor m = add_vec_last(matmul(h2, param(p + "mlp.fc1.weight")), param(p + "mlp.fc1.bias"));
    m = add_vec_last(matmul(gelu(m), param(p + "mlp.fc2.weight")), param(p + "mlp.fc2.bias"));
    return add(x1, mul_vec_last(m, gate2));
}

Tensor DiTModel::final_layer(const Tensor& x, const Tensor& t_emb) const {
    const int64_t d = cfg_.hidden;
    Tensor mod = linear_vec(silu(t_emb), param("final.adaln.weight"), param("final.adaln.bias"));
    Tensor shift = slice_last(mod, 0, d), scl = slice_last(mod, d, d);
    Tensor h = modulate(layer_norm(x, 1, kLnEps), shift, scl);
    return add_vec_last(matmul(h, param("final.proj.weight")), param("final.proj.bias"));
}

Tensor DiTModel::forward(const Tensor& z_t, int t, const ControlHook* control) const {
    Shape expect{cfg_.latent_channels, cfg_.latent_extents[0], cfg_.latent_extents[1],
                 cfg_.latent_extents[2]};
    if (z_t.shape() != expect)
        throw DimensionError("forward: latent " + shape_str(z_t.shape()) + " does not match config " +
                             shape_str(expect));
    if (control && control->tokens.shape() != Shape{cfg_.token_count(), cfg_.hidden})
        throw DimensionError("forward: control tokens " + shape_str(control->tokens.shape()) +
                             " do not match [" + std::to_string(cfg_.token_count()) + " x " +
                             std::to_string(cfg_.hidden) + "]");
    Tensor x = add(patchify(z_t), pos_);
    Tensor t_emb = time_embedding(t);
    for (int layer = 1; layer <= cfg_.depth; ++layer) {
        if (control && control->applies_to(layer))
            x = add(x, scale_by(control->tokens, control->multiplier(layer)));
        x = run_block(layer, x, t_emb);
    }
    Tensor y = final_layer(x, t_emb);
    return unpatchify(y, cfg_.patch, cfg_.latent_channels, cfg_.latent_extents);
}

}  // namespace vdt
