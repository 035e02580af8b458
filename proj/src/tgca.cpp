#include "vdt/tgca.hpp"

#include <cmath>

namespace vdt {

void AdapterConfig::validate() const {
    if (cond_channels < 1) throw ConfigError("adapter: cond_channels must be >= 1");
    if (stages < 1) throw ConfigError("adapter: stages must be >= 1");
    if (token_dim < 1) throw ConfigError("adapter: token_dim must be >= 1");
    if (gate_hidden < 1) throw ConfigError("adapter: gate_hidden must be >= 1");
    if (token_dim % (int64_t{1} << (stages - 1)) != 0)
        throw ConfigError("adapter: token_dim " + std::to_string(token_dim) +
                          " not divisible by 2^" + std::to_string(stages - 1) +
                          " (doubling channel schedule)");
    int64_t factor = int64_t{1} << stages;
    for (int a = 0; a < 3; ++a) {
        if (input_extents[a] % factor != 0 || input_extents[a] / factor != grid[a])
            throw ConfigError("adapter: input extent " + std::to_string(input_extents[a]) +
                              " does not downsample by 2^" + std::to_string(stages) +
                              " to grid " + std::to_string(grid[a]));
    }
    if (injection_layers.empty()) throw ConfigError("adapter: empty injection layer set");
    for (int l : injection_layers)
        if (l < 1) throw ConfigError("adapter: injection layers are 1-based");
    if (mode == GateMode::Fixed && fixed_pi < 0)
        throw ContractError("adapter: fixed scale pi must be >= 0");
}

int64_t AdapterConfig::stage_channels(int stage) const {
    if (stage < 0 || stage >= stages) throw ContractError("adapter: stage out of range");
    return token_dim >> (stages - 1 - stage);
}

AdapterConfig make_adapter_config(const DiTConfig& backbone, int codec_levels, int cond_channels) {
    backbone.validate();
    if (codec_levels < 1) throw ConfigError("adapter: codec levels must be >= 1");
    int p = backbone.patch;
    int log2p = 0;
    while ((1 << log2p) < p) ++log2p;
    if ((1 << log2p) != p)
        throw ConfigError("adapter: patch size " + std::to_string(p) + " must be a power of 2");
    AdapterConfig cfg;
    cfg.cond_channels = cond_channels;
    cfg.stages = codec_levels + log2p;
    cfg.token_dim = backbone.hidden;
    cfg.grid = backbone.grid();
    for (int a = 0; a < 3; ++a)
        cfg.input_extents[a] = backbone.latent_extents[a] * (int64_t{1} << codec_levels);
    cfg.injection_layers.resize(backbone.depth);
    for (int i = 0; i < backbone.depth; ++i) cfg.injection_layers[i] = i + 1;
    cfg.gate_hidden = std::max(8, backbone.hidden / 4);
    cfg.validate();
    return cfg;
}

std::vector<ParamSpec> adapter_param_specs(const AdapterConfig& cfg) {
    cfg.validate();
    using Init = ParamSpec::Init;
    std::vector<ParamSpec> specs;
    int64_t in_ch = cfg.cond_channels;
    for (int i = 0; i < cfg.stages; ++i) {
        int64_t out_ch = cfg.stage_channels(i);
        std::string p = "enc." + std::to_string(i) + ".";
        bool last = i == cfg.stages - 1;
        specs.push_back({p + "weight", {out_ch, in_ch, 2, 2, 2}, last ? Init::Zero : Init::Normal});
        specs.push_back({p + "bias", {out_ch}, Init::Zero});
        in_ch = out_ch;
    }
    specs.push_back({"gate.fc1.weight", {cfg.token_dim, cfg.gate_hidden}, Init::Normal});
    specs.push_back({"gate.fc1.bias", {cfg.gate_hidden}, Init::Zero});
    specs.push_back({"gate.fc2.weight", {cfg.gate_hidden, 1}, Init::Zero});
    specs.push_back({"gate.fc2.bias", {1}, Init::Zero});
    specs.push_back({"lambda", {static_cast<int64_t>(cfg.injection_layers.size())}, Init::One});
    return specs;
}

ControlAdapter::ControlAdapter(AdapterConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
    Rng rng(seed);
    for (const auto& spec : adapter_param_specs(cfg_)) {
        Tensor t;
        switch (spec.init) {
            case ParamSpec::Init::Normal: t = randn(rng, spec.shape, 0.0, 0.02); break;
            case ParamSpec::Init::Zero: t = Tensor::zeros(spec.shape); break;
            case ParamSpec::Init::One: t = Tensor::full(spec.shape, 1.0); break;
        }
        t.set_requires_grad(true);
        names_.push_back(spec.name);
        params_.emplace(spec.name, t);
    }
}

Tensor& ControlAdapter::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown adapter parameter '" + name + "'");
    return it->second;
}

const Tensor& ControlAdapter::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ContractError("unknown adapter parameter '" + name + "'");
    return it->second;
}

std::vector<Tensor> ControlAdapter::parameters() {
    std::vector<Tensor> out;
    for (const auto& n : names_) out.push_back(params_.at(n));
    return out;
}

void ControlAdapter::set_requires_grad(bool rg) {
    for (const auto& n : names_) params_.at(n).set_requires_grad(rg);
}

Tensor ControlAdapter::encode_condition(const Tensor& s) const {
    Shape expect{cfg_.cond_channels, cfg_.input_extents[0], cfg_.input_extents[1],
                 cfg_.input_extents[2]};
    if (s.shape() != expect)
        throw DimensionError("encode_condition: mask " + shape_str(s.shape()) +
                             " does not match expected " + shape_str(expect));
    Tensor x = s;
    for (int i = 0; i < cfg_.stages; ++i) {
        std::string p = "enc." + std::to_string(i) + ".";
        x = add_vec_first(conv3d(x, param(p + "weight"), 2), param(p + "bias"));
        if (i + 1 < cfg_.stages) x = gelu(x);
    }
    // [d, gd, gh, gw] -> [N_tok, d], spatial row-major, same order as patchify
    int64_t n = cfg_.grid[0] * cfg_.grid[1] * cfg_.grid[2];
    return transpose2d(reshape(x, {cfg_.token_dim, n}));
}

Tensor ControlAdapter::gate(const Tensor& t_emb) const {
    if (cfg_.mode != AdapterConfig::GateMode::Learned)
        throw ContractError("gate: adapter is in fixed-scale mode");
    if (t_emb.rank() != 1 || t_emb.dim(0) != cfg_.token_dim)
        throw DimensionError("gate: t_emb " + shape_str(t_emb.shape()) + " expected [" +
                             std::to_string(cfg_.token_dim) + "]");
    Tensor h = add_vec_last(matmul(reshape(t_emb, {1, cfg_.token_dim}), param("gate.fc1.weight")),
                            param("gate.fc1.bias"));
    Tensor pre = add_vec_last(matmul(silu(h), param("gate.fc2.weight")), param("gate.fc2.bias"));
    return reshape(sigmoid(pre), {1});
}

Tensor ControlAdapter::lambda(int layer) const {
    for (size_t i = 0; i < cfg_.injection_layers.size(); ++i)
        if (cfg_.injection_layers[i] == layer)
            return slice_last(param("lambda"), static_cast<int64_t>(i), 1);
    throw ContractError("lambda: layer " + std::to_string(layer) + " not in injection set");
}

ControlHook ControlAdapter::make_hook(const Tensor& s, const Tensor& t_emb) const {
    return make_hook_from_tokens(encode_condition(s), t_emb);
}

ControlHook ControlAdapter::make_hook_from_tokens(const Tensor& tokens, const Tensor& t_emb) const {
    ControlHook hook;
    hook.tokens = tokens;
    hook.layers = cfg_.injection_layers;
    if (cfg_.mode == AdapterConfig::GateMode::Fixed) {
        Tensor pi = Tensor::scalar(cfg_.fixed_pi);
        hook.multiplier = [pi](int) { return pi; };
    } else {
        Tensor gamma = gate(t_emb);
        const ControlAdapter* self = this;
        hook.multiplier = [self, gamma](int layer) { return mul(self->lambda(layer), gamma); };
    }
    return hook;
}

void ControlAdapter::set_fixed_scale(double pi) {
    if (pi < 0) throw ContractError("set_fixed_scale: pi must be >= 0");
    cfg_.mode = AdapterConfig::GateMode::Fixed;
    cfg_.fixed_pi = pi;
}

void ControlAdapter::set_learned_mode() { cfg_.mode = AdapterConfig::GateMode::Learned; }

}  // namespace vdt
