#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vdt/checkpoint.hpp"
#include "vdt/pipeline.hpp"
#include "vdt/tgca.hpp"
#include "vdt/wavelet.hpp"

using namespace vdt;

namespace {

// backbone at the default pipeline geometry: 32^3 volumes, levels=3, p=2
DiTConfig backbone_config() { return make_config(ModelSize::XS, 2, 512, {4, 4, 4}); }

AdapterConfig small_adapter_config() {
    AdapterConfig cfg;
    cfg.cond_channels = 3;
    cfg.stages = 4;
    cfg.token_dim = 48;
    cfg.input_extents = {32, 32, 32};
    cfg.grid = {2, 2, 2};
    cfg.injection_layers = {1, 2};
    cfg.gate_hidden = 16;
    return cfg;
}

void perturb_model(DiTModel& model, uint64_t seed, double sd = 0.05) {
    Rng rng(seed);
    for (const auto& name : model.param_names())
        for (auto& v : model.param(name).mutable_values()) v += rng.normal(0.0, sd);
}

Tensor random_mask(uint64_t seed) {
    Phantom ph = generate_phantom(seed, {32, 32, 32}, 2);
    return ph.mask;
}

}  // namespace

TEST_CASE("adapter geometry derivation") {
    AdapterConfig cfg = make_adapter_config(backbone_config(), 3, 3);
    CHECK(cfg.stages == 4);  // levels + log2(patch)
    CHECK(cfg.input_extents == std::array<int64_t, 3>{32, 32, 32});
    CHECK(cfg.grid == std::array<int64_t, 3>{2, 2, 2});
    CHECK(cfg.token_dim == 384);
    CHECK(cfg.injection_layers.size() == 6);
    // doubling channel schedule up to d
    CHECK(cfg.stage_channels(0) == 48);
    CHECK(cfg.stage_channels(1) == 96);
    CHECK(cfg.stage_channels(2) == 192);
    CHECK(cfg.stage_channels(3) == 384);
}

TEST_CASE("fresh adapter encodes any mask to exactly zero tokens") {
    ControlAdapter adapter(make_adapter_config(backbone_config(), 3, 3), 11);
    for (uint64_t seed : {1, 2, 3}) {
        Tensor tokens = adapter.encode_condition(random_mask(seed));
        CHECK(tokens.shape() == Shape{8, 384});
        for (double v : tokens.values()) CHECK(v == 0.0);
    }
}

TEST_CASE("encode_condition rejects geometry mismatches") {
    ControlAdapter adapter(small_adapter_config(), 12);
    Rng rng(13);
    CHECK_THROWS_AS(adapter.encode_condition(randn(rng, {3, 16, 16, 16})), DimensionError);
    CHECK_THROWS_AS(adapter.encode_condition(randn(rng, {2, 32, 32, 32})), DimensionError);
}

TEST_CASE("gate: zero-init gives one half, range stays open (0,1)") {
    AdapterConfig cfg = small_adapter_config();
    ControlAdapter adapter(cfg, 14);
    Rng rng(15);
    for (int t = 0; t < 5; ++t) {
        Tensor t_emb = randn(rng, {cfg.token_dim});
        CHECK(adapter.gate(t_emb).value() == 0.5);  // sigma(0) with a zero-init final layer
    }
    // random reparameterizations keep the output strictly inside (0,1);
    // sd kept moderate so the double-precision sigmoid cannot round to 1
    bool in_range = true;
    for (int trial = 0; trial < 10000; ++trial) {
        for (const std::string& name :
             {std::string("gate.fc1.weight"), std::string("gate.fc1.bias"),
              std::string("gate.fc2.weight"), std::string("gate.fc2.bias")})
            for (auto& v : adapter.param(name).mutable_values()) v = rng.normal(0.0, 0.2);
        double g = adapter.gate(randn(rng, {cfg.token_dim})).value();
        in_range = in_range && g > 0.0 && g < 1.0;
    }
    CHECK(in_range);
}

TEST_CASE("gate is a contract error in fixed mode") {
    ControlAdapter adapter(small_adapter_config(), 16);
    adapter.set_fixed_scale(0.5);
    Rng rng(17);
    CHECK_THROWS_AS(adapter.gate(randn(rng, {48})), ContractError);
    adapter.set_learned_mode();
    CHECK_NOTHROW(adapter.gate(randn(rng, {48})));
}

TEST_CASE("gate gradient matches finite differences") {
    AdapterConfig cfg = small_adapter_config();
    ControlAdapter adapter(cfg, 18);
    Rng rng(19);
    for (auto& v : adapter.param("gate.fc2.weight").mutable_values()) v = rng.normal(0.0, 0.5);
    Tensor t_emb = randn(rng, {cfg.token_dim});

    Tensor& p = adapter.param("gate.fc1.weight");
    Tensor start = detach(p);
    p.zero_grad();
    backward(adapter.gate(t_emb));
    std::vector<double> g_ad = p.grad();
    ScalarFn f = [&](const Tensor& probe) {
        p.mutable_values() = probe.values();
        return adapter.gate(t_emb).value();
    };
    Tensor g_fd = finite_difference_grad(f, start, 1e-5);
    p.mutable_values() = start.values();
    CHECK(max_rel_error(g_ad, g_fd.values()) < 1e-6);
}

TEST_CASE("inject: identities and linearity") {
    Rng rng(20);
    Tensor x = randn(rng, {8, 48});
    Tensor zero_tok = Tensor::zeros({8, 48});
    Tensor gamma = Tensor::scalar(0.7);
    Tensor lambda1 = Tensor::scalar(1.3);

    Tensor same = inject(x, zero_tok, gamma, lambda1);
    CHECK(same.values() == x.values());

    Tensor c = randn(rng, {8, 48});
    Tensor same2 = inject(x, c, gamma, Tensor::scalar(0.0));
    CHECK(same2.values() == x.values());

    Tensor a = randn(rng, {8, 48});
    Tensor b = randn(rng, {8, 48});
    Tensor lhs = inject(x, add(a, b), gamma, lambda1);
    Tensor ra = inject(x, a, gamma, lambda1);
    Tensor rb = inject(x, b, gamma, lambda1);
    for (size_t i = 0; i < lhs.values().size(); ++i) {
        double left = lhs.values()[i] - x.values()[i];
        double right = (ra.values()[i] - x.values()[i]) + (rb.values()[i] - x.values()[i]);
        CHECK(std::abs(left - right) < 1e-12);
    }
}

TEST_CASE("fixed-scale ablation semantics") {
    ControlAdapter adapter(small_adapter_config(), 21);
    CHECK_THROWS_AS(adapter.set_fixed_scale(-0.1), ContractError);
    for (double pi : {0.1, 1.0}) CHECK_NOTHROW(adapter.set_fixed_scale(pi));

    // injected residual scales exactly with pi
    Rng rng(22);
    Tensor x = randn(rng, {4, 8});
    Tensor c = randn(rng, {4, 8});
    Tensor low = inject(x, c, Tensor::scalar(1.0), Tensor::scalar(0.1));
    Tensor high = inject(x, c, Tensor::scalar(1.0), Tensor::scalar(1.0));
    double n_low = 0, n_high = 0;
    for (size_t i = 0; i < x.values().size(); ++i) {
        double rl = low.values()[i] - x.values()[i];
        double rh = high.values()[i] - x.values()[i];
        n_low += rl * rl;
        n_high += rh * rh;
    }
    CHECK(std::sqrt(n_high) / std::sqrt(n_low) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("zero-init equivalence: conditional forward equals unconditional bit-for-bit") {
    DiTModel backbone(backbone_config(), 23);
    perturb_model(backbone, 24);
    ControlAdapter adapter(make_adapter_config(backbone_config(), 3, 3), 25);
    Rng rng(26);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor z = randn(rng, {512, 4, 4, 4});
        int t = 37 + trial;
        Tensor uncond = backbone.forward(z, t);
        ControlHook hook = adapter.make_hook(random_mask(100 + trial), backbone.time_embedding(t));
        Tensor cond = backbone.forward(z, t, &hook);
        CHECK(cond.values() == uncond.values());
    }
}

TEST_CASE("pi = 0 makes the conditional path exactly unconditional even when trained") {
    DiTModel backbone(backbone_config(), 27);
    perturb_model(backbone, 28);
    AdapterConfig acfg = make_adapter_config(backbone_config(), 3, 3);
    ControlAdapter adapter(acfg, 29);
    // non-silent encoder
    Rng rng(30);
    for (const auto& name : adapter.param_names())
        for (auto& v : adapter.param(name).mutable_values()) v += rng.normal(0.0, 0.05);
    adapter.set_fixed_scale(0.0);
    Tensor z = randn(rng, {512, 4, 4, 4});
    Tensor uncond = backbone.forward(z, 12);
    ControlHook hook = adapter.make_hook(random_mask(200), backbone.time_embedding(12));
    Tensor cond = backbone.forward(z, 12, &hook);
    CHECK(cond.values() == uncond.values());
}

TEST_CASE("adapter training: backbone frozen, silent start, parameters move") {
    DiTModel backbone(backbone_config(), 31);
    perturb_model(backbone, 32);
    NoiseSchedule sched = cosine_schedule(50, 0.008);
    LatentSpec spec{3, 1};

    std::vector<Tensor> latents, masks;
    for (uint64_t s = 0; s < 2; ++s) {
        Phantom ph = generate_phantom(300 + s, {32, 32, 32}, 2);
        latents.push_back(wavelet_encode(ph.volume, spec));
        masks.push_back(ph.mask);
    }

    AdapterConfig acfg = make_adapter_config(backbone_config(), 3, 3);
    ControlAdapter adapter(acfg, 33);

    // step-0: conditional loss equals unconditional loss on the same batch
    {
        Rng rng(34);
        Tensor eps = randn(rng, latents[0].shape());
        Tensor zt = q_sample(latents[0], 25, eps, sched);
        Tensor v = velocity_target(latents[0], eps, 25, sched);
        Tensor uncond_loss = huber_loss(backbone.forward(zt, 25), v, 1.0);
        ControlHook hook = adapter.make_hook(masks[0], backbone.time_embedding(25));
        Tensor cond_loss = huber_loss(backbone.forward(zt, 25, &hook), v, 1.0);
        CHECK(cond_loss.value() == uncond_loss.value());
    }

    RunConfig cfg;
    cfg.T = 50;
    cfg.adapter_steps = 30;
    cfg.batch = 1;
    cfg.lr = 1e-3;
    cfg.val_interval = 10;
    uint64_t backbone_before = params_hash_f32(backbone.parameters());
    uint64_t adapter_before = params_hash_f32(adapter.parameters());
    train_adapter(backbone, adapter, sched, latents, masks, cfg);
    CHECK(params_hash_f32(backbone.parameters()) == backbone_before);
    CHECK(params_hash_f32(adapter.parameters()) != adapter_before);

    // trained encoder produces distinct tokens for distinct masks
    Tensor ta = adapter.encode_condition(masks[0]);
    Tensor tb = adapter.encode_condition(masks[1]);
    double dist = 0;
    for (size_t i = 0; i < ta.values().size(); ++i) {
        double d = ta.values()[i] - tb.values()[i];
        dist += d * d;
    }
    CHECK(dist > 0.0);

    CHECK_THROWS_AS(train_adapter(backbone, adapter, sched, {}, {}, cfg), ContractError);
}
