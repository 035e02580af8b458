#include "vdt/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vdt/optim.hpp"
#include "vdt/volume_io.hpp"
#include "vdt/wavelet.hpp"

namespace vdt {

using nlohmann::json;

namespace {

constexpr uint64_t kSeedInit = 0x11;
constexpr uint64_t kSeedTrain = 0x22;
constexpr uint64_t kSeedVal = 0x33;
constexpr uint64_t kSeedAdapterInit = 0x44;
constexpr uint64_t kSeedAdapterTrain = 0x55;

double median(std::vector<double> v) {
    if (v.empty()) throw ContractError("median of empty list");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Tensor clamp_unit(const Tensor& t) {
    std::vector<double> v = t.values();
    for (auto& x : v) x = std::clamp(x, -1.0, 1.0);
    return Tensor::from(t.shape(), std::move(v));
}

// [-1,1] intensities -> [0,1] for SSIM statistics
Tensor to_unit_range(const Tensor& t) {
    std::vector<double> v = t.values();
    for (auto& x : v) x = 0.5 * (x + 1.0);
    return Tensor::from(t.shape(), std::move(v));
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// one optimization step over a random batch; returns the scalar loss
double training_step(DiTModel& model, ControlAdapter* adapter, Adam& opt,
                     const NoiseSchedule& sched, const std::vector<Tensor>& latents,
                     const std::vector<Tensor>* masks, const RunConfig& cfg, Rng& rng) {
    opt.zero_grad();
    Tensor loss;
    for (int b = 0; b < cfg.batch; ++b) {
        int i = static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(latents.size()) - 1));
        int t = static_cast<int>(rng.uniform_int(1, sched.T));
        Tensor eps = randn(rng, latents[i].shape());
        Tensor z_t = q_sample(latents[i], t, eps, sched);
        Tensor v = velocity_target(latents[i], eps, t, sched);
        Tensor v_hat;
        if (adapter) {
            ControlHook hook = adapter->make_hook((*masks)[i], model.time_embedding(t));
            v_hat = model.forward(z_t, t, &hook);
        } else {
            v_hat = model.forward(z_t, t);
        }
        Tensor l = huber_loss(v_hat, v, cfg.huber_delta);
        loss = b == 0 ? l : add(loss, l);
    }
    loss = scale(loss, 1.0 / cfg.batch);
    backward(loss);
    opt.step();
    return loss.value();
}

// deterministic validation loss: fixed (t, eps) per item, gradients off
double validation_loss(DiTModel& model, ControlAdapter* adapter, const NoiseSchedule& sched,
                       const std::vector<Tensor>& latents, const std::vector<Tensor>* masks,
                       const RunConfig& cfg, uint64_t val_seed) {
    NoGradGuard guard(model.parameters());
    std::optional<NoGradGuard> aguard;
    if (adapter) aguard.emplace(adapter->parameters());
    Rng vrng(val_seed);
    double acc = 0.0;
    for (size_t i = 0; i < latents.size(); ++i) {
        int t = static_cast<int>(vrng.uniform_int(1, sched.T));
        Tensor eps = randn(vrng, latents[i].shape());
        Tensor z_t = q_sample(latents[i], t, eps, sched);
        Tensor v = velocity_target(latents[i], eps, t, sched);
        Tensor v_hat;
        if (adapter) {
            ControlHook hook = adapter->make_hook((*masks)[i], model.time_embedding(t));
            v_hat = model.forward(z_t, t, &hook);
        } else {
            v_hat = model.forward(z_t, t);
        }
        acc += huber_loss(v_hat, v, cfg.huber_delta).value();
    }
    return acc / static_cast<double>(latents.size());
}

std::vector<std::vector<double>> snapshot(const std::vector<Tensor>& params) {
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.values());
    return out;
}

void restore(std::vector<Tensor>& params, const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < params.size(); ++i) params[i].mutable_values() = snap[i];
}

TrainLog run_training(DiTModel& model, ControlAdapter* adapter, const NoiseSchedule& sched,
                      const std::vector<Tensor>& train_latents,
                      const std::vector<Tensor>& val_latents,
                      const std::vector<Tensor>* train_masks,
                      const std::vector<Tensor>* val_masks, const RunConfig& cfg, int steps,
                      uint64_t train_seed, uint64_t val_seed,
                      const std::function<void(int)>& periodic = {}) {
    if (train_latents.empty()) throw ContractError("training: empty dataset");
    std::vector<Tensor> params = adapter ? adapter->parameters() : model.parameters();
    Adam opt(params, AdamOptions{.lr = cfg.lr});
    Rng rng(train_seed);
    TrainLog log;
    log.best_val = HUGE_VAL;
    auto best = snapshot(params);
    for (int step = 1; step <= steps; ++step) {
        double l = training_step(model, adapter, opt, sched, train_latents, train_masks, cfg, rng);
        log.train_loss.push_back(l);
        if (step % cfg.val_interval == 0 || step == steps) {
            double vl = val_latents.empty()
                            ? l
                            : validation_loss(model, adapter, sched, val_latents, val_masks, cfg,
                                              val_seed);
            log.val_loss.emplace_back(step, vl);
            if (vl < log.best_val) {
                log.best_val = vl;
                log.best_step = step;
                best = snapshot(params);
            }
            if (periodic) periodic(step);
        }
    }
    restore(params, best);
    log.rng_state = rng.state_string();
    return log;
}

}  // namespace

TrainLog train_backbone(DiTModel& model, const NoiseSchedule& sched,
                        const std::vector<Tensor>& train_latents,
                        const std::vector<Tensor>& val_latents, const RunConfig& cfg) {
    return run_training(model, nullptr, sched, train_latents, val_latents, nullptr, nullptr, cfg,
                        cfg.steps, mix_seed(cfg.seed, kSeedTrain), mix_seed(cfg.seed, kSeedVal));
}

TrainLog train_adapter(DiTModel& backbone, ControlAdapter& adapter, const NoiseSchedule& sched,
                       const std::vector<Tensor>& latents, const std::vector<Tensor>& masks,
                       const RunConfig& cfg) {
    if (latents.empty()) throw ContractError("train_adapter: empty dataset");
    if (latents.size() != masks.size())
        throw ContractError("train_adapter: latent/mask counts differ");
    NoGradGuard freeze(backbone.parameters());  // only adapter parameters update
    return run_training(backbone, &adapter, sched, latents, {}, &masks, nullptr, cfg,
                        cfg.adapter_steps, mix_seed(cfg.seed, kSeedAdapterTrain),
                        mix_seed(cfg.seed, kSeedVal));
}

SampleMode parse_sample_mode(const std::string& mode) {
    if (mode == "deterministic") return SampleMode::Deterministic;
    if (mode == "ancestral") return SampleMode::Ancestral;
    throw ConfigError("unknown sample mode '" + mode + "'");
}

Tensor sample_latent(DiTModel& model, const NoiseSchedule& sched, uint64_t seed, SampleMode mode,
                     ControlAdapter* adapter, const Tensor* mask) {
    if ((adapter == nullptr) != (mask == nullptr))
        throw ContractError("sample_latent: adapter and mask must be given together");
    NoGradGuard guard(model.parameters());
    std::optional<NoGradGuard> aguard;
    std::optional<Tensor> tokens;
    if (adapter) {
        aguard.emplace(adapter->parameters());
        tokens = adapter->encode_condition(*mask);
    }
    const DiTConfig& dc = model.config();
    Shape shape{dc.latent_channels, dc.latent_extents[0], dc.latent_extents[1],
                dc.latent_extents[2]};
    DenoiseFn fn = [&](const Tensor& z, int t) {
        if (!adapter) return detach(model.forward(z, t));
        ControlHook hook = adapter->make_hook_from_tokens(*tokens, model.time_embedding(t));
        return detach(model.forward(z, t, &hook));
    };
    return sample_loop(fn, sched, shape, seed, mode);
}

// ---- checkpoint plumbing ------------------------------------------------------

namespace {

CheckpointHeader make_header(const RunConfig& cfg, const std::string& kind,
                             const std::vector<std::string>& names,
                             const std::vector<Tensor>& params, const std::string& rng_state) {
    CheckpointHeader h;
    h.kind = kind;
    h.config_echo = cfg.echo.empty() ? render_run_config(cfg) : cfg.echo;
    for (size_t i = 0; i < names.size(); ++i) h.params.emplace_back(names[i], params[i].shape());
    h.codec_levels = cfg.levels;
    h.codec_input_channels = 1;
    h.sched_T = cfg.T;
    h.sched_s = cfg.s;
    h.rng_state = rng_state;
    return h;
}

struct ManifestEntry {
    std::string volume, mask, split;
    uint64_t seed;
};

std::filesystem::path data_dir(const RunConfig& cfg) {
    return std::filesystem::path(cfg.out_dir) / "data";
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw IoError("missing manifest: " + (dir / "manifest.json").string());
    json j = json::parse(is);
    std::vector<ManifestEntry> out;
    for (const auto& e : j.at("entries"))
        out.push_back({e.at("volume").get<std::string>(), e.at("mask").get<std::string>(),
                       e.at("split").get<std::string>(), e.at("seed").get<uint64_t>()});
    return out;
}

void load_split(const std::filesystem::path& dir, const std::vector<ManifestEntry>& entries,
                const std::string& split, const LatentSpec& spec, std::vector<Tensor>* latents,
                std::vector<Tensor>* masks) {
    for (const auto& e : entries) {
        if (e.split != split) continue;
        Tensor vol = read_volume(dir / e.volume).data;
        if (latents) latents->push_back(wavelet_encode(vol, spec));
        if (masks) masks->push_back(read_volume(dir / e.mask).data);
    }
}

}  // namespace

std::filesystem::path cmd_phantoms(const RunConfig& cfg) {
    cfg.validate();
    auto dir = data_dir(cfg);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    PhantomDataset ds = phantom_dataset(cfg.seed, cfg.n, cfg.volume_geometry(), cfg.n_labels);
    json entries = json::array();
    char name[32];
    for (size_t i = 0; i < ds.items.size(); ++i) {
        std::snprintf(name, sizeof(name), "vol_%04zu.raw", i);
        std::string vol_name = name;
        std::snprintf(name, sizeof(name), "mask_%04zu.raw", i);
        std::string mask_name = name;
        write_volume(dir / vol_name, ds.items[i].volume);
        write_volume(dir / mask_name, ds.items[i].mask);
        const char* split = ds.split[i] == Split::Train ? "train"
                            : ds.split[i] == Split::Val ? "val"
                                                        : "test";
        entries.push_back({{"volume", vol_name},
                           {"mask", mask_name},
                           {"split", split},
                           {"seed", ds.items[i].seed}});
    }
    json manifest = {{"seed", cfg.seed},
                     {"n", cfg.n},
                     {"geometry", cfg.geometry},
                     {"n_labels", cfg.n_labels},
                     {"entries", entries}};
    std::filesystem::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("cannot write " + tmp.string());
        os << manifest.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, dir / "manifest.json", ec);
    if (ec) throw IoError("rename failed: " + ec.message());
    return dir;
}

TrainArtifacts cmd_train_backbone(const RunConfig& cfg) {
    cfg.validate();
    auto dir = data_dir(cfg);
    auto entries = read_manifest(dir);
    LatentSpec spec = cfg.latent_spec();
    std::vector<Tensor> train_latents, val_latents;
    load_split(dir, entries, "train", spec, &train_latents, nullptr);
    load_split(dir, entries, "val", spec, &val_latents, nullptr);
    NoiseSchedule sched = cosine_schedule(cfg.T, cfg.s);
    DiTModel model(cfg.dit_config(), mix_seed(cfg.seed, kSeedInit));
    std::filesystem::path out(cfg.out_dir);

    // rotating checkpoint at every validation point, written from detached
    // copies so the f32 snap cannot disturb the live training trajectory
    auto periodic = [&](int step) {
        std::vector<Tensor> copies;
        for (auto& p : model.parameters()) copies.push_back(detach(p));
        CheckpointHeader h = make_header(cfg, "backbone", model.param_names(), copies,
                                         "step " + std::to_string(step));
        save_checkpoint(out / "backbone_latest.ckpt", h, copies);
    };
    TrainLog log = run_training(model, nullptr, sched, train_latents, val_latents, nullptr,
                                nullptr, cfg, cfg.steps, mix_seed(cfg.seed, kSeedTrain),
                                mix_seed(cfg.seed, kSeedVal), periodic);
    {
        std::ofstream os(out / "backbone_loss.txt");
        for (size_t i = 0; i < log.train_loss.size(); ++i)
            os << (i + 1) << " " << fmt(log.train_loss[i]) << "\n";
    }
    CheckpointHeader h = make_header(cfg, "backbone", model.param_names(), model.parameters(),
                                     log.rng_state);
    std::filesystem::path ckpt = out / "backbone.ckpt";
    save_checkpoint(ckpt, h, model.parameters());
    return {ckpt, std::move(log)};
}

BackboneBundle backbone_from_checkpoint(const std::filesystem::path& path) {
    LoadedCheckpoint ckpt = load_checkpoint(path);
    RunConfig cfg = parse_run_config(ckpt.header.config_echo);
    BackboneBundle bundle{cfg, DiTModel(cfg.dit_config(), 0),
                          cosine_schedule(ckpt.header.sched_T, ckpt.header.sched_s), 0};
    load_parameters(bundle.model, ckpt);
    bundle.params_hash = ckpt.header.blob_hash;
    return bundle;
}

ControlAdapter adapter_from_checkpoint(const std::filesystem::path& path,
                                       const BackboneBundle& backbone) {
    LoadedCheckpoint ckpt = load_checkpoint(path);
    if (ckpt.header.backbone_hash != backbone.params_hash)
        throw ConfigError("adapter checkpoint was trained against a different backbone (hash " +
                          std::to_string(ckpt.header.backbone_hash) + " vs " +
                          std::to_string(backbone.params_hash) + ")");
    RunConfig cfg = parse_run_config(ckpt.header.config_echo);
    AdapterConfig ac = make_adapter_config(backbone.cfg.dit_config(), cfg.levels, cfg.n_labels + 1);
    ac.injection_layers = cfg.injection_layers();
    ControlAdapter adapter(ac, 0);
    load_parameters(adapter, ckpt);
    if (ckpt.header.gate_mode == "fixed") adapter.set_fixed_scale(ckpt.header.fixed_pi);
    return adapter;
}

TrainArtifacts cmd_train_adapter(const RunConfig& cfg, const std::filesystem::path& backbone_ckpt) {
    cfg.validate();
    BackboneBundle backbone = backbone_from_checkpoint(backbone_ckpt);
    for (const auto& [mine, theirs] :
         std::initializer_list<std::pair<std::string, std::string>>{
             {cfg.size, backbone.cfg.size},
             {std::to_string(cfg.patch), std::to_string(backbone.cfg.patch)},
             {std::to_string(cfg.levels), std::to_string(backbone.cfg.levels)},
             {std::to_string(cfg.geometry), std::to_string(backbone.cfg.geometry)},
             {std::to_string(cfg.T), std::to_string(backbone.cfg.T)}})
        if (mine != theirs)
            throw ConfigError("adapter config does not match backbone checkpoint (" + mine +
                              " vs " + theirs + ")");

    auto dir = data_dir(cfg);
    auto entries = read_manifest(dir);
    LatentSpec spec = cfg.latent_spec();
    std::vector<Tensor> latents, masks;
    load_split(dir, entries, "train", spec, &latents, &masks);

    AdapterConfig ac = make_adapter_config(backbone.cfg.dit_config(), cfg.levels, cfg.n_labels + 1);
    ac.injection_layers = cfg.injection_layers();
    ControlAdapter adapter(ac, mix_seed(cfg.seed, kSeedAdapterInit));
    if (cfg.adapter_mode == "fixed") adapter.set_fixed_scale(cfg.pi);

    NoiseSchedule sched = cosine_schedule(cfg.T, cfg.s);
    TrainLog log = train_adapter(backbone.model, adapter, sched, latents, masks, cfg);

    CheckpointHeader h = make_header(cfg, "adapter", adapter.param_names(), adapter.parameters(),
                                     log.rng_state);
    h.backbone_hash = backbone.params_hash;
    h.gate_mode = cfg.adapter_mode;
    h.fixed_pi = cfg.pi;
    std::filesystem::path ckpt =
        std::filesystem::path(cfg.out_dir) / ("adapter_" + cfg.adapter_mode + ".ckpt");
    save_checkpoint(ckpt, h, adapter.parameters());
    return {ckpt, std::move(log)};
}

std::vector<std::filesystem::path> cmd_sample(const RunConfig& cfg,
                                              const std::filesystem::path& backbone_ckpt,
                                              const std::filesystem::path& adapter_ckpt,
                                              const std::filesystem::path& masks_dir, int n,
                                              uint64_t seed, SampleMode mode) {
    cfg.validate();
    BackboneBundle backbone = backbone_from_checkpoint(backbone_ckpt);
    std::optional<ControlAdapter> adapter;
    std::vector<Tensor> masks;
    if (!masks_dir.empty()) {
        if (adapter_ckpt.empty())
            throw ConfigError("conditioned sampling needs an adapter checkpoint");
        adapter = adapter_from_checkpoint(adapter_ckpt, backbone);
        masks = read_volume_dir(masks_dir);
        if (masks.empty()) throw ContractError("masks directory has no volumes: " + masks_dir.string());
    }
    LatentSpec spec;
    spec.levels = backbone.cfg.levels;
    spec.input_channels = 1;

    std::filesystem::path out = std::filesystem::path(cfg.out_dir) / "samples";
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string());
    std::vector<std::filesystem::path> files;
    char name[32];
    for (int i = 0; i < n; ++i) {
        const Tensor* mask = masks.empty() ? nullptr : &masks[i % masks.size()];
        Tensor z = sample_latent(backbone.model, backbone.sched, mix_seed(seed, i), mode,
                                 adapter ? &*adapter : nullptr, mask);
        Tensor vol = clamp_unit(wavelet_decode(z, spec));
        std::snprintf(name, sizeof(name), "sample_%04d.raw", i);
        write_volume(out / name, vol);
        files.push_back(out / name);
    }
    return files;
}

// ---- evaluation ----------------------------------------------------------------

std::string EvalReport::text() const {
    std::ostringstream os;
    for (const auto& r : records) {
        os << "name=" << r.name << " value=" << fmt(r.value);
        for (const auto& [k, v] : r.attrs) os << " " << k << "=" << v;
        os << "\n";
    }
    return os.str();
}

const EvalRecord* EvalReport::find(const std::string& name) const {
    for (const auto& r : records)
        if (r.name == name) return &r;
    return nullptr;
}

EvalReport cmd_evaluate(const std::filesystem::path& real_dir,
                        const std::filesystem::path& fake_dir,
                        const std::filesystem::path& masks_dir, const EvalOptions& opts,
                        const std::filesystem::path& report_path) {
    std::vector<Tensor> real = read_volume_dir(real_dir);
    std::vector<Tensor> fake = read_volume_dir(fake_dir);
    if (real.empty() || fake.empty())
        throw ContractError("evaluate: empty volume directory (" +
                            (real.empty() ? real_dir : fake_dir).string() + ")");

    EvalReport report;
    auto seed_attr = std::make_pair(std::string("seed"), std::to_string(opts.seed));
    std::string extractor = extractor_name(opts.extractor);

    FeatureSet real_fs = extract_features(real, opts.extractor, "real", opts.seed);
    FeatureSet fake_fs = extract_features(fake, opts.extractor, "synthetic", opts.seed);

    SelectKResult sk = select_k(real_fs, opts.k_threshold, opts.seed);
    report.records.push_back({"select_k", static_cast<double>(sk.k),
                              {{"threshold", fmt(opts.k_threshold)},
                               {"saturated", sk.saturated ? "1" : "0"},
                               {"extractor", extractor},
                               seed_attr}});

    PRDCResult pr = prdc(real_fs, fake_fs, sk.k);
    auto k_attr = std::make_pair(std::string("k"), std::to_string(sk.k));
    auto n_attr = std::make_pair(std::string("n_real"), std::to_string(real.size()));
    auto m_attr = std::make_pair(std::string("n_fake"), std::to_string(fake.size()));
    report.records.push_back({"prdc.precision", pr.precision, {k_attr, n_attr, m_attr, seed_attr}});
    report.records.push_back({"prdc.recall", pr.recall, {k_attr, n_attr, m_attr, seed_attr}});
    report.records.push_back({"prdc.density", pr.density, {k_attr, n_attr, m_attr, seed_attr}});
    report.records.push_back({"prdc.coverage", pr.coverage, {k_attr, n_attr, m_attr, seed_attr}});

    report.records.push_back({"frechet", frechet_distance(real_fs, fake_fs),
                              {{"extractor", extractor}, n_attr, m_attr, seed_attr}});
    report.records.push_back({"frechet_25d", frechet_25d(real, fake, opts.extractor, opts.seed),
                              {{"extractor", extractor}, n_attr, m_attr, seed_attr}});

    // MS-SSIM diversity over random synthetic pairs, on [0,1]-mapped volumes
    if (fake.size() >= 2) {
        Rng rng(mix_seed(opts.seed, 0x77));
        MsSsimOptions mopt;
        double acc = 0, acc2 = 0;
        for (int p = 0; p < opts.ms_ssim_pairs; ++p) {
            int64_t i = rng.uniform_int(0, static_cast<int64_t>(fake.size()) - 1);
            int64_t j = rng.uniform_int(0, static_cast<int64_t>(fake.size()) - 2);
            if (j >= i) ++j;
            double v = ms_ssim(to_unit_range(fake[i]), to_unit_range(fake[j]), mopt);
            acc += v;
            acc2 += v * v;
        }
        double mean_v = acc / opts.ms_ssim_pairs;
        double var_v = std::max(acc2 / opts.ms_ssim_pairs - mean_v * mean_v, 0.0);
        report.records.push_back({"ms_ssim.mean", mean_v,
                                  {{"pairs", std::to_string(opts.ms_ssim_pairs)},
                                   {"scales", std::to_string(mopt.scales)},
                                   {"range", "[0,1]"},
                                   seed_attr}});
        report.records.push_back({"ms_ssim.std", std::sqrt(var_v),
                                  {{"pairs", std::to_string(opts.ms_ssim_pairs)}, seed_attr}});
    }

    if (!masks_dir.empty()) {
        std::vector<Tensor> masks = read_volume_dir(masks_dir);
        if (masks.empty()) throw ContractError("evaluate: masks directory is empty");
        size_t n_pairs = std::min(fake.size(), masks.size());
        double diag = 0;
        {
            auto sh = fake[0].shape();
            double dd = static_cast<double>(sh[sh.size() - 3]) * opts.spacing[0];
            double hh = static_cast<double>(sh[sh.size() - 2]) * opts.spacing[1];
            double ww = static_cast<double>(sh[sh.size() - 1]) * opts.spacing[2];
            diag = std::sqrt(dd * dd + hh * hh + ww * ww);
        }
        for (int label = 1; label <= opts.n_labels; ++label) {
            std::vector<double> dices, hds;
            for (size_t i = 0; i < n_pairs; ++i) {
                Tensor pred = predict_mask_from_volume(fake[i], label);
                Tensor ref = mask_label(masks[i], label);
                dices.push_back(dice(pred, ref));
                bool pred_empty = std::none_of(pred.values().begin(), pred.values().end(),
                                               [](double v) { return v > 0.5; });
                bool ref_empty = std::none_of(ref.values().begin(), ref.values().end(),
                                              [](double v) { return v > 0.5; });
                // empty prediction: worst-case surface distance (volume diagonal)
                hds.push_back(pred_empty || ref_empty ? diag : hd95(pred, ref, opts.spacing));
            }
            std::string l = std::to_string(label);
            report.records.push_back({"dice.label" + l + ".median", median(dices),
                                      {{"n", std::to_string(n_pairs)},
                                       {"predictor", "threshold+lcc"},
                                       seed_attr}});
            report.records.push_back({"hd95.label" + l + ".median", median(hds),
                                      {{"n", std::to_string(n_pairs)},
                                       {"spacing", fmt(opts.spacing[0])},
                                       seed_attr}});
        }
    }

    if (!report_path.empty()) {
        std::ofstream os(report_path);
        if (!os) throw IoError("cannot write report " + report_path.string());
        os << report.text();
    }
    return report;
}

}  // namespace vdt
