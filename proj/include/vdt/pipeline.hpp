#pragma once

#include <filesystem>
#include <optional>

#include "vdt/checkpoint.hpp"
#include "vdt/metrics.hpp"
#include "vdt/phantom.hpp"
#include "vdt/run_config.hpp"
#include "vdt/schedule.hpp"

namespace vdt {

// ---- in-memory training ----------------------------------------------------

struct TrainLog {
    std::vector<double> train_loss;                 // one entry per step
    std::vector<std::pair<int, double>> val_loss;   // (step, loss) at val_interval
    int best_step = 0;
    double best_val = 0;
    std::string rng_state;  // training stream state at exit
};

// Velocity-prediction training on precomputed latents. On return the model
// holds the parameters of the best validation step (train loss stands in
// when the validation set is empty).
TrainLog train_backbone(DiTModel& model, const NoiseSchedule& sched,
                        const std::vector<Tensor>& train_latents,
                        const std::vector<Tensor>& val_latents, const RunConfig& cfg);

// TGCA training with the backbone frozen: only adapter parameters update.
TrainLog train_adapter(DiTModel& backbone, ControlAdapter& adapter, const NoiseSchedule& sched,
                       const std::vector<Tensor>& latents, const std::vector<Tensor>& masks,
                       const RunConfig& cfg);

// One full reverse chain in latent space; mask + adapter select the
// conditioned path. Gradients are disabled for the duration.
Tensor sample_latent(DiTModel& model, const NoiseSchedule& sched, uint64_t seed, SampleMode mode,
                     ControlAdapter* adapter = nullptr, const Tensor* mask = nullptr);

SampleMode parse_sample_mode(const std::string& mode);

// ---- checkpoint-backed model construction -----------------------------------

struct BackboneBundle {
    RunConfig cfg;
    DiTModel model;
    NoiseSchedule sched;
    uint64_t params_hash = 0;
};
BackboneBundle backbone_from_checkpoint(const std::filesystem::path& path);

ControlAdapter adapter_from_checkpoint(const std::filesystem::path& path,
                                       const BackboneBundle& backbone);

// ---- CLI commands ------------------------------------------------------------

// Writes volumes, masks and the split manifest under <out>/data.
std::filesystem::path cmd_phantoms(const RunConfig& cfg);

struct TrainArtifacts {
    std::filesystem::path checkpoint;
    TrainLog log;
};
TrainArtifacts cmd_train_backbone(const RunConfig& cfg);
TrainArtifacts cmd_train_adapter(const RunConfig& cfg, const std::filesystem::path& backbone_ckpt);

// Samples n volumes; masks_dir (with an adapter checkpoint) selects the
// conditioned path. Returns the written files.
std::vector<std::filesystem::path> cmd_sample(const RunConfig& cfg,
                                              const std::filesystem::path& backbone_ckpt,
                                              const std::filesystem::path& adapter_ckpt,
                                              const std::filesystem::path& masks_dir, int n,
                                              uint64_t seed, SampleMode mode);

struct EvalOptions {
    int ms_ssim_pairs = 100;
    double k_threshold = 0.95;
    uint64_t seed = 17;
    FeatureExtractor extractor = FeatureExtractor::PooledMoments;
    int n_labels = 2;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
};

struct EvalRecord {
    std::string name;
    double value = 0;
    std::vector<std::pair<std::string, std::string>> attrs;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    std::string text() const;
    const EvalRecord* find(const std::string& name) const;
};

// Full metric battery: select_k on real/real, PRDC, Fréchet (3D features and
// 2.5D axis-averaged), MS-SSIM diversity over sampled synthetic pairs, and,
// with masks, threshold-predicted Dice/HD95 against the conditioning masks.
EvalReport cmd_evaluate(const std::filesystem::path& real_dir,
                        const std::filesystem::path& fake_dir,
                        const std::filesystem::path& masks_dir, const EvalOptions& opts,
                        const std::filesystem::path& report_path);

}  // namespace vdt
