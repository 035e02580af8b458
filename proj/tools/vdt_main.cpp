// vdt: volumetric diffusion transformer pipeline.
// Subcommands: phantoms, train-backbone, train-adapter, sample, evaluate.
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 contract/dimension error.

#include <CLI11.hpp>

#include <iostream>

#include "vdt/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int64_t seed = -1;
    std::string size;
    int patch = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "run config file (key = value sections)");
    cmd->add_option("--out", f.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", f.seed, "seed (overrides config)");
    cmd->add_option("--size", f.size, "model size (overrides config)")
        ->check(CLI::IsMember({"XS", "S", "B", "L"}));
    cmd->add_option("--patch", f.patch, "patch size (overrides config)")
        ->check(CLI::IsMember({1, 2, 4}));
}

vdt::RunConfig resolve_config(const CommonFlags& f) {
    vdt::RunConfig cfg = f.config_path.empty() ? vdt::RunConfig{}
                                               : vdt::load_run_config(f.config_path);
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.seed >= 0) cfg.seed = static_cast<uint64_t>(f.seed);
    if (!f.size.empty()) cfg.size = f.size;
    if (f.patch > 0) cfg.patch = f.patch;
    if (cfg.echo.empty()) cfg.echo = vdt::render_run_config(cfg);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volumetric diffusion transformer pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string backbone_ckpt, adapter_ckpt, masks_dir, mode = "deterministic";
    std::string real_dir, fake_dir, report_path;
    double pi = -1.0;
    int n = 0;

    CLI::App* c_phantoms = app.add_subcommand("phantoms", "generate the phantom dataset");
    add_common(c_phantoms, flags);
    c_phantoms->add_option("-n,--count", n, "number of phantoms (overrides config)");

    CLI::App* c_train = app.add_subcommand("train-backbone", "train the unconditional backbone");
    add_common(c_train, flags);

    CLI::App* c_adapter = app.add_subcommand("train-adapter", "train the control adapter");
    add_common(c_adapter, flags);
    c_adapter->add_option("--ckpt", backbone_ckpt, "backbone checkpoint")->required();
    c_adapter->add_option("--pi", pi, "fixed conditioning scale (selects the ablation mode)");

    CLI::App* c_sample = app.add_subcommand("sample", "sample volumes from a checkpoint");
    add_common(c_sample, flags);
    c_sample->add_option("--ckpt", backbone_ckpt, "backbone checkpoint")->required();
    c_sample->add_option("--adapter", adapter_ckpt, "adapter checkpoint (for conditioning)");
    c_sample->add_option("--masks", masks_dir, "directory of conditioning masks");
    c_sample->add_option("-n,--count", n, "number of samples (default 100)");
    c_sample->add_option("--mode", mode, "sampler")
        ->check(CLI::IsMember({"ancestral", "deterministic"}));

    CLI::App* c_eval = app.add_subcommand("evaluate", "run the metric battery");
    add_common(c_eval, flags);
    c_eval->add_option("--real", real_dir, "directory of real volumes")->required();
    c_eval->add_option("--fake", fake_dir, "directory of generated volumes")->required();
    c_eval->add_option("--masks", masks_dir, "conditioning masks for Dice/HD95");
    c_eval->add_option("--report", report_path, "report output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // usage problems are config errors; --help exits clean
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_phantoms->parsed()) {
            vdt::RunConfig cfg = resolve_config(flags);
            if (n > 0) {
                cfg.n = n;
                cfg.echo = vdt::render_run_config(cfg);
            }
            auto dir = vdt::cmd_phantoms(cfg);
            std::cout << "wrote " << cfg.n << " phantoms to " << dir.string() << "\n";
        } else if (c_train->parsed()) {
            vdt::RunConfig cfg = resolve_config(flags);
            auto art = vdt::cmd_train_backbone(cfg);
            std::cout << "checkpoint " << art.checkpoint.string() << " best_step "
                      << art.log.best_step << " best_val " << art.log.best_val << "\n";
        } else if (c_adapter->parsed()) {
            vdt::RunConfig cfg = resolve_config(flags);
            if (pi >= 0.0) {
                cfg.adapter_mode = "fixed";
                cfg.pi = pi;
                cfg.echo = vdt::render_run_config(cfg);
            }
            auto art = vdt::cmd_train_adapter(cfg, backbone_ckpt);
            std::cout << "checkpoint " << art.checkpoint.string() << "\n";
        } else if (c_sample->parsed()) {
            vdt::RunConfig cfg = resolve_config(flags);
            int count = n > 0 ? n : cfg.sample_n;
            auto files = vdt::cmd_sample(cfg, backbone_ckpt, adapter_ckpt, masks_dir, count,
                                         cfg.seed, vdt::parse_sample_mode(mode));
            std::cout << "wrote " << files.size() << " samples\n";
        } else if (c_eval->parsed()) {
            vdt::RunConfig cfg = resolve_config(flags);
            vdt::EvalOptions opts;
            opts.seed = cfg.seed;
            opts.n_labels = cfg.n_labels;
            std::filesystem::path report =
                report_path.empty() ? std::filesystem::path(cfg.out_dir) / "report.txt"
                                    : std::filesystem::path(report_path);
            std::filesystem::create_directories(report.parent_path());
            auto rep = vdt::cmd_evaluate(real_dir, fake_dir, masks_dir, opts, report);
            std::cout << rep.text();
        }
    } catch (const vdt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const vdt::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const vdt::ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
