// gradinv: desk-scale gradient inversion lab for FedAVG clients.
//
//   gradinv simulate --config cfg.txt            client training diagnostics
//   gradinv attack   --config cfg.txt --out dir  single observation + attack
//   gradinv sweep    --config cfg.txt --out dir  full (E,N,B,R,variant) sweep
//   gradinv ablate   --config cfg.txt --out dir  four-variant component grid
//
// The config file is flat `key = value` text; --seed/--out/--jobs override it,
// and GRADINV_SEED is the seed fallback when neither is given.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "gradinv/experiment.hpp"
#include "gradinv/io.hpp"
#include "gradinv/metrics.hpp"
#include "gradinv/rng.hpp"

using namespace gradinv;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int64_t jobs = 0;       // 0: keep config value
    std::string seed_str;   // empty: keep config / env
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out) {
    cmd->add_option("--config", args.config_path, "flat key/value config file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", args.out_dir, "output directory");
    if (needs_out) out->required();
    cmd->add_option("--jobs", args.jobs, "parallel workers for sweeps");
    cmd->add_option("--seed", args.seed_str, "master seed (overrides config and GRADINV_SEED)");
}

ExperimentConfig load_config(const CommonArgs& args) {
    KvConfig kv = KvConfig::parse_file(args.config_path);
    ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    if (!kv.has("seed")) {
        if (const char* env = std::getenv("GRADINV_SEED")) cfg.seed = std::stoull(env);
    }
    if (!args.seed_str.empty()) cfg.seed = std::stoull(args.seed_str);
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    if (args.jobs > 0) cfg.jobs = args.jobs;
    return cfg;
}

ImageBatch build_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == DatasetConfig::Kind::idx) {
        ImageBatch full = load_idx(cfg.dataset.idx_images, cfg.dataset.idx_labels);
        std::vector<int64_t> idx;
        for (int64_t i = 0; i < std::min(full.b, cfg.client.dataset_size); ++i) idx.push_back(i);
        ImageBatch sub = full.subset(idx);
        for (int& l : sub.labels) l = l % static_cast<int>(cfg.spec.classes);
        return sub;
    }
    const int64_t draw = std::max(cfg.client.dataset_size, cfg.spec.classes);
    ImageBatch full = synth_dataset(cfg.dataset.synth_kind, cfg.spec.in_c, cfg.spec.in_h,
                                    cfg.spec.in_w, draw, cfg.spec.classes, cfg.dataset.seed);
    if (draw == cfg.client.dataset_size) return full;
    std::vector<int64_t> keep(static_cast<size_t>(cfg.client.dataset_size));
    for (int64_t i = 0; i < cfg.client.dataset_size; ++i) keep[static_cast<size_t>(i)] = i;
    return full.subset(keep);
}

int cmd_simulate(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    cfg.spec.validate();
    ImageBatch data = build_dataset(cfg);
    ParamVector w0 = init_params(cfg.spec, derive_seed(cfg.seed, 2));

    std::printf("model: |w| = %lld, dataset: N = %lld (%s)\n",
                static_cast<long long>(cfg.spec.param_count()),
                static_cast<long long>(data.b),
                cfg.dataset.kind == DatasetConfig::Kind::idx ? "idx" : "synthetic");
    ParamVector w = w0;
    for (int64_t r = 0; r < cfg.client.rounds; ++r) {
        ClientConfig round_cfg = cfg.client;
        round_cfg.shuffle_seed = derive_seed(cfg.client.shuffle_seed, static_cast<uint64_t>(r));
        TrainResult res = local_train(cfg.spec, w, data, round_cfg);
        double dw = 0.0;
        for (size_t i = 0; i < w.size(); ++i) {
            const double d = res.wT[i] - w[i];
            dw += d * d;
        }
        std::printf("round %lld: T = %lld steps, |dw| = %.6g, nonlinearity = %.6g\n",
                    static_cast<long long>(r),
                    static_cast<long long>(round_cfg.steps_per_round()), std::sqrt(dw),
                    trajectory_nonlinearity(res.trajectory));
        w = res.wT;
    }
    return 0;
}

int cmd_run(const CommonArgs& args, bool ablation) {
    ExperimentConfig cfg = load_config(args);
    if (ablation) {
        cfg.plans = {{Variant::sme, false, false},
                     {Variant::nlsme, true, false},    // nonlinear path only
                     {Variant::nlsme, false, true},    // path regularization only
                     {Variant::nlsme, true, true}};
    }
    auto outputs = run_experiment(cfg);
    emit_outputs(outputs, cfg.output_dir);

    std::printf("%s\n", results_csv_header().c_str());
    for (const auto& out : outputs) std::printf("%s\n", record_csv_row(out.record).c_str());
    std::printf("wrote %zu runs to %s\n", outputs.size(), cfg.output_dir.c_str());
    for (const auto& out : outputs)
        if (out.record.failed)
            std::fprintf(stderr, "run %s failed: %s\n", out.run_id.c_str(),
                         out.record.error.c_str());
    return 0;
}

int cmd_attack(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    // single cell: collapse the sweep to the base client config
    cfg.sweep_e = {cfg.client.epochs};
    cfg.sweep_n = {cfg.client.dataset_size};
    cfg.sweep_b = {cfg.client.batch_size};
    cfg.sweep_r = {cfg.client.rounds};
    cfg.plans = {{cfg.attack.variant, cfg.attack.use_nlp, cfg.attack.use_pr}};
    cfg.trials = 1;
    auto outputs = run_experiment(cfg);
    emit_outputs(outputs, cfg.output_dir);
    const RunRecord& rec = outputs[0].record;
    if (rec.failed) {
        std::fprintf(stderr, "attack failed: %s\n", rec.error.c_str());
        return 1;
    }
    std::printf("variant=%s lsim=%.6g psnr=%.4g ssim=%.4g corrupted=%s\n", rec.variant.c_str(),
                rec.lsim, rec.psnr, rec.ssim, rec.corrupted ? "true" : "false");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient inversion attacks on simulated FedAVG clients"};
    app.require_subcommand(1);

    CommonArgs sim_args, attack_args, sweep_args, ablate_args;
    CLI::App* sim = app.add_subcommand("simulate", "train a client and report diagnostics");
    add_common(sim, sim_args, false);
    CLI::App* atk = app.add_subcommand("attack", "run one attack and write outputs");
    add_common(atk, attack_args, true);
    CLI::App* sweep = app.add_subcommand("sweep", "run the configured sweep");
    add_common(sweep, sweep_args, true);
    CLI::App* ablate = app.add_subcommand("ablate", "run the four-variant ablation grid");
    add_common(ablate, ablate_args, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (atk->parsed()) return cmd_attack(attack_args);
        if (sweep->parsed()) return cmd_run(sweep_args, false);
        if (ablate->parsed()) return cmd_run(ablate_args, true);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
