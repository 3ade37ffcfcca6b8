#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradinv/attack.hpp"
#include "gradinv/config.hpp"
#include "gradinv/fedsim.hpp"
#include "gradinv/synth.hpp"

namespace gradinv {

struct DatasetConfig {
    enum class Kind { synthetic, idx } kind = Kind::synthetic;
    SynthKind synth_kind = SynthKind::gaussian_blobs;
    uint64_t seed = 0;
    std::string idx_images;
    std::string idx_labels;
};

// One attack configuration within a sweep; the ablation grid is four plans.
struct AttackPlan {
    Variant variant = Variant::nlsme;
    bool use_nlp = true;
    bool use_pr = true;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelSpec spec;
    ClientConfig client;
    AttackConfig attack;
    std::vector<int64_t> sweep_e, sweep_b, sweep_n, sweep_r;
    std::vector<AttackPlan> plans;
    int64_t trials = 1;
    std::string output_dir = "out";
    uint64_t seed = 0;
    int64_t jobs = 1;
    int64_t cap = 256;  // guard on sweep size x trials x plans

    static ExperimentConfig from_kv(const KvConfig& kv);
    int64_t total_runs() const;
    void validate() const;
};

struct RunRecord {
    std::string dataset;
    int64_t e = 0, n = 0, b = 0, r = 0;
    std::string variant;
    bool use_nlp = false, use_pr = false;
    int64_t trial = 0;
    uint64_t seed = 0;
    double lsim = 0, psnr = 0, ssim = 0, wall_minutes = 0;
    int64_t param_count = 0;
    bool corrupted = false;
    bool failed = false;
    std::string error;
};

struct RunOutput {
    RunRecord record;
    std::string run_id;
    ImageBatch reconstruction;
    ImageBatch truth;
    std::vector<IterationStats> history;
};

// Executes every (E,N,B,R) x trial cell against every attack plan. Cells are
// dispatched to a fixed-size worker pool; records come back in sweep order, so
// output is independent of scheduling. Per-run failures are recorded and the
// sweep continues.
std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg);

// results.csv, per-run history CSV, and recon/truth PGM pairs
void emit_outputs(const std::vector<RunOutput>& outputs, const std::string& output_dir);

std::string results_csv_header();
std::string record_csv_row(const RunRecord& rec);

}  // namespace gradinv
