#include "gradinv/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "gradinv/io.hpp"
#include "gradinv/metrics.hpp"
#include "gradinv/rng.hpp"

namespace gradinv {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

ModelSpec spec_from_kv(const KvConfig& kv) {
    ModelSpec spec;
    const std::string input = kv.get_str("spec.input", "1x8x8");
    long long c = 0, h = 0, w = 0;
    if (std::sscanf(input.c_str(), "%lldx%lldx%lld", &c, &h, &w) != 3)
        throw std::runtime_error("config: spec.input must look like CxHxW, got " + input);
    spec.in_c = c;
    spec.in_h = h;
    spec.in_w = w;
    spec.hidden.clear();
    if (kv.get_str("spec.hidden", "16") != "none")
        for (int64_t hsz : kv.get_int_list("spec.hidden", {16})) spec.hidden.push_back(hsz);
    spec.classes = kv.get_int("spec.classes", 4);
    const std::string act = kv.get_str("spec.activation", "relu");
    if (act == "relu")
        spec.act = Activation::relu;
    else if (act == "tanh")
        spec.act = Activation::tanh;
    else
        throw std::runtime_error("config: spec.activation must be relu or tanh, got " + act);
    return spec;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_kv(const KvConfig& kv) {
    ExperimentConfig cfg;

    const std::string dkind = kv.get_str("dataset.kind", "gaussian_blobs");
    if (dkind == "idx") {
        cfg.dataset.kind = DatasetConfig::Kind::idx;
        cfg.dataset.idx_images = kv.get_str("dataset.idx_images", "");
        cfg.dataset.idx_labels = kv.get_str("dataset.idx_labels", "");
        if (cfg.dataset.idx_images.empty())
            throw std::runtime_error("config: dataset.idx_images required for idx datasets");
    } else {
        cfg.dataset.kind = DatasetConfig::Kind::synthetic;
        cfg.dataset.synth_kind = synth_kind_from_name(dkind);
    }
    cfg.dataset.seed = kv.get_u64("dataset.seed", 1);

    cfg.spec = spec_from_kv(kv);

    cfg.client.epochs = kv.get_int("client.E", 1);
    cfg.client.dataset_size = kv.get_int("client.N", 10);
    cfg.client.batch_size = kv.get_int("client.B", 5);
    cfg.client.lr = kv.get_double("client.lr", 0.1);
    cfg.client.shuffle_seed = kv.get_u64("client.shuffle_seed", 0);
    cfg.client.rounds = kv.get_int("client.R", 1);
    cfg.client.warmup_rounds = kv.get_int("client.warmup_rounds", 0);
    const std::string opt = kv.get_str("client.optimizer", "sgd");
    if (opt == "sgd")
        cfg.client.optimizer = ClientOptimizer::sgd;
    else if (opt == "adamw")
        cfg.client.optimizer = ClientOptimizer::adamw;
    else
        throw std::runtime_error("config: client.optimizer must be sgd or adamw, got " + opt);
    cfg.client.adamw.beta1 = kv.get_double("client.adamw.beta1", 0.9);
    cfg.client.adamw.beta2 = kv.get_double("client.adamw.beta2", 0.999);
    cfg.client.adamw.eps = kv.get_double("client.adamw.eps", 1e-8);
    cfg.client.adamw.weight_decay = kv.get_double("client.adamw.weight_decay", 0.01);

    cfg.attack.variant = variant_from_name(kv.get_str("attack.variant", "nlsme"));
    cfg.attack.iterations = kv.get_int("attack.iterations", 2000);
    cfg.attack.lambda_tv = kv.get_double("attack.lambda_tv", 1e-2);
    cfg.attack.lambda_p = kv.get_double("attack.lambda_p", 1e-3);
    cfg.attack.lambda_d = kv.get_double("attack.lambda_d", 1e-4);
    cfg.attack.lambda_cls = kv.get_double("attack.lambda_cls", 0.0);
    cfg.attack.lr_dummy = kv.get_double("attack.lr", 0.1);
    cfg.attack.lr_t = kv.get_double("attack.lr_t", 1e-2);
    cfg.attack.lr_p1 = kv.get_double("attack.lr_p1", 1e-3);
    cfg.attack.lr_d = kv.get_double("attack.lr_d", 5e-2);
    cfg.attack.use_nlp = kv.get_bool("attack.use_nlp", true);
    cfg.attack.use_pr = kv.get_bool("attack.use_pr", true);

    cfg.sweep_e = kv.get_int_list("sweep.E", {cfg.client.epochs});
    cfg.sweep_n = kv.get_int_list("sweep.N", {cfg.client.dataset_size});
    cfg.sweep_b = kv.get_int_list("sweep.B", {cfg.client.batch_size});
    cfg.sweep_r = kv.get_int_list("sweep.R", {cfg.client.rounds});
    cfg.plans.clear();
    for (const std::string& v :
         kv.get_str_list("sweep.variant", {variant_name(cfg.attack.variant)})) {
        AttackPlan plan;
        plan.variant = variant_from_name(v);
        plan.use_nlp = cfg.attack.use_nlp;
        plan.use_pr = cfg.attack.use_pr;
        cfg.plans.push_back(plan);
    }

    cfg.trials = kv.get_int("trials", 1);
    cfg.output_dir = kv.get_str("output_dir", "out");
    cfg.seed = kv.get_u64("seed", 0);
    cfg.jobs = kv.get_int("jobs", 1);
    cfg.cap = kv.get_int("cap", 256);
    return cfg;
}

int64_t ExperimentConfig::total_runs() const {
    return static_cast<int64_t>(sweep_e.size() * sweep_n.size() * sweep_b.size() *
                                sweep_r.size() * plans.size()) *
           trials;
}

void ExperimentConfig::validate() const {
    spec.validate();
    if (trials < 1) throw std::runtime_error("config: trials must be >= 1");
    if (jobs < 1) throw std::runtime_error("config: jobs must be >= 1");
    if (plans.empty()) throw std::runtime_error("config: no attack variants selected");
    if (total_runs() > cap)
        throw std::runtime_error("config: sweep of " + std::to_string(total_runs()) +
                                 " runs exceeds cap " + std::to_string(cap) +
                                 "; raise 'cap' if intended");
}

namespace {

struct Cell {
    int64_t e, n, b, r, trial;
    uint64_t base_seed;  // shared by every plan in the cell
};

std::string plan_run_id(const Cell& cell, const AttackPlan& plan) {
    std::string id = "E" + std::to_string(cell.e) + "_N" + std::to_string(cell.n) + "_B" +
                     std::to_string(cell.b) + "_R" + std::to_string(cell.r) + "_t" +
                     std::to_string(cell.trial) + "_" + variant_name(plan.variant);
    if (plan.variant == Variant::nlsme && !(plan.use_nlp && plan.use_pr)) {
        id += plan.use_nlp ? "_nlp" : "";
        id += plan.use_pr ? "_pr" : "";
        if (!plan.use_nlp && !plan.use_pr) id += "_bare";
    }
    return id;
}

std::string dataset_name(const ExperimentConfig& cfg) {
    if (cfg.dataset.kind == DatasetConfig::Kind::idx) return "idx";
    return cfg.dataset.synth_kind == SynthKind::gaussian_blobs ? "gaussian_blobs" : "stripes";
}

ImageBatch cell_dataset(const ExperimentConfig& cfg, const Cell& cell) {
    if (cfg.dataset.kind == DatasetConfig::Kind::idx) {
        ImageBatch full = load_idx(cfg.dataset.idx_images, cfg.dataset.idx_labels);
        if (full.b < cell.n)
            throw std::runtime_error("dataset has " + std::to_string(full.b) +
                                     " images, need N=" + std::to_string(cell.n));
        std::vector<int64_t> idx(static_cast<size_t>(cell.n));
        for (int64_t i = 0; i < cell.n; ++i) idx[static_cast<size_t>(i)] = i;
        ImageBatch sub = full.subset(idx);
        // relabel out-of-range classes so any IDX file works with a small head
        for (int& l : sub.labels) l = l % static_cast<int>(cfg.spec.classes);
        return sub;
    }
    // synth requires n >= classes; draw enough and keep the first N
    const int64_t draw = std::max(cell.n, cfg.spec.classes);
    ImageBatch full = synth_dataset(cfg.dataset.synth_kind, cfg.spec.in_c, cfg.spec.in_h,
                                    cfg.spec.in_w, draw, cfg.spec.classes,
                                    derive_seed(cfg.dataset.seed, cell.base_seed));
    if (draw == cell.n) return full;
    std::vector<int64_t> keep(static_cast<size_t>(cell.n));
    for (int64_t i = 0; i < cell.n; ++i) keep[static_cast<size_t>(i)] = i;
    return full.subset(keep);
}

std::vector<RunOutput> run_cell(const ExperimentConfig& cfg, const Cell& cell) {
    std::vector<RunOutput> outputs;
    ImageBatch data = cell_dataset(cfg, cell);

    ClientConfig client = cfg.client;
    client.epochs = cell.e;
    client.dataset_size = cell.n;
    client.batch_size = cell.b;
    client.rounds = cell.r;
    client.shuffle_seed = derive_seed(cfg.seed, cell.base_seed * 3 + 1);

    ParamVector w_init = init_params(cfg.spec, derive_seed(cfg.seed, cell.base_seed * 3 + 2));
    if (client.warmup_rounds > 0) {
        ClientConfig warmup = client;
        warmup.rounds = client.warmup_rounds;
        warmup.shuffle_seed = derive_seed(cfg.seed, cell.base_seed * 3 + 3);
        w_init = run_rounds(cfg.spec, w_init, data, warmup).back().wT;
    }
    auto observations = run_rounds(cfg.spec, w_init, data, client);
    const Observation& obs = observations.back();

    for (const AttackPlan& plan : cfg.plans) {
        RunOutput out;
        out.run_id = plan_run_id(cell, plan);
        RunRecord& rec = out.record;
        rec.dataset = dataset_name(cfg);
        rec.e = cell.e;
        rec.n = cell.n;
        rec.b = cell.b;
        rec.r = cell.r;
        rec.variant = variant_name(plan.variant);
        rec.use_nlp = plan.variant == Variant::nlsme && plan.use_nlp;
        rec.use_pr = plan.variant == Variant::nlsme && plan.use_pr;
        rec.trial = cell.trial;
        rec.seed = derive_seed(cfg.seed, cell.base_seed * 3);
        rec.param_count = cfg.spec.param_count();

        AttackConfig attack = cfg.attack;
        attack.variant = plan.variant;
        attack.use_nlp = plan.use_nlp;
        attack.use_pr = plan.use_pr;
        attack.seed = rec.seed;

        try {
            AttackResult res = run_attack(obs, attack, data.labels);
            MatchResult match = match_batch(res.reconstruction, data);
            rec.lsim = res.final_lsim;
            rec.psnr = match.mean_psnr;
            rec.ssim = match.mean_ssim;
            rec.wall_minutes = res.wall_seconds / 60.0;
            rec.corrupted = match.mean_psnr < kPsnrCorrupted;
            out.reconstruction = res.reconstruction;
            out.truth = data;
            out.history = std::move(res.history);
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
            rec.lsim = rec.psnr = rec.ssim = std::nan("");
            rec.corrupted = true;
        }
        outputs.push_back(std::move(out));
    }
    return outputs;
}

}  // namespace

std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<Cell> cells;
    uint64_t cell_index = 0;
    for (int64_t e : cfg.sweep_e)
        for (int64_t n : cfg.sweep_n)
            for (int64_t b : cfg.sweep_b)
                for (int64_t r : cfg.sweep_r)
                    for (int64_t trial = 0; trial < cfg.trials; ++trial)
                        cells.push_back({e, n, b, r, trial, cell_index++});

    std::vector<std::vector<RunOutput>> cell_outputs(cells.size());
    std::atomic<size_t> next{0};
    const int64_t workers = std::min<int64_t>(cfg.jobs, static_cast<int64_t>(cells.size()));
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            cell_outputs[i] = run_cell(cfg, cells[i]);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int64_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<RunOutput> merged;
    merged.reserve(static_cast<size_t>(cfg.total_runs()));
    for (auto& group : cell_outputs)
        for (auto& out : group) merged.push_back(std::move(out));
    return merged;
}

std::string results_csv_header() {
    return "dataset,E,N,B,R,variant,use_NLP,use_PR,trial,seed,lsim,psnr,ssim,wall_minutes,"
           "param_count,corrupted";
}

std::string record_csv_row(const RunRecord& rec) {
    std::string row = rec.dataset + "," + std::to_string(rec.e) + "," + std::to_string(rec.n) +
                      "," + std::to_string(rec.b) + "," + std::to_string(rec.r) + "," +
                      rec.variant + "," + (rec.use_nlp ? "1" : "0") + "," +
                      (rec.use_pr ? "1" : "0") + "," + std::to_string(rec.trial) + "," +
                      std::to_string(rec.seed) + "," + fmt_double(rec.lsim) + "," +
                      fmt_double(rec.psnr) + "," + fmt_double(rec.ssim) + "," +
                      fmt_double(rec.wall_minutes) + "," + std::to_string(rec.param_count) + "," +
                      (rec.corrupted ? "true" : "false");
    return row;
}

void emit_outputs(const std::vector<RunOutput>& outputs, const std::string& output_dir) {
    if (outputs.empty()) throw std::runtime_error("emit_outputs: nothing to write");
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);

    std::ofstream results(fs::path(output_dir) / "results.csv");
    if (!results) throw std::runtime_error("emit_outputs: cannot write to " + output_dir);
    results << results_csv_header() << "\n";
    for (const RunOutput& out : outputs) results << record_csv_row(out.record) << "\n";
    results.close();

    for (const RunOutput& out : outputs) {
        if (out.record.failed) continue;
        std::ofstream hist(fs::path(output_dir) / (out.run_id + "_history.csv"));
        hist << "iter,total,Lcos,Ltv,Lp,Ld,t\n";
        for (size_t i = 0; i < out.history.size(); ++i) {
            const IterationStats& st = out.history[i];
            hist << i << "," << fmt_double(st.total) << "," << fmt_double(st.l_cos) << ","
                 << fmt_double(st.l_tv) << "," << fmt_double(st.l_p) << ","
                 << fmt_double(st.l_d) << "," << fmt_double(st.t) << "\n";
        }
        const ImageBatch& rec = out.reconstruction;
        const ImageBatch& truth = out.truth;
        for (int64_t i = 0; i < rec.b; ++i) {
            // one PGM per image; channels stacked vertically for c > 1
            const std::string base = out.run_id + "_" + std::to_string(i);
            write_pgm((fs::path(output_dir) / (base + "_recon.pgm")).string(), rec.c * rec.h,
                      rec.w, rec.image(i));
            write_pgm((fs::path(output_dir) / (base + "_truth.pgm")).string(),
                      truth.c * truth.h, truth.w, truth.image(i));
        }
    }
}

}  // namespace gradinv
