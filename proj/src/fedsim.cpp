#include "gradinv/fedsim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gradinv/rng.hpp"

namespace gradinv {

void ClientConfig::validate() const {
    if (dataset_size <= 0) throw std::runtime_error("ClientConfig: N must be positive");
    if (batch_size <= 0 || batch_size > dataset_size)
        throw std::runtime_error("ClientConfig: require 0 < B <= N");
    if (epochs <= 0) throw std::runtime_error("ClientConfig: E must be positive");
    if (lr < 0.0) throw std::runtime_error("ClientConfig: lr must be nonnegative");
    if (rounds < 1) throw std::runtime_error("ClientConfig: R must be >= 1");
    if (warmup_rounds < 0) throw std::runtime_error("ClientConfig: warmup_rounds must be >= 0");
    if (steps_per_round() <= 0) throw std::runtime_error("ClientConfig: T must be positive");
}

namespace {

struct AdamWState {
    std::vector<double> m, v;
    int64_t step = 0;
};

void apply_step(ParamVector& w, const ParamVector& g, const ClientConfig& cfg,
                AdamWState& adamw) {
    if (cfg.optimizer == ClientOptimizer::sgd) {
        for (size_t i = 0; i < w.size(); ++i) w[i] -= cfg.lr * g[i];
        return;
    }
    const AdamWParams& p = cfg.adamw;
    if (adamw.m.empty()) {
        adamw.m.assign(w.size(), 0.0);
        adamw.v.assign(w.size(), 0.0);
    }
    adamw.step += 1;
    const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(adamw.step));
    const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(adamw.step));
    for (size_t i = 0; i < w.size(); ++i) {
        adamw.m[i] = p.beta1 * adamw.m[i] + (1.0 - p.beta1) * g[i];
        adamw.v[i] = p.beta2 * adamw.v[i] + (1.0 - p.beta2) * g[i] * g[i];
        const double mhat = adamw.m[i] / bc1;
        const double vhat = adamw.v[i] / bc2;
        w[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + p.eps) + p.weight_decay * w[i]);
    }
}

}  // namespace

TrainResult local_train(const ModelSpec& spec, const ParamVector& w0,
                        const ImageBatch& dataset, const ClientConfig& cfg) {
    cfg.validate();
    if (dataset.b != cfg.dataset_size)
        throw std::runtime_error("local_train: dataset has " + std::to_string(dataset.b) +
                                 " samples, config says N=" + std::to_string(cfg.dataset_size));
    if (static_cast<int64_t>(w0.size()) != spec.param_count())
        throw std::runtime_error("local_train: parameter count mismatch");

    TrainResult result;
    result.trajectory.reserve(static_cast<size_t>(cfg.steps_per_round()) + 1);
    ParamVector w = w0;
    result.trajectory.push_back(w);

    int64_t step = 0;
    AdamWState adamw;
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int64_t> order(static_cast<size_t>(dataset.b));
        std::iota(order.begin(), order.end(), 0);
        Rng rng(cfg.shuffle_seed + static_cast<uint64_t>(epoch));
        rng.shuffle(order);
        for (int64_t start = 0; start < dataset.b; start += cfg.batch_size) {
            const int64_t end = std::min(start + cfg.batch_size, dataset.b);
            std::vector<int64_t> idx(order.begin() + start, order.begin() + end);
            ImageBatch minibatch = dataset.subset(idx);
            Tensor wt = Tensor::leaf({static_cast<int64_t>(w.size())}, w);
            Tensor l = loss(spec, wt, minibatch);
            if (!std::isfinite(l.item()))
                throw std::runtime_error("local_train: non-finite loss at step " +
                                         std::to_string(step));
            ParamVector g = grad(l, {wt}, false)[0].values();
            apply_step(w, g, cfg, adamw);
            for (double v : w)
                if (!std::isfinite(v))
                    throw std::runtime_error("local_train: non-finite parameter at step " +
                                             std::to_string(step));
            result.trajectory.push_back(w);
            ++step;
        }
    }
    result.wT = std::move(w);
    return result;
}

std::vector<Observation> run_rounds(const ModelSpec& spec, const ParamVector& w_init,
                                    const ImageBatch& dataset, const ClientConfig& cfg) {
    cfg.validate();
    std::vector<Observation> observations;
    observations.reserve(static_cast<size_t>(cfg.rounds));
    ParamVector w = w_init;
    for (int64_t r = 0; r < cfg.rounds; ++r) {
        ClientConfig round_cfg = cfg;
        round_cfg.shuffle_seed = derive_seed(cfg.shuffle_seed, static_cast<uint64_t>(r));
        TrainResult res = local_train(spec, w, dataset, round_cfg);
        Observation obs;
        obs.w0 = w;
        obs.wT = res.wT;
        obs.n = dataset.b;
        obs.spec = spec;
        obs.client_cfg_visible = cfg;
        observations.push_back(std::move(obs));
        w = observations.back().wT;
    }
    return observations;
}

double trajectory_nonlinearity(const std::vector<ParamVector>& trajectory) {
    if (trajectory.size() < 2)
        throw std::runtime_error("trajectory_nonlinearity: need at least two points");
    const ParamVector& w0 = trajectory.front();
    const ParamVector& wT = trajectory.back();
    const size_t n = w0.size();
    double chord_sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = wT[i] - w0[i];
        chord_sq += d * d;
    }
    if (chord_sq == 0.0) return 0.0;
    const double chord = std::sqrt(chord_sq);

    double worst = 0.0;
    for (size_t s = 1; s + 1 < trajectory.size(); ++s) {
        const ParamVector& wt = trajectory[s];
        double proj = 0.0;
        for (size_t i = 0; i < n; ++i) proj += (wt[i] - w0[i]) * (wT[i] - w0[i]);
        proj /= chord_sq;
        double dist_sq = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double r = (wt[i] - w0[i]) - proj * (wT[i] - w0[i]);
            dist_sq += r * r;
        }
        worst = std::max(worst, std::sqrt(dist_sq) / chord);
    }
    return worst;
}

}  // namespace gradinv
