#pragma once

#include <cstdint>
#include <vector>

#include "gradinv/model.hpp"

namespace gradinv {

enum class ClientOptimizer { sgd, adamw };

struct AdamWParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct ClientConfig {
    int64_t epochs = 1;       // E
    int64_t dataset_size = 0; // N
    int64_t batch_size = 1;   // B
    double lr = 0.1;
    ClientOptimizer optimizer = ClientOptimizer::sgd;
    AdamWParams adamw;
    uint64_t shuffle_seed = 0;
    int64_t rounds = 1;       // R
    int64_t warmup_rounds = 0;  // extra pre-training before the attacked round

    int64_t steps_per_round() const {  // T = E * ceil(N/B)
        return epochs * ((dataset_size + batch_size - 1) / batch_size);
    }
    void validate() const;
};

// What the attacker sees: endpoints of the local update plus dataset size.
// client_cfg_visible carries lr/T for methods that need a pseudo-gradient;
// attacks never see the trajectory.
struct Observation {
    ParamVector w0;
    ParamVector wT;
    int64_t n = 0;
    ModelSpec spec;
    ClientConfig client_cfg_visible;
};

struct TrainResult {
    ParamVector wT;
    std::vector<ParamVector> trajectory;  // length T+1, diagnostics only
};

// Runs E epochs of minibatch steps from w0. Each epoch shuffles indices with
// shuffle_seed + epoch and partitions into ceil(N/B) minibatches (last may be
// short). Aborts with the step index if the loss goes non-finite.
TrainResult local_train(const ModelSpec& spec, const ParamVector& w0,
                        const ImageBatch& dataset, const ClientConfig& cfg);

// Chains R rounds of local training (degenerate single-client aggregation);
// one Observation per round, attack target is the last.
std::vector<Observation> run_rounds(const ModelSpec& spec, const ParamVector& w_init,
                                    const ImageBatch& dataset, const ClientConfig& cfg);

// Max over steps of the distance from w_t to the w0->wT chord, normalized by
// ||w0 - wT||. Zero for collinear trajectories and for the degenerate w0 == wT.
double trajectory_nonlinearity(const std::vector<ParamVector>& trajectory);

}  // namespace gradinv
