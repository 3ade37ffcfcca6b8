#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gradinv/fedsim.hpp"
#include "gradinv/model.hpp"
#include "gradinv/surrogate.hpp"

namespace gradinv {

enum class Variant { dlg, ig, sme, nlsme };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct AttackConfig {
    double lambda_tv = 1e-2;
    double lambda_p = 1e-3;
    double lambda_d = 1e-4;
    double lambda_cls = 0.0;
    double lr_dummy = 0.1;  // Adam on pixels
    double lr_t = 1e-2;     // plain step on the curve parameter
    double lr_p1 = 1e-3;    // plain step on the control point
    double lr_d = 5e-2;     // plain step on the scaling vector
    int64_t iterations = 2000;
    Variant variant = Variant::nlsme;
    bool use_nlp = true;  // learnable control point (nonlinear path)
    bool use_pr = true;   // dvec scaling + path regularizers
    uint64_t seed = 0;
    double d_lo = 0.1, d_hi = 10.0;

    // regularizers belong to the PR component; off means zero weight
    double effective_lambda_p() const { return use_pr ? lambda_p : 0.0; }
    double effective_lambda_d() const { return use_pr ? lambda_d : 0.0; }
    bool nlp_active() const { return variant == Variant::nlsme && use_nlp; }
    bool pr_active() const { return variant == Variant::nlsme && use_pr; }

    // enforces the hierarchical ordering lr_dummy > lr_t > lr_p1 for the
    // surrogate variants; the all-zero configuration stays valid so frozen
    // states can be probed
    void validate() const;
};

// Jointly optimized attack variables. Pixels live in a plain vector; each
// iteration records them as a fresh graph leaf.
struct AttackState {
    int64_t b = 0, c = 0, h = 0, w = 0;
    std::vector<double> dummy;  // pixels in [0,1]
    std::vector<int> labels;    // fixed (attacker-provided)
    double t = 0.5;             // curve parameter; alpha in the linear variant
    ParamVector p1;
    ParamVector d;
    std::vector<double> adam_m, adam_v;
    int64_t adam_step = 0;

    ImageBatch to_batch() const;
};

AttackState init_attack_state(const Observation& obs, const AttackConfig& cfg,
                              const std::vector<int>& true_labels);

struct IterationStats {
    double total = 0, l_cos = 0, l_tv = 0, l_p = 0, l_d = 0;
    double t = 0, p1_dev = 0;
};

struct AttackResult {
    ImageBatch reconstruction;
    double final_lsim = 0;
    std::vector<IterationStats> history;
    double wall_seconds = 0;
    int64_t peak_param_mem_bytes = 0;
};

// ---- loss pieces (plain) --------------------------------------------------

// 1 - <dw, g> / (||dw|| ||g||); throws "degenerate gradient" on zero norms
double cosine_direction_loss(const ParamVector& dw, const ParamVector& g);

// isotropic total variation with Neumann boundary handling: forward
// differences that leave the image contribute zero, every pixel contributes
// one sqrt(dx^2 + dy^2 + eps) term, summed over batch and channels
double tv_loss(const ImageBatch& batch);

// || P1 - (w0+wT)/2 ||^2
double control_reg(const ParamVector& p1, const ParamVector& w0, const ParamVector& wT);

// elementwise d * g
ParamVector dvec_scale(const ParamVector& g, const ParamVector& d);

// sum (d_i - 1)^2
double d_reg(const ParamVector& d);

// ---- loss assembly (taped) --------------------------------------------------

struct AttackLoss {
    Tensor total;       // differentiable w.r.t. the leaves below
    Tensor dummy_leaf;
    Tensor what_leaf;   // surrogate point (sme/nlsme only)
    Tensor d_leaf;      // defined when PR is active
    double l_cos = 0, l_tv = 0, l_p = 0, l_d = 0;
    double total_value = 0;  // taped total plus the plain control-point term
};

AttackLoss nlsme_total_loss(const AttackState& state, const Observation& obs,
                            const AttackConfig& cfg);
AttackLoss sme_loss(const AttackState& state, const Observation& obs, const AttackConfig& cfg);
AttackLoss dlg_loss(const AttackState& state, const Observation& obs);
AttackLoss ig_loss(const AttackState& state, const Observation& obs, double lambda_tv);

// ---- optimization ------------------------------------------------------------

// clamp pixels to [0,1], t to [0,1], d to [d_lo, d_hi]; idempotent
void project_state(AttackState& state, const AttackConfig& cfg);

// One joint update: Adam on pixels, plain steps on t / P1 / d, then projection
// of every variable onto its feasible box. Returns the losses measured at the
// state the step started from.
IterationStats attack_step(AttackState& state, const Observation& obs, const AttackConfig& cfg);

AttackResult run_attack(const Observation& obs, const AttackConfig& cfg,
                        const std::vector<int>& true_labels);

// || g/||g|| - dw/||dw|| || evaluated with the true data at a surrogate point
double direction_bias(const ParamVector& what, const ImageBatch& true_data,
                      const Observation& obs);

}  // namespace gradinv
