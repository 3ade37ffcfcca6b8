#include "gradinv/attack.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gradinv/rng.hpp"

namespace gradinv {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::dlg: return "dlg";
        case Variant::ig: return "ig";
        case Variant::sme: return "sme";
        case Variant::nlsme: return "nlsme";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "dlg") return Variant::dlg;
    if (name == "ig") return Variant::ig;
    if (name == "sme") return Variant::sme;
    if (name == "nlsme") return Variant::nlsme;
    throw std::runtime_error("unknown attack variant '" + name + "'");
}

void AttackConfig::validate() const {
    if (iterations < 1) throw std::runtime_error("AttackConfig: iterations must be >= 1");
    if (lambda_tv < 0 || lambda_p < 0 || lambda_d < 0 || lambda_cls < 0)
        throw std::runtime_error("AttackConfig: regularizer weights must be >= 0");
    if (lr_dummy < 0 || lr_t < 0 || lr_p1 < 0 || lr_d < 0)
        throw std::runtime_error("AttackConfig: learning rates must be >= 0");
    if (d_lo <= 0 || d_hi < d_lo) throw std::runtime_error("AttackConfig: bad dvec bounds");
    if (variant == Variant::sme || variant == Variant::nlsme) {
        const bool all_zero = lr_dummy == 0 && lr_t == 0 && lr_p1 == 0;
        if (!all_zero && !(lr_dummy > lr_t && lr_t > lr_p1))
            throw std::runtime_error(
                "AttackConfig: hierarchical learning rates require lr_dummy > lr_t > lr_p1");
    }
}

ImageBatch AttackState::to_batch() const {
    ImageBatch out;
    out.b = b;
    out.c = c;
    out.h = h;
    out.w = w;
    out.pixels = dummy;
    out.labels = labels;
    return out;
}

AttackState init_attack_state(const Observation& obs, const AttackConfig& cfg,
                              const std::vector<int>& true_labels) {
    if (static_cast<int64_t>(true_labels.size()) != obs.n)
        throw std::runtime_error("init_attack_state: need one label per local sample");
    AttackState state;
    state.b = obs.n;
    state.c = obs.spec.in_c;
    state.h = obs.spec.in_h;
    state.w = obs.spec.in_w;
    state.dummy.resize(static_cast<size_t>(state.b * state.c * state.h * state.w));
    Rng rng(cfg.seed);
    for (double& p : state.dummy) p = rng.uniform();
    state.labels = true_labels;
    state.t = 0.5;
    state.p1 = midpoint(obs.w0, obs.wT);
    state.d.assign(obs.w0.size(), 1.0);
    state.adam_m.assign(state.dummy.size(), 0.0);
    state.adam_v.assign(state.dummy.size(), 0.0);
    return state;
}

// ---- plain loss pieces -------------------------------------------------------

double cosine_direction_loss(const ParamVector& dw, const ParamVector& g) {
    if (dw.size() != g.size())
        throw std::runtime_error("cosine_direction_loss: length mismatch");
    double dd = 0, gg = 0, dg = 0;
    for (size_t i = 0; i < dw.size(); ++i) {
        dd += dw[i] * dw[i];
        gg += g[i] * g[i];
        dg += dw[i] * g[i];
    }
    if (dd == 0.0) throw std::runtime_error("cosine_direction_loss: zero parameter update");
    if (gg == 0.0) throw std::runtime_error("cosine_direction_loss: degenerate gradient");
    return 1.0 - dg / (std::sqrt(dd) * std::sqrt(gg));
}

double tv_loss(const ImageBatch& batch) {
    if (batch.h < 2 || batch.w < 2)
        throw std::runtime_error("tv_loss: images must be at least 2x2");
    double total = 0.0;
    const int64_t H = batch.h, W = batch.w;
    for (int64_t bc = 0; bc < batch.b * batch.c; ++bc) {
        const double* im = batch.pixels.data() + bc * H * W;
        for (int64_t i = 0; i < H; ++i) {
            for (int64_t j = 0; j < W; ++j) {
                const double dx = i + 1 < H ? im[(i + 1) * W + j] - im[i * W + j] : 0.0;
                const double dy = j + 1 < W ? im[i * W + j + 1] - im[i * W + j] : 0.0;
                total += std::sqrt(dx * dx + dy * dy + kSqrtEps);
            }
        }
    }
    return total;
}

double control_reg(const ParamVector& p1, const ParamVector& w0, const ParamVector& wT) {
    if (p1.size() != w0.size() || p1.size() != wT.size())
        throw std::runtime_error("control_reg: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < p1.size(); ++i) {
        const double r = p1[i] - 0.5 * (w0[i] + wT[i]);
        acc += r * r;
    }
    return acc;
}

ParamVector dvec_scale(const ParamVector& g, const ParamVector& d) {
    if (g.size() != d.size()) throw std::runtime_error("dvec_scale: length mismatch");
    ParamVector out(g.size());
    for (size_t i = 0; i < g.size(); ++i) out[i] = d[i] * g[i];
    return out;
}

double d_reg(const ParamVector& d) {
    double acc = 0.0;
    for (double v : d) {
        const double r = v - 1.0;
        acc += r * r;
    }
    return acc;
}

// ---- taped loss assembly -----------------------------------------------------

namespace {

// taped isotropic TV matching tv_loss(): forward differences padded back into
// the full grid so every pixel carries one smoothed term
Tensor tv_taped(const Tensor& dummy) {
    const Shape& s = dummy.shape();
    const int64_t H = s[2], W = s[3];
    Tensor dx = sub(crop_hw(dummy, 1, 0, H - 1, W), crop_hw(dummy, 0, 0, H - 1, W));
    Tensor dy = sub(crop_hw(dummy, 0, 1, H, W - 1), crop_hw(dummy, 0, 0, H, W - 1));
    Tensor dx2 = pad_hw(mul(dx, dx), 0, 0, H, W);
    Tensor dy2 = pad_hw(mul(dy, dy), 0, 0, H, W);
    return sum(sqrt_eps(add(dx2, dy2)));
}

Tensor dummy_leaf_of(const AttackState& state) {
    return Tensor::leaf({state.b, state.c, state.h, state.w}, state.dummy);
}

Tensor flat_view(const Tensor& dummy4d) {
    const Shape& s = dummy4d.shape();
    return reshape(dummy4d, {s[0], s[1] * s[2] * s[3]});
}

double vec_norm(const ParamVector& v) {
    double acc = 0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

// cosine mismatch between the observed update direction and a taped gradient
Tensor cos_loss_taped(const Observation& obs, const Tensor& g, double* value_out) {
    ParamVector dw(obs.w0.size());
    for (size_t i = 0; i < dw.size(); ++i) dw[i] = obs.w0[i] - obs.wT[i];
    const double dw_norm = vec_norm(dw);
    if (dw_norm == 0.0)
        throw std::runtime_error("attack: w0 == wT, no update direction to match");
    Tensor g_norm = l2norm(g);
    if (g_norm.item() == 0.0) throw std::runtime_error("attack: degenerate gradient");
    Tensor dw_t = Tensor::constant({static_cast<int64_t>(dw.size())}, dw);
    Tensor cos = div(dot(dw_t, g), scale(g_norm, dw_norm));
    Tensor l = sub(Tensor::scalar(1.0), cos);
    if (value_out) *value_out = l.item();
    return l;
}

AttackLoss build_surrogate_loss(const AttackState& state, const Observation& obs,
                                const AttackConfig& cfg, const ParamVector* p1_override) {
    AttackLoss out;
    const ParamVector& p1 = p1_override ? *p1_override : state.p1;
    const ParamVector what_vec = bezier_eval(obs.w0, obs.wT, p1, state.t);
    out.what_leaf = Tensor::leaf({static_cast<int64_t>(what_vec.size())}, what_vec);
    out.dummy_leaf = dummy_leaf_of(state);

    Tensor ell = loss(obs.spec, out.what_leaf, flat_view(out.dummy_leaf), state.labels);
    Tensor g = grad(ell, {out.what_leaf}, true)[0];

    Tensor g_scaled = g;
    const bool pr = cfg.pr_active();
    if (pr) {
        out.d_leaf = Tensor::leaf({static_cast<int64_t>(state.d.size())}, state.d);
        g_scaled = mul(g, out.d_leaf);
    }

    Tensor total = cos_loss_taped(obs, g_scaled, &out.l_cos);
    if (cfg.lambda_tv > 0) {
        Tensor ltv = tv_taped(out.dummy_leaf);
        out.l_tv = ltv.item();
        total = add(total, scale(ltv, cfg.lambda_tv));
    }
    if (cfg.lambda_cls > 0) total = add(total, scale(ell, cfg.lambda_cls));

    // the control-point and dvec regularizers depend only on P1 and d, so
    // their values and gradients are assembled analytically off the tape,
    // like the t / P1 chain-rule terms
    if (pr) out.l_d = d_reg(state.d);
    if (cfg.nlp_active()) out.l_p = control_reg(p1, obs.w0, obs.wT);
    out.total = total;
    out.total_value = total.item() + cfg.effective_lambda_p() * out.l_p +
                      cfg.effective_lambda_d() * out.l_d;
    return out;
}

ParamVector pseudo_gradient(const Observation& obs) {
    const ClientConfig& cc = obs.client_cfg_visible;
    const double denom = cc.lr * static_cast<double>(cc.steps_per_round());
    if (denom == 0.0)
        throw std::runtime_error("attack: pseudo-gradient undefined for lr * T == 0");
    ParamVector pg(obs.w0.size());
    for (size_t i = 0; i < pg.size(); ++i) pg[i] = (obs.w0[i] - obs.wT[i]) / denom;
    return pg;
}

}  // namespace

AttackLoss nlsme_total_loss(const AttackState& state, const Observation& obs,
                            const AttackConfig& cfg) {
    AttackConfig c = cfg;
    c.variant = Variant::nlsme;
    return build_surrogate_loss(state, obs, c, nullptr);
}

AttackLoss sme_loss(const AttackState& state, const Observation& obs, const AttackConfig& cfg) {
    // the linear surrogate is the Bezier path with the control point pinned to
    // the chord midpoint and no path regularization; sharing the builder makes
    // the reduction equivalence exact
    AttackConfig c = cfg;
    c.variant = Variant::nlsme;
    c.use_nlp = false;
    c.use_pr = false;
    const ParamVector mid = midpoint(obs.w0, obs.wT);
    return build_surrogate_loss(state, obs, c, &mid);
}

AttackLoss dlg_loss(const AttackState& state, const Observation& obs) {
    AttackLoss out;
    out.dummy_leaf = dummy_leaf_of(state);
    ParamVector w0 = obs.w0;
    Tensor w_leaf = Tensor::leaf({static_cast<int64_t>(w0.size())}, w0);
    Tensor ell = loss(obs.spec, w_leaf, flat_view(out.dummy_leaf), state.labels);
    Tensor g = grad(ell, {w_leaf}, true)[0];
    Tensor pg = Tensor::constant({static_cast<int64_t>(w0.size())}, pseudo_gradient(obs));
    Tensor diff = sub(g, pg);
    out.total = dot(diff, diff);
    out.total_value = out.total.item();
    // cosine mismatch reported alongside for comparability across variants
    ParamVector dw(w0.size());
    for (size_t i = 0; i < dw.size(); ++i) dw[i] = obs.w0[i] - obs.wT[i];
    out.l_cos = cosine_direction_loss(dw, g.values());
    return out;
}

AttackLoss ig_loss(const AttackState& state, const Observation& obs, double lambda_tv) {
    AttackLoss out;
    out.dummy_leaf = dummy_leaf_of(state);
    ParamVector w0 = obs.w0;
    Tensor w_leaf = Tensor::leaf({static_cast<int64_t>(w0.size())}, w0);
    Tensor ell = loss(obs.spec, w_leaf, flat_view(out.dummy_leaf), state.labels);
    Tensor g = grad(ell, {w_leaf}, true)[0];
    Tensor total = cos_loss_taped(obs, g, &out.l_cos);
    if (lambda_tv > 0) {
        Tensor ltv = tv_taped(out.dummy_leaf);
        out.l_tv = ltv.item();
        total = add(total, scale(ltv, lambda_tv));
    }
    out.total = total;
    out.total_value = total.item();
    return out;
}

// ---- optimization ------------------------------------------------------------

namespace {

void adam_update(AttackState& state, const std::vector<double>& g, double lr) {
    if (lr == 0.0) return;
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.adam_step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.adam_step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.adam_step));
    for (size_t i = 0; i < state.dummy.size(); ++i) {
        state.adam_m[i] = beta1 * state.adam_m[i] + (1.0 - beta1) * g[i];
        state.adam_v[i] = beta2 * state.adam_v[i] + (1.0 - beta2) * g[i] * g[i];
        state.dummy[i] -= lr * (state.adam_m[i] / bc1) / (std::sqrt(state.adam_v[i] / bc2) + eps);
    }
}

IterationStats stats_of(const AttackLoss& l, const AttackState& state, const Observation& obs) {
    IterationStats st;
    st.total = l.total_value;
    st.l_cos = l.l_cos;
    st.l_tv = l.l_tv;
    st.l_p = l.l_p;
    st.l_d = l.l_d;
    st.t = state.t;
    st.p1_dev = std::sqrt(st.l_p);
    (void)obs;
    return st;
}

}  // namespace

void project_state(AttackState& state, const AttackConfig& cfg) {
    for (double& p : state.dummy) p = std::clamp(p, 0.0, 1.0);
    state.t = std::clamp(state.t, 0.0, 1.0);
    if (cfg.pr_active() || cfg.variant == Variant::dlg || cfg.variant == Variant::ig)
        for (double& v : state.d) v = std::clamp(v, cfg.d_lo, cfg.d_hi);
}

IterationStats attack_step(AttackState& state, const Observation& obs, const AttackConfig& cfg) {
    if (!std::isfinite(state.t))
        throw std::runtime_error("attack_step: non-finite curve parameter");

    if (cfg.variant == Variant::dlg || cfg.variant == Variant::ig) {
        AttackLoss l = cfg.variant == Variant::dlg ? dlg_loss(state, obs)
                                                   : ig_loss(state, obs, cfg.lambda_tv);
        IterationStats st = stats_of(l, state, obs);
        auto g = grad(l.total, {l.dummy_leaf}, false)[0].values();
        adam_update(state, g, cfg.lr_dummy);
        project_state(state, cfg);
        return st;
    }

    AttackLoss l = cfg.variant == Variant::sme ? sme_loss(state, obs, cfg)
                                               : nlsme_total_loss(state, obs, cfg);
    IterationStats st = stats_of(l, state, obs);

    std::vector<Tensor> leaves = {l.dummy_leaf, l.what_leaf};
    if (l.d_leaf.defined()) leaves.push_back(l.d_leaf);
    std::vector<Tensor> grads = grad(l.total, leaves, false);

    const ParamVector& g_what = grads[1].values();
    const ParamVector dwhat_dt = bezier_dt(obs.w0, obs.wT, state.p1, state.t);
    double dl_dt = 0.0;
    for (size_t i = 0; i < g_what.size(); ++i) dl_dt += g_what[i] * dwhat_dt[i];

    ParamVector p1_grad;
    if (cfg.nlp_active()) {
        const double coeff = bezier_dp1_coeff(state.t);
        const double lp = cfg.effective_lambda_p();
        p1_grad.resize(state.p1.size());
        for (size_t i = 0; i < state.p1.size(); ++i) {
            const double mid = 0.5 * (obs.w0[i] + obs.wT[i]);
            p1_grad[i] = g_what[i] * coeff + 2.0 * lp * (state.p1[i] - mid);
        }
    }

    adam_update(state, grads[0].values(), cfg.lr_dummy);
    state.t -= cfg.lr_t * dl_dt;
    if (cfg.nlp_active())
        for (size_t i = 0; i < state.p1.size(); ++i) state.p1[i] -= cfg.lr_p1 * p1_grad[i];
    if (cfg.pr_active() && l.d_leaf.defined()) {
        const ParamVector& g_d = grads[2].values();
        const double ld = cfg.effective_lambda_d();
        for (size_t i = 0; i < state.d.size(); ++i)
            state.d[i] -= cfg.lr_d * (g_d[i] + 2.0 * ld * (state.d[i] - 1.0));
    }
    project_state(state, cfg);

    if (!std::isfinite(st.total))
        throw std::runtime_error("attack_step: non-finite loss");
    return st;
}

AttackResult run_attack(const Observation& obs, const AttackConfig& cfg,
                        const std::vector<int>& true_labels) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    reset_peak_mem();

    AttackState state = init_attack_state(obs, cfg, true_labels);
    AttackResult result;
    result.history.reserve(static_cast<size_t>(cfg.iterations));

    double best_cos = std::numeric_limits<double>::infinity();
    std::vector<double> best_dummy = state.dummy;
    for (int64_t it = 0; it < cfg.iterations; ++it) {
        std::vector<double> pre_update = state.dummy;
        IterationStats st = attack_step(state, obs, cfg);
        result.history.push_back(st);
        if (st.l_cos < best_cos) {
            best_cos = st.l_cos;
            best_dummy = std::move(pre_update);
        }
    }

    AttackState best_state = state;
    best_state.dummy = std::move(best_dummy);
    result.reconstruction = best_state.to_batch();
    result.final_lsim = best_cos;
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.peak_param_mem_bytes = mem_stats().peak_bytes;
    return result;
}

double direction_bias(const ParamVector& what, const ImageBatch& true_data,
                      const Observation& obs) {
    ParamVector g = grad_params_value(obs.spec, what, true_data);
    double gn = vec_norm(g);
    if (gn == 0.0) throw std::runtime_error("direction_bias: zero gradient");
    ParamVector dw(obs.w0.size());
    for (size_t i = 0; i < dw.size(); ++i) dw[i] = obs.w0[i] - obs.wT[i];
    const double dn = vec_norm(dw);
    if (dn == 0.0) throw std::runtime_error("direction_bias: zero parameter update");
    double acc = 0.0;
    for (size_t i = 0; i < g.size(); ++i) {
        const double r = g[i] / gn - dw[i] / dn;
        acc += r * r;
    }
    return std::sqrt(acc);
}

}  // namespace gradinv
