#include "gradinv/surrogate.hpp"

#include <algorithm>
#include <stdexcept>

namespace gradinv {

namespace {

void check_lengths(const ParamVector& a, const ParamVector& b, const char* what) {
    if (a.size() != b.size())
        throw std::runtime_error(std::string("surrogate: ") + what + " length mismatch (" +
                                 std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                 ")");
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

ParamVector midpoint(const ParamVector& w0, const ParamVector& wT) {
    check_lengths(w0, wT, "w0/wT");
    ParamVector m(w0.size());
    for (size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (w0[i] + wT[i]);
    return m;
}

ParamVector linear_eval(const LinearTrajectory& traj) {
    check_lengths(traj.w0, traj.wT, "w0/wT");
    const double a = clamp01(traj.alpha);
    ParamVector out(traj.w0.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - a) * traj.w0[i] + a * traj.wT[i];
    return out;
}

ParamVector bezier_eval(const ParamVector& w0, const ParamVector& wT, const ParamVector& p1,
                        double t) {
    check_lengths(w0, wT, "w0/wT");
    check_lengths(w0, p1, "w0/P1");
    const double tc = clamp01(t);
    const double c0 = (1.0 - tc) * (1.0 - tc);
    const double c1 = 2.0 * (1.0 - tc) * tc;
    const double c2 = tc * tc;
    ParamVector out(w0.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = c0 * w0[i] + c1 * p1[i] + c2 * wT[i];
    return out;
}

ParamVector bezier_eval(const BezierTrajectory& traj) {
    return bezier_eval(traj.w0, traj.wT, traj.p1, traj.t);
}

ParamVector bezier_dt(const ParamVector& w0, const ParamVector& wT, const ParamVector& p1,
                      double t) {
    check_lengths(w0, wT, "w0/wT");
    check_lengths(w0, p1, "w0/P1");
    const double tc = clamp01(t);
    const double c0 = -2.0 * (1.0 - tc);
    const double c1 = 2.0 * (1.0 - 2.0 * tc);
    const double c2 = 2.0 * tc;
    ParamVector out(w0.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = c0 * w0[i] + c1 * p1[i] + c2 * wT[i];
    return out;
}

ParamVector bezier_dt(const BezierTrajectory& traj) {
    return bezier_dt(traj.w0, traj.wT, traj.p1, traj.t);
}

double bezier_dp1_coeff(double t) {
    const double tc = clamp01(t);
    return 2.0 * (1.0 - tc) * tc;
}

}  // namespace gradinv
