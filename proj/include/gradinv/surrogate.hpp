#pragma once

#include "gradinv/model.hpp"

namespace gradinv {

// Parametric trajectory models over weight space. The quadratic Bezier curve
// interpolates w0 and wT exactly and reduces to the linear chord when the
// control point sits at the midpoint.

struct LinearTrajectory {
    ParamVector w0, wT;
    double alpha = 0.5;  // clamped to [0,1]
};

struct BezierTrajectory {
    ParamVector w0, wT;
    ParamVector p1;  // learnable control point
    double t = 0.5;  // clamped to [0,1]
};

ParamVector midpoint(const ParamVector& w0, const ParamVector& wT);

// (1-alpha) w0 + alpha wT
ParamVector linear_eval(const LinearTrajectory& traj);

// (1-t)^2 w0 + 2(1-t)t P1 + t^2 wT
ParamVector bezier_eval(const BezierTrajectory& traj);
ParamVector bezier_eval(const ParamVector& w0, const ParamVector& wT, const ParamVector& p1,
                        double t);

// d w_hat / dt, per coordinate: -2(1-t) w0 + 2(1-2t) P1 + 2t wT
ParamVector bezier_dt(const BezierTrajectory& traj);
ParamVector bezier_dt(const ParamVector& w0, const ParamVector& wT, const ParamVector& p1,
                      double t);

// d w_hat_i / d P1_i = 2(1-t)t, the same scalar for every coordinate
double bezier_dp1_coeff(double t);

}  // namespace gradinv
