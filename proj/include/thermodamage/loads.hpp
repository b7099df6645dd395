#pragma once

#include "thermodamage/types.hpp"

#include <vector>

namespace thermodamage {

// ==== time signals ==========================================================
//
// Scalar amplitude g(t) on [0, T]:
//   constant : g = value
//   ramp     : g(t) = value * t / T          (zero at t = 0)
//   table    : piecewise-linear through (times, values), clamped outside

struct TimeSignal {
    enum class Kind { Constant, Ramp, Table } kind = Kind::Constant;
    double value = 0.0;
    std::vector<double> times;   // strictly increasing (table)
    std::vector<double> values;

    static TimeSignal constant(double v) { return {Kind::Constant, v, {}, {}}; }
    static TimeSignal ramp(double v) { return {Kind::Ramp, v, {}, {}}; }
    static TimeSignal table(std::vector<double> t, std::vector<double> v);

    double eval(double t, double horizon) const;
    // exact integral over [t0, t1] (piecewise-linear data integrates exactly)
    double integral(double t0, double t1, double horizon) const;
    bool nonnegative(double horizon) const;
    void validate(const char* what) const;
};

// Local mean over the k-th window: (1/tau) * int_{(k-1)tau}^{k tau} g dt, k >= 1.
double local_mean(const TimeSignal& g, double tau, int k, double horizon);

// ==== load set ==============================================================
//
// f = volume force + Neumann traction (a fixed direction times a scalar
// signal each); H is the distributed heat supply, hb the boundary heat flux,
// both spatially uniform and nonnegative.

struct LoadData {
    Vec2 fvol_dir = Vec2::Zero();
    TimeSignal fvol;
    Vec2 fsurf_dir = Vec2::Zero();
    TimeSignal fsurf;
    std::vector<int> fsurf_sides;  // generated-mesh side filter; empty = all Neumann edges
    TimeSignal H;
    TimeSignal hb;
    double horizon = 1.0;

    void validate() const;
};

} // namespace thermodamage
