#pragma once

#include "thermodamage/timeloop.hpp"

#include <string>
#include <vector>

namespace thermodamage {

// ==== quasistatic rescaling study ===========================================
//
// One-parameter family: inertia eps^2, viscosity eps, conductivity eps^-beta,
// heat data H_eps = eps * htilde, h_eps = eps * htilde_b, loads f unchanged,
// Dirichlet conditions on the whole boundary. The diagnostics track how the
// viscous dissipation density, the temperature gradient, and the deviation of
// theta from its spatial mean vanish as eps -> 0, and how well the spatial
// mean follows the limit ODE driven by damage drops, the dissipation defect,
// and the limit source htilde.

struct RescaleDiagnostics {
    std::vector<double> time;            // t_k, k = 0..n
    std::vector<double> theta_mean;      // mean_x theta(t_k)
    std::vector<double> ode_residual;    // limit-ODE residual at t_k (0 at k = 0)
    std::vector<double> mu_density;      // eps int D e(udot):e(udot); index k-1 for step k
    std::vector<double> strain_rate_sq;  // int |e(udot_k)|^2; index k-1 for step k
    std::vector<double> grad_theta_sq;   // int |grad theta_k|^2, k = 0..n
    std::vector<double> spatial_defect;  // || theta_k - mean ||_{L2}, k = 0..n

    double mu_total = 0.0;               // integral of mu over [0, T]
    double zdrop_total = 0.0;            // cumulative int (z_{k-1} - z_k)
    double source_total = 0.0;           // cumulative tau (int htilde + bdry htilde_b)
    double grad_theta_l2 = 0.0;          // || grad theta ||_{L2(0,T;L2)}
    double eps_strain_rate_l2 = 0.0;     // eps || e(udot) ||_{L2(0,T;L2)}
    double sup_spatial_defect = 0.0;     // sup_t || theta - mean ||_{L2}
    double kinetic_final = 0.0;          // scaled kinetic energy at t = T
};

// Recompute all diagnostics from a stored trajectory; htilde/htilde_b are the
// LIMIT sources (the run itself used eps * htilde).
RescaleDiagnostics compute_rescale_diagnostics(const Mesh2D& mesh, const MaterialLaws& mat,
                                               const std::vector<TrajectoryFrame>& frames,
                                               double tau, double horizon,
                                               const TimeSignal& htilde,
                                               const TimeSignal& htilde_b, const Scaling& scal,
                                               int threads);

// Residual of the spatially-constant limit-temperature identity, tested by 1:
//   residual(t_k) = [int theta_k - int theta_0]
//                   - [mu([0,t_k]) + int (z drops) + int_0^{t_k} (htilde + htilde_b)]
std::vector<double> theta_ode_residual(const Mesh2D& mesh, const MaterialLaws& mat,
                                       const std::vector<TrajectoryFrame>& frames, double tau,
                                       double horizon, const TimeSignal& htilde,
                                       const TimeSignal& htilde_b, const Scaling& scal,
                                       int threads = 1);

struct RescaledRun {
    RunResult run;
    RescaleDiagnostics diag;
    Scaling scal;
    LoadData loads;                      // effective (eps-scaled) load set
};

// One member run at the given eps. Enforces Dirichlet on the whole boundary;
// warns (or errors under strict) when beta < 2. Writes the standard run
// artifacts plus rescaling.csv (per-step diagnostic series) under out_dir.
RescaledRun run_rescaled(const SimConfig& cfg, double eps, const std::string& out_dir);

struct SweepRow {
    double eps = 0.0;
    RescaleDiagnostics diag;
    CertificationSummary certs;
    bool mu_nonneg = true;
    bool all_pass = false;
};

struct SweepReport {
    std::vector<SweepRow> rows;          // ordered by descending eps
    double beta = 0.0;
    // least-squares slopes of log(diagnostic) vs log(eps); NaN if undefined
    double slope_grad_theta = 0.0;
    double slope_eps_strain_rate = 0.0;
    double slope_spatial_defect = 0.0;
    double slope_ode_residual = 0.0;
    double slope_kinetic_final = 0.0;
    bool complete = false;               // every sweep member finished
};

// Run the full eps sweep (>= 3 values). Member runs execute concurrently;
// the report is reduced sequentially, ordered by descending eps. Artifacts:
// out_dir/eps_<value>/ per member plus out_dir/sweep_report.csv. A member
// failure writes the partial report before rethrowing.
SweepReport sweep_eps(const SimConfig& cfg, const std::string& out_dir);

// Least-squares slope of log(y) vs log(x), ignoring nonpositive entries.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string sweep_report_header();
std::string format_sweep_row(const SweepRow& row, const SweepReport& rep);

} // namespace thermodamage
