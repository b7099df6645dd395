#pragma once

#include "thermodamage/assembly.hpp"

#include <cmath>

namespace thermodamage {

// ==== scaling ===============================================================
//
// One family of time-discrete systems: the base scheme is (eps, beta) = (1, 0),
// the quasistatic rescaling multiplies inertia by eps^2, viscosity by eps, and
// conductivity by eps^-beta; on the heat-equation right-hand side the damage
// and thermal-expansion rates carry eps and the viscous heating eps^2, while
// the temperature time derivative carries eps. All factors are exactly 1.0 at
// (1, 0), so the base scheme is reproduced bitwise.

struct Scaling {
    double eps = 1.0;
    double beta = 0.0;

    double inertia() const { return eps * eps; }        // multiplies rho
    double viscosity() const { return eps; }
    double conductivity() const { return std::pow(eps, -beta); }
    double heat_lhs() const { return eps; }             // on (theta_k - theta_{k-1})/tau
    double heat_zdot() const { return eps; }            // on |zdot|
    double heat_visc() const { return eps * eps; }      // on D e(udot):e(udot)
    double heat_sink() const { return eps; }            // on theta B : e(udot)
};

// ==== coupled step ==========================================================
//
// Given z_k from the damage step, solve momentum and heat together:
//
//   inertia * rho * Mv (u - 2u_prev + u_prev2)/tau^2
//     + viscosity * D (u - u_prev)/tau + K(z_k) u + tau |e(u)|^{gamma-2} e(u)
//     - Cup theta = F_k
//
//   heat_lhs * Ms (theta - theta_prev)/tau + conductivity * K_heat(z_k, theta) theta
//     + heat_sink * S(udot) theta
//     = heat_zdot * Ms (z_prev - z_k)/tau + heat_visc * V(udot) + Q
//
// with D and the viscous heating V evaluated at the lagged state
// (z_prev, theta_prev), and K_heat at (z_k, theta). The temperature enters its
// own equation implicitly in the linear terms; the conductivity coefficient is
// handled by Picard lag (or Newton), under a truncation T_M that is driven to
// inactivity by a doubling continuation in M. A step is accepted only when the
// untruncated residuals meet tolerance and max theta < M.

struct CoupledInputs {
    const SpMat* Mv = nullptr;     // vector mass (density excluded)
    const SpMat* Ms = nullptr;     // scalar mass
    const SpMat* D = nullptr;      // viscosity matrix at (z_prev, theta_prev)
    const SpMat* K = nullptr;      // elastic matrix at z_curr
    const SpMat* Cup = nullptr;    // thermal coupling, free dofs x nodes
    Vec F;                         // momentum load (local mean), free dofs
    Vec heat_source;               // assembled Q_H + Q_h, node space
    Vec u_prev, u_prev2;           // free dofs
    Vec theta_prev;                // nodes
    Vec z_curr, z_prev;            // nodes
    double tau = 1.0;
    double gamma = 5.0;
    double rho = 1.0;
    Scaling scal;
};

struct CoupledOptions {
    double tol_rel = 1e-10;        // vs first-iterate residual
    double tol_abs_floor = 1e-11;  // times (1 + |rhs|)
    double inner_delta = 1e-11;    // alternation fixed-point tolerance
    int max_sweeps = 200;
    int max_newton = 50;
    bool heat_newton = false;      // Newton instead of Picard on the conductivity
    double m_start = 16.0;
    double m_factor = 2.0;
    int m_max_rounds = 40;
    int divergence_streak = 5;
    enum class Linear { Direct, Iterative } linear = Linear::Direct;
};

struct CoupledResult {
    Vec u;                          // free dofs
    Vec theta;                      // nodes
    double resid_u = 0.0;           // untruncated residual norms at acceptance
    double resid_theta = 0.0;
    double m_final = 0.0;
    int m_rounds = 0;
    int sweeps = 0;
    int newton_total = 0;
    bool truncation_was_active = false;
};

CoupledResult solve_coupled(const Assembler& asmb, const CoupledInputs& in,
                            const CoupledOptions& opt, int step_index);

// Residuals with truncation parameter M (kNoTruncation = plain system);
// exposed for certification and derivative checks.
Vec momentum_residual(const Assembler& asmb, const CoupledInputs& in,
                      const Vec& u, const Vec& theta, double M = kNoTruncation);
Vec heat_residual(const Assembler& asmb, const CoupledInputs& in,
                  const Vec& u, const Vec& theta, double M = kNoTruncation);
// Full heat Jacobian (lagged-linear matrix + conductivity derivative) at theta.
SpMat heat_jacobian(const Assembler& asmb, const CoupledInputs& in,
                    const Vec& u, const Vec& theta, double M = kNoTruncation);

// ==== temperature positivity ================================================
//
// Comparison sequence: v_k solves  tau ceff v^2 + v = v_prev + tau Heff  with
// ceff = cbar / eps and Heff the uniform heat-supply lower bound (0 for the
// basic floor). The closed-form limit of the basic floor at time T is
// theta_tilde = 1 / (ceff T + 1 / theta_star).

double comparison_step(double v_prev, double tau, double ceff, double Heff);
double theta_tilde(double T, double ceff, double theta_star);

struct PositivityMonitor {
    double ceff = 0.0;         // cbar / eps
    double theta_star = 1.0;
    double H_star = 0.0;       // effective uniform lower bound on the supply
    double v = 1.0;            // current comparison value (the reported floor)

    void init(double cbar, double eps, double theta_star_, double H_star_);
    double advance(double tau);      // one step; returns the new floor
    double floor() const { return v; }
};

// min(theta) >= floor - tol, checked nodewise.
bool verify_positivity(const Vec& theta, double floor, double tol = 1e-10);

} // namespace thermodamage
