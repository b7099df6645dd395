#include "thermodamage/coupled.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace thermodamage {

namespace {

Vec truncate_nodal(const Vec& theta, double M) {
    if (!std::isfinite(M)) return theta;
    Vec out(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) out[i] = truncate(theta[i], M);
    return out;
}

SpMat momentum_linear(const CoupledInputs& in) {
    const double ai = in.scal.inertia() * in.rho / (in.tau * in.tau);
    const double av = in.scal.viscosity() / in.tau;
    SpMat A = ai * (*in.Mv);
    A += av * (*in.D);
    A += *in.K;
    return A;
}

Vec momentum_rhs_base(const CoupledInputs& in) {
    const double ai = in.scal.inertia() * in.rho / (in.tau * in.tau);
    const double av = in.scal.viscosity() / in.tau;
    return ai * ((*in.Mv) * (2.0 * in.u_prev - in.u_prev2)) +
           av * ((*in.D) * in.u_prev) + in.F;
}

// fixed part of the heat right-hand side (independent of u and theta)
Vec heat_rhs_fixed(const CoupledInputs& in) {
    const double az = in.scal.heat_zdot() / in.tau;
    return az * ((*in.Ms) * (in.z_prev - in.z_curr)) + in.heat_source +
           (in.scal.heat_lhs() / in.tau) * ((*in.Ms) * in.theta_prev);
}

struct LinearSolver {
    CoupledOptions::Linear mode;
    int step;

    Vec spd(const SpMat& A, const Vec& b) const {
        if (mode == CoupledOptions::Linear::Iterative) {
            Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
            cg.setTolerance(1e-14);
            cg.setMaxIterations(20 * A.rows() + 100);
            cg.compute(A);
            Vec x = cg.solve(b);
            if (cg.info() != Eigen::Success && cg.error() > 1e-10)
                throw StepFailure(step, "conjugate-gradient solve failed");
            return x;
        }
        Eigen::SimplicialLDLT<SpMat> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            throw StepFailure(step, "LDLT factorization failed");
        return ldlt.solve(b);
    }

    Vec general(const SpMat& A, const Vec& b) const {
        if (mode == CoupledOptions::Linear::Iterative) {
            Eigen::BiCGSTAB<SpMat> bicg;
            bicg.setTolerance(1e-14);
            bicg.setMaxIterations(20 * A.rows() + 100);
            bicg.compute(A);
            Vec x = bicg.solve(b);
            if (bicg.info() != Eigen::Success && bicg.error() > 1e-10)
                throw StepFailure(step, "BiCGSTAB solve failed");
            return x;
        }
        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw StepFailure(step, "sparse LU factorization failed");
        return lu.solve(b);
    }
};

} // namespace

// ==== residuals =============================================================

Vec momentum_residual(const Assembler& asmb, const CoupledInputs& in,
                      const Vec& u, const Vec& theta, double M) {
    Vec rgamma;
    asmb.gamma_term(u, in.gamma, &rgamma, nullptr);
    return momentum_linear(in) * u + in.tau * rgamma - momentum_rhs_base(in) -
           (*in.Cup) * truncate_nodal(theta, M);
}

Vec heat_residual(const Assembler& asmb, const CoupledInputs& in,
                  const Vec& u, const Vec& theta, double M) {
    const Vec du = u - in.u_prev;
    const Vec du_full = asmb.dofs().expand(du);
    const SpMat S = asmb.sink_matrix(du_full, in.tau).m;
    const Vec V = asmb.visc_heating(in.z_prev, in.theta_prev, du_full, in.tau);
    const double ath = in.scal.heat_lhs() / in.tau;
    return ath * ((*in.Ms) * theta) +
           in.scal.conductivity() * (asmb.heat_stiffness(in.z_curr, theta, M).m * theta) +
           in.scal.heat_sink() * (S * theta) -
           heat_rhs_fixed(in) - in.scal.heat_visc() * V;
}

SpMat heat_jacobian(const Assembler& asmb, const CoupledInputs& in,
                    const Vec& u, const Vec& theta, double M) {
    const Vec du_full = asmb.dofs().expand(Vec(u - in.u_prev));
    const double ath = in.scal.heat_lhs() / in.tau;
    SpMat J = ath * (*in.Ms);
    J += in.scal.conductivity() * asmb.heat_stiffness(in.z_curr, theta, M).m;
    J += in.scal.conductivity() * asmb.heat_stiffness_dtheta(in.z_curr, theta, M);
    J += in.scal.heat_sink() * asmb.sink_matrix(du_full, in.tau).m;
    return J;
}

// ==== coupled solve =========================================================

CoupledResult solve_coupled(const Assembler& asmb, const CoupledInputs& in,
                            const CoupledOptions& opt, int step_index) {
    CoupledResult out;
    const SpMat A = momentum_linear(in);
    const Vec rhs_base = momentum_rhs_base(in);
    const Vec rhs_heat_fixed = heat_rhs_fixed(in);
    const double ath = in.scal.heat_lhs() / in.tau;
    const LinearSolver lin{opt.linear, step_index};

    // tolerances pinned to the first-iterate residuals
    const double ru0 = momentum_residual(asmb, in, in.u_prev, in.theta_prev).norm();
    const double rt0 = heat_residual(asmb, in, in.u_prev, in.theta_prev).norm();
    const double tolU =
        std::max(opt.tol_rel * ru0, opt.tol_abs_floor * (1.0 + rhs_base.norm()));
    const double tolT =
        std::max(opt.tol_rel * rt0, opt.tol_abs_floor * (1.0 + rhs_heat_fixed.norm()));

    Vec u = in.u_prev;
    Vec th = in.theta_prev;
    double M = opt.m_start;

    for (int round = 0; round < opt.m_max_rounds; ++round, M *= opt.m_factor) {
        ++out.m_rounds;
        double prev_delta = std::numeric_limits<double>::infinity();
        int grow_streak = 0;
        bool inner_ok = false;

        for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
            ++out.sweeps;
            const Vec u_old = u;
            const Vec th_old = th;

            // ---- momentum Newton, temperature frozen (truncated) ----
            const Vec rhs_mom = rhs_base + (*in.Cup) * truncate_nodal(th, M);
            auto phi = [&](const Vec& w) {
                return 0.5 * w.dot(A * w) - rhs_mom.dot(w) +
                       in.tau * asmb.gamma_energy(w, in.gamma);
            };
            for (int it = 0; it < opt.max_newton; ++it) {
                Vec rgamma;
                SpMat Jg;
                asmb.gamma_term(u, in.gamma, &rgamma, &Jg);
                const Vec R = A * u + in.tau * rgamma - rhs_mom;
                if (R.norm() <= tolU) break;
                ++out.newton_total;
                SpMat J = A;
                J += in.tau * Jg;
                const Vec d = lin.spd(J, Vec(-R));
                // the functional is convex; backtrack on it for global progress
                double t = 1.0;
                const double f0 = phi(u);
                const double slope = R.dot(d);  // = grad phi . d < 0
                // near the minimum the predicted decrease drops below the
                // evaluation noise of phi; descent is then invisible to the
                // line search and the full (safe) Newton step must be taken
                const double noise =
                    64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f0));
                if (-slope > noise) {
                    for (int bt = 0; bt < 40; ++bt) {
                        if (phi(u + t * d) <= f0 + 1e-4 * t * slope) break;
                        t *= 0.5;
                    }
                }
                u += t * d;
            }

            // ---- heat solve, displacement frozen ----
            const Vec du_full = asmb.dofs().expand(Vec(u - in.u_prev));
            const SpMat S = asmb.sink_matrix(du_full, in.tau).m;
            const Vec V = asmb.visc_heating(in.z_prev, in.theta_prev, du_full, in.tau);
            const Vec rhs_th = rhs_heat_fixed + in.scal.heat_visc() * V;
            if (opt.heat_newton) {
                for (int it = 0; it < opt.max_newton; ++it) {
                    SpMat Kth = asmb.heat_stiffness(in.z_curr, th, M).m;
                    Vec R = ath * ((*in.Ms) * th) + in.scal.conductivity() * (Kth * th) +
                            in.scal.heat_sink() * (S * th) - rhs_th;
                    if (R.norm() <= tolT) break;
                    SpMat J = ath * (*in.Ms);
                    J += in.scal.conductivity() * Kth;
                    J += in.scal.conductivity() *
                         asmb.heat_stiffness_dtheta(in.z_curr, th, M);
                    J += in.scal.heat_sink() * S;
                    const Vec d = lin.general(J, Vec(-R));
                    // safeguard: residual must not grow
                    double t = 1.0;
                    const double r0 = R.norm();
                    for (int bt = 0; bt < 20; ++bt) {
                        Vec th_try = th + t * d;
                        SpMat Ktry = asmb.heat_stiffness(in.z_curr, th_try, M).m;
                        Vec Rtry = ath * ((*in.Ms) * th_try) +
                                   in.scal.conductivity() * (Ktry * th_try) +
                                   in.scal.heat_sink() * (S * th_try) - rhs_th;
                        if (Rtry.norm() <= r0) {
                            th = th_try;
                            break;
                        }
                        t *= 0.5;
                        if (bt == 19) th = th + t * d;
                    }
                }
            } else {
                // Picard: lag the conductivity coefficient one pass
                SpMat Ath = ath * (*in.Ms);
                Ath += in.scal.conductivity() * asmb.heat_stiffness(in.z_curr, th, M).m;
                Ath += in.scal.heat_sink() * S;
                // already converged at entry: keep th bitwise (stationary states)
                if ((Ath * th - rhs_th).norm() > tolT) th = lin.general(Ath, rhs_th);
            }

            // ---- sweep control on the truncated residuals ----
            const double ru = momentum_residual(asmb, in, u, th, M).norm();
            const double rt = heat_residual(asmb, in, u, th, M).norm();
            if (std::getenv("TD_DEBUG_SWEEPS"))
                std::fprintf(stderr,
                             "step %d round %d sweep %d: ru=%.3e (tol %.3e) rt=%.3e "
                             "(tol %.3e) du=%.3e dth=%.3e\n",
                             step_index, round, sweep, ru, tolU, rt, tolT,
                             (u - u_old).lpNorm<Eigen::Infinity>(),
                             (th - th_old).lpNorm<Eigen::Infinity>());
            if (ru <= tolU && rt <= tolT) {
                inner_ok = true;
                break;
            }
            const double delta =
                std::max((u - u_old).lpNorm<Eigen::Infinity>() /
                             (1.0 + u.lpNorm<Eigen::Infinity>()),
                         (th - th_old).lpNorm<Eigen::Infinity>() /
                             (1.0 + th.lpNorm<Eigen::Infinity>()));
            // growth of noise-level updates is stagnation, not divergence
            if (delta >= prev_delta && delta > 1e-13) {
                if (++grow_streak >= opt.divergence_streak)
                    throw StepFailure(step_index,
                                      "inner alternation diverged (update grew " +
                                          std::to_string(grow_streak) + " sweeps in a row)");
            } else {
                grow_streak = 0;
            }
            prev_delta = delta;
        }
        if (!inner_ok)
            throw StepFailure(step_index, "inner alternation did not converge");

        // ---- acceptance: truncation inactive and untruncated residuals small ----
        const double th_max = th.maxCoeff();
        if (th_max >= M) {
            out.truncation_was_active = true;
            continue;  // raise M and resolve
        }
        const double ru_un = momentum_residual(asmb, in, u, th).norm();
        const double rt_un = heat_residual(asmb, in, u, th).norm();
        if (ru_un <= tolU && rt_un <= tolT) {
            out.u = std::move(u);
            out.theta = std::move(th);
            out.resid_u = ru_un;
            out.resid_theta = rt_un;
            out.m_final = M;
            return out;
        }
        // truncation interfered although max theta < M (e.g. negative excursions)
        out.truncation_was_active = true;
    }
    throw StepFailure(step_index, "truncation continuation exhausted without acceptance");
}

// ==== temperature positivity ================================================

double comparison_step(double v_prev, double tau, double ceff, double Heff) {
    const double r = v_prev + tau * Heff;
    const double a = tau * ceff;
    if (a <= 0.0) return r;
    // positive root of a v^2 + v - r = 0, in cancellation-free form
    return 2.0 * r / (1.0 + std::sqrt(1.0 + 4.0 * a * r));
}

double theta_tilde(double T, double ceff, double theta_star) {
    return 1.0 / (ceff * T + 1.0 / theta_star);
}

void PositivityMonitor::init(double cbar, double eps, double theta_star_, double H_star_) {
    ceff = eps > 0.0 ? cbar / eps : cbar;
    theta_star = theta_star_;
    H_star = H_star_;
    // the floor must start at theta_star (theta_0 >= theta_star is all we
    // know); with a certified source bound the recursion then climbs toward
    // sqrt(H_star / ceff) on its own and never overtakes the solution.
    v = theta_star;
}

double PositivityMonitor::advance(double tau) {
    v = comparison_step(v, tau, ceff, H_star);
    return v;
}

bool verify_positivity(const Vec& theta, double floor, double tol) {
    return theta.minCoeff() >= floor - tol;
}

} // namespace thermodamage
