#pragma once

#include "thermodamage/assembly.hpp"

#include <cstdint>

namespace thermodamage {

// ==== box-constrained minimization ==========================================

struct BoxObjective {
    virtual ~BoxObjective() = default;
    virtual double value(const Vec& x) const = 0;
    virtual void gradient(const Vec& x, Vec& g) const = 0;
};

struct DamageSolverOptions {
    double tol_rel = 1e-8;     // on ||x - P(x - grad)||_inf, times the objective scale
    int max_iter = 10000;
    double alpha_min = 1e-12;
    double alpha_max = 1e12;
    double backtrack_c = 1e-4; // sufficient-decrease constant
    int max_backtracks = 60;
};

struct DamageResult {
    Vec z;
    int iterations = 0;
    double pg_residual = 0.0;         // unit-step projected-gradient norm at exit
    double objective = 0.0;
    double objective_initial = 0.0;
    bool converged = false;
};

// Projected gradient descent with Barzilai-Borwein steps and a monotone
// backtracking line search along the projection arc. Descent is monotone by
// construction, so objective(final) <= objective(x0) holds exactly.
DamageResult minimize_box(const BoxObjective& f, Vec x0, const Vec& lo, const Vec& hi,
                          const DamageSolverOptions& opt = {});

// ==== damage increment problem ==============================================
//
// One incremental minimization with frozen displacement u:
//   J(z) = sum_T c(z_T) s_T  +  g1 sum_T A_T |grad z|^q  +  int W(z)
//        + sum_i w_i (z_prev_i - z_i)              over 0 <= z <= z_prev,
// where s_T = 0.5 A_T (C0 e(u):e(u))_T is precomputed. The last term is the
// rate-independent dissipation, linear on the admissible box.

class DamageProblem final : public BoxObjective {
public:
    DamageProblem(const Mesh2D& mesh, const MaterialLaws& mat, SpMat scalar_mass,
                  Vec weights, Vec strain_scale, Vec z_prev);

    double value(const Vec& z) const override;
    void gradient(const Vec& z, Vec& g) const override;

    double stored_energy(const Vec& z) const;  // elastic(z;u) + regularization, no dissipation
    double regularization_energy(const Vec& z) const;
    double elastic_part(const Vec& z) const;
    const Vec& z_prev() const { return z_prev_; }
    const Vec& weights() const { return weights_; }

    // semistability residual of competitor zt <= z:
    //   [stored(zt) + int (z - zt)] - stored(z)
    double semistability_residual(const Vec& z, const Vec& zt) const;

private:
    const Mesh2D& mesh_;
    const MaterialLaws& mat_;
    SpMat mass_;
    Vec weights_;
    Vec strain_scale_;
    Vec z_prev_;
};

DamageResult minimize_damage(const DamageProblem& p, const DamageSolverOptions& opt = {});

// Regularization energy G(z) = g1 sum A |grad z|^q + int W(z); single shared
// evaluation path for the solver objective and the energy ledger.
double damage_regularization_energy(const Mesh2D& mesh, const MaterialLaws& mat,
                                    const SpMat& scalar_mass, const Vec& weights,
                                    const Vec& z);

// ==== semistability certification ===========================================

struct SemistabilityOptions {
    int samples = 100;
    double tol_rel = 1e-8;
    std::uint64_t seed = 1;
};

struct SemistabilityReport {
    double worst_residual = 0.0;
    double scale = 1.0;
    int samples = 0;
    bool pass = true;
};

// Samples unidirectional competitors (uniform scalings, single-node drops,
// random nonnegative-drop fields) and reports the most negative residual.
SemistabilityReport check_semistability(const DamageProblem& p, const Vec& z,
                                        const SemistabilityOptions& opt);

} // namespace thermodamage
