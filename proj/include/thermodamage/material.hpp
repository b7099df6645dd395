#pragma once

#include "thermodamage/types.hpp"

#include <array>
#include <limits>

namespace thermodamage {

// ==== constitutive laws =====================================================
//
// Isotropic plane-strain elasticity modulated by a scalar damage variable
// z in [0,1] (z = 1 sound, z = 0 fully damaged but still coercive):
//
//   C(z) e   = c(z) (lambda tr(e) I + 2 mu e),      c(z) = z^2 + delta_at
//   D(z,.) e = d(z) (lambda_v tr(e) I + 2 mu_v e),  d = 1 or d = c(z)
//   B        = b I                                   (thermal expansion)
//   k(z,th)  = k0 (1 + |th|^kappa)                   (heat conductivity)
//
// Damage regularization:  g1 |grad z|^q + W(z),  W(z) = w0 + w1 z + w2 z^2,
// plus the indicator of [0,1]. Rate-independent dissipation r1 permits only
// decreasing damage and charges |zdot| per unit volume.

struct MaterialLaws {
    double lambda = 1.0;       // elastic Lame parameters
    double mu = 1.0;
    double delta_at = 0.1;     // residual stiffness fraction in c(z)
    double visc_lambda = 0.0;  // viscosity tensor Lame parameters
    double visc_mu = 0.5;
    bool visc_damage_modulated = false;  // d(z) = c(z) instead of d = 1
    double b = 1.0;            // thermal expansion coupling, B = b I
    double k0 = 1.0;           // conductivity scale
    double kappa = 1.5;        // conductivity growth exponent, in (1,2)
    double q = 2.0;            // gradient exponent, >= 2
    double g1 = 1.0;           // gradient prefactor
    std::array<double, 3> w = {0.5, 0.0, 0.5};  // W coefficients
    double rho = 1.0;          // mass density

    void validate() const;

    // damage modulation and potential
    double c(double z) const { return z * z + delta_at; }
    double dc(double z) const { return 2.0 * z; }
    double d_visc(double z) const { return visc_damage_modulated ? c(z) : 1.0; }
    double dd_visc(double z) const { return visc_damage_modulated ? dc(z) : 0.0; }
    double W(double z) const { return w[0] + w[1] * z + w[2] * z * z; }
    double dW(double z) const { return w[1] + 2.0 * w[2] * z; }

    // base tensors applied to a symmetric 2x2 strain
    Mat2 apply_C0(const Mat2& e) const {
        return lambda * e.trace() * Mat2::Identity() + 2.0 * mu * e;
    }
    Mat2 apply_D0(const Mat2& e) const {
        return visc_lambda * e.trace() * Mat2::Identity() + 2.0 * visc_mu * e;
    }

    // derived spectral bounds (2D, lambda >= 0): C0 e : e in [2mu, 2(lambda+mu)] |e|^2
    double c1_C() const { return delta_at * 2.0 * mu; }
    double c2_C() const { return (1.0 + delta_at) * 2.0 * (lambda + mu); }
    double c1_D() const { return (visc_damage_modulated ? delta_at : 1.0) * 2.0 * visc_mu; }
    double c2_D() const { return (visc_damage_modulated ? 1.0 + delta_at : 1.0) * 2.0 * (visc_lambda + visc_mu); }
    double C_B() const { return std::abs(b) * std::sqrt(2.0); }  // Frobenius norm of bI

    // coefficient of the quadratic temperature sink in the comparison argument
    double cbar() const { return C_B() * C_B() / (2.0 * c1_D()); }
};

// Rate-independent dissipation density: |v| for v <= 0, +infinity otherwise.
double r1(double v);

// 0.5 c(z) C0 e : e; optionally its partial derivative in z.
double elastic_energy_density(const MaterialLaws& m, double z, const Mat2& e,
                              double* dz = nullptr);

// g1 |gz|^q + W(z) on [0,1], +infinity outside; optional partials in z and gz.
double gradient_energy_density(const MaterialLaws& m, double z, const Vec2& gz,
                               double* dz = nullptr, Vec2* dgz = nullptr);

// k(z, theta) = k0 (1 + |theta|^kappa); defined for all theta.
double conductivity(const MaterialLaws& m, double z, double theta);
// d/dtheta of the above.
double conductivity_dtheta(const MaterialLaws& m, double z, double theta);

// Truncation T_M: clamp to [0, M].
double truncate(double theta, double M);

} // namespace thermodamage
