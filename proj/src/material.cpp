#include "thermodamage/material.hpp"

#include <cmath>

namespace thermodamage {

void MaterialLaws::validate() const {
    if (!(mu > 0.0)) throw ConfigError("material: mu must be > 0");
    if (!(lambda >= 0.0)) throw ConfigError("material: lambda must be >= 0");
    if (!(delta_at > 0.0)) throw ConfigError("material: delta_at must be > 0 (keeps C(z) coercive)");
    if (!(visc_mu > 0.0)) throw ConfigError("material: visc_mu must be > 0");
    if (!(visc_lambda >= 0.0)) throw ConfigError("material: visc_lambda must be >= 0");
    if (!(k0 > 0.0)) throw ConfigError("material: k0 must be > 0");
    if (!(kappa > 1.0 && kappa < 2.0)) throw ConfigError("material: kappa must lie in (1,2)");
    if (!(q >= 2.0)) throw ConfigError("material: gradient exponent q must be >= 2");
    if (!(g1 > 0.0)) throw ConfigError("material: gradient prefactor g1 must be > 0");
    if (!(rho > 0.0)) throw ConfigError("material: rho must be > 0");
    // W must be nonnegative on [0,1] so the stored energy stays bounded below
    double lo = std::min(W(0.0), W(1.0));
    if (w[2] > 0.0) {
        double zs = -w[1] / (2.0 * w[2]);
        if (zs > 0.0 && zs < 1.0) lo = std::min(lo, W(zs));
    }
    if (lo < 0.0) throw ConfigError("material: W(z) must be >= 0 on [0,1]");
}

double r1(double v) {
    if (v <= 0.0) return -v;
    return std::numeric_limits<double>::infinity();
}

double elastic_energy_density(const MaterialLaws& m, double z, const Mat2& e, double* dz) {
    const double tr = e.trace();
    const double ee = e.squaredNorm();
    const double base = m.lambda * tr * tr + 2.0 * m.mu * ee;  // C0 e : e
    if (dz) *dz = 0.5 * m.dc(z) * base;
    return 0.5 * m.c(z) * base;
}

double gradient_energy_density(const MaterialLaws& m, double z, const Vec2& gz,
                               double* dz, Vec2* dgz) {
    if (z < 0.0 || z > 1.0) {
        if (dz) *dz = 0.0;
        if (dgz) *dgz = Vec2::Zero();
        return std::numeric_limits<double>::infinity();
    }
    const double gn = gz.norm();
    if (dz) *dz = m.dW(z);
    if (dgz) {
        // q >= 2 keeps the derivative finite at gz = 0
        *dgz = (gn == 0.0) ? Vec2(Vec2::Zero())
                           : Vec2(m.g1 * m.q * std::pow(gn, m.q - 2.0) * gz);
    }
    return m.g1 * std::pow(gn, m.q) + m.W(z);
}

double conductivity(const MaterialLaws& m, double /*z*/, double theta) {
    return m.k0 * (1.0 + std::pow(std::abs(theta), m.kappa));
}

double conductivity_dtheta(const MaterialLaws& m, double /*z*/, double theta) {
    if (theta == 0.0) return 0.0;  // kappa > 1 makes the derivative vanish at 0
    const double s = theta > 0.0 ? 1.0 : -1.0;
    return m.k0 * m.kappa * std::pow(std::abs(theta), m.kappa - 1.0) * s;
}

double truncate(double theta, double M) {
    if (theta < 0.0) return 0.0;
    if (theta > M) return M;
    return theta;
}

} // namespace thermodamage
