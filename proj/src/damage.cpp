#include "thermodamage/damage.hpp"

#include <cmath>
#include <random>

namespace thermodamage {

// ==== projected Barzilai-Borwein descent ====================================

namespace {

Vec project(const Vec& x, const Vec& lo, const Vec& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

} // namespace

DamageResult minimize_box(const BoxObjective& f, Vec x0, const Vec& lo, const Vec& hi,
                          const DamageSolverOptions& opt) {
    DamageResult res;
    Vec x = project(x0, lo, hi);
    Vec g(x.size()), g_new(x.size());
    double fx = f.value(x);
    res.objective_initial = fx;
    const double scale = std::max(1.0, std::abs(fx));
    const double tol = opt.tol_rel * scale;

    f.gradient(x, g);
    double alpha = 1.0 / std::max(g.lpNorm<Eigen::Infinity>(), 1e-30);
    alpha = std::clamp(alpha, opt.alpha_min, opt.alpha_max);

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        res.pg_residual = (x - project(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
        if (res.pg_residual <= tol) {
            res.converged = true;
            break;
        }

        // backtracking along the projection arc
        double a = alpha;
        Vec x_try;
        double f_try = fx;
        bool accepted = false;
        for (int bt = 0; bt <= opt.max_backtracks; ++bt) {
            x_try = project(x - a * g, lo, hi);
            const Vec d = x_try - x;
            if (d.lpNorm<Eigen::Infinity>() == 0.0) break;  // no movement possible
            f_try = f.value(x_try);
            if (f_try <= fx + opt.backtrack_c * g.dot(d)) {
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted) {
            if (f_try < fx && x_try.size() == x.size() && (x_try - x).lpNorm<Eigen::Infinity>() > 0.0) {
                // plain decrease is still progress; take it
            } else {
                break;  // stalled
            }
        }

        f.gradient(x_try, g_new);
        const Vec s = x_try - x;
        const Vec y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 0.0) {
            alpha = std::clamp(s.squaredNorm() / sy, opt.alpha_min, opt.alpha_max);
        } else {
            alpha = opt.alpha_max;  // nonpositive curvature: take long steps
        }
        x = std::move(x_try);
        fx = f_try;
        g = g_new;
    }

    res.pg_residual = (x - project(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
    if (res.pg_residual <= tol) res.converged = true;
    res.z = std::move(x);
    res.objective = fx;
    return res;
}

// ==== damage increment objective ============================================

DamageProblem::DamageProblem(const Mesh2D& mesh, const MaterialLaws& mat,
                             SpMat scalar_mass, Vec weights, Vec strain_scale,
                             Vec z_prev)
    : mesh_(mesh), mat_(mat), mass_(std::move(scalar_mass)),
      weights_(std::move(weights)), strain_scale_(std::move(strain_scale)),
      z_prev_(std::move(z_prev)) {}

double damage_regularization_energy(const Mesh2D& mesh, const MaterialLaws& mat,
                                    const SpMat& scalar_mass, const Vec& weights,
                                    const Vec& z) {
    double grad_part = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& g = mesh.grad[t];
        Vec2 gz = Vec2::Zero();
        for (int i = 0; i < 3; ++i) gz += z[tri[i]] * g[i];
        const double gn = gz.norm();
        if (gn > 0.0) grad_part += mesh.area[t] * mat.g1 * std::pow(gn, mat.q);
    }
    const double omega = weights.sum();  // int 1 dx
    const double w_part = mat.w[0] * omega + mat.w[1] * weights.dot(z) +
                          mat.w[2] * z.dot(scalar_mass * z);
    return grad_part + w_part;
}

double DamageProblem::regularization_energy(const Vec& z) const {
    return damage_regularization_energy(mesh_, mat_, mass_, weights_, z);
}

double DamageProblem::elastic_part(const Vec& z) const {
    double acc = 0.0;
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const auto& tri = mesh_.triangles[t];
        const double zc = (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
        acc += mat_.c(zc) * strain_scale_[t];
    }
    return acc;
}

double DamageProblem::stored_energy(const Vec& z) const {
    return elastic_part(z) + regularization_energy(z);
}

double DamageProblem::value(const Vec& z) const {
    return stored_energy(z) + weights_.dot(z_prev_ - z);
}

void DamageProblem::gradient(const Vec& z, Vec& g) const {
    g = mat_.w[1] * weights_ + 2.0 * mat_.w[2] * (mass_ * z) - weights_;
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& gr = mesh_.grad[t];
        const double zc = (z[tri[0]] + z[tri[1]] + z[tri[2]]) / 3.0;
        const double el = mat_.dc(zc) * strain_scale_[t] / 3.0;
        Vec2 gz = Vec2::Zero();
        for (int i = 0; i < 3; ++i) gz += z[tri[i]] * gr[i];
        const double gn = gz.norm();
        const double coef =
            gn > 0.0 ? mat_.g1 * mat_.q * std::pow(gn, mat_.q - 2.0) * mesh_.area[t] : 0.0;
        for (int i = 0; i < 3; ++i) {
            g[tri[i]] += el;
            if (coef != 0.0) g[tri[i]] += coef * gz.dot(gr[i]);
        }
    }
}

double DamageProblem::semistability_residual(const Vec& z, const Vec& zt) const {
    return stored_energy(zt) + weights_.dot(z - zt) - stored_energy(z);
}

DamageResult minimize_damage(const DamageProblem& p, const DamageSolverOptions& opt) {
    const Vec lo = Vec::Zero(p.z_prev().size());
    return minimize_box(p, p.z_prev(), lo, p.z_prev(), opt);
}

// ==== semistability certification ===========================================

SemistabilityReport check_semistability(const DamageProblem& p, const Vec& z,
                                        const SemistabilityOptions& opt) {
    SemistabilityReport rep;
    rep.samples = opt.samples;
    rep.scale = std::max(1.0, std::abs(p.stored_energy(z)));
    rep.worst_residual = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = static_cast<int>(z.size());
    const double zmax = z.lpNorm<Eigen::Infinity>();

    Vec zt(n);
    for (int s = 0; s < opt.samples; ++s) {
        switch (s % 3) {
            case 0: {  // uniform fractional drop
                zt = unit(rng) * z;
                break;
            }
            case 1: {  // single-node drop
                zt = z;
                const int i = static_cast<int>(unit(rng) * n) % n;
                zt[i] = unit(rng) * z[i];
                break;
            }
            default: {  // random nonnegative-drop field
                const double sigma = 0.2 * zmax + 1e-3;
                for (int i = 0; i < n; ++i) {
                    const double drop = std::abs(gauss(rng)) * sigma;
                    zt[i] = std::max(0.0, z[i] - drop);
                }
                break;
            }
        }
        rep.worst_residual = std::min(rep.worst_residual, p.semistability_residual(z, zt));
    }
    if (opt.samples == 0) rep.worst_residual = 0.0;
    rep.pass = rep.worst_residual >= -opt.tol_rel * rep.scale;
    return rep;
}

} // namespace thermodamage
