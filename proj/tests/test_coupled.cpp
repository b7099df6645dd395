#include "thermodamage/coupled.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace thermodamage;

namespace {

Vec random_vec(int n, unsigned seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = unif(rng);
    return v;
}

// Small coupled system with all operators assembled at a given state.
struct CoupledFixture {
    Mesh2D mesh;
    DofMap dofs;
    MaterialLaws mat;
    Assembler asem;
    SpMat Mv, Ms, D, K, Cup;
    CoupledInputs in;

    static MaterialLaws with_coupling(double b) {
        MaterialLaws m;
        m.b = b;
        return m;
    }

    explicit CoupledFixture(int n = 3, double b = 1.0)
        : mesh(generate_unit_square(n, {Side::Left})), dofs(mesh), mat(with_coupling(b)),
          asem(mesh, dofs, mat) {
        const int nn = mesh.n_nodes();
        Vec z = Vec::Ones(nn);
        Vec theta = Vec::Ones(nn);
        Mv = asem.vector_mass().m;
        Ms = asem.scalar_mass().m;
        D = asem.viscosity_matrix(z, theta).m;
        K = asem.elastic_stiffness(z).m;
        Cup = asem.coupling_matrix();
        in.Mv = &Mv;
        in.Ms = &Ms;
        in.D = &D;
        in.K = &K;
        in.Cup = &Cup;
        in.F = Vec::Zero(dofs.n_free);
        in.heat_source = Vec::Zero(nn);
        in.u_prev = Vec::Zero(dofs.n_free);
        in.u_prev2 = Vec::Zero(dofs.n_free);
        in.theta_prev = theta;
        in.z_curr = z;
        in.z_prev = z;
        in.tau = 0.05;
    }
};

} // namespace

// ==== scaling factors =======================================================

TEST_CASE("scaling factors are exactly one at the base point") {
    Scaling s;  // eps = 1, beta = 0
    CHECK(s.inertia() == 1.0);
    CHECK(s.viscosity() == 1.0);
    CHECK(s.conductivity() == 1.0);
    CHECK(s.heat_lhs() == 1.0);
    CHECK(s.heat_zdot() == 1.0);
    CHECK(s.heat_visc() == 1.0);
    CHECK(s.heat_sink() == 1.0);
}

TEST_CASE("scaling factors follow the prescribed powers") {
    Scaling s;
    s.eps = 0.25;
    s.beta = 2.0;
    CHECK(s.inertia() == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(s.viscosity() == 0.25);
    CHECK(s.conductivity() == doctest::Approx(16.0).epsilon(1e-15));
    CHECK(s.heat_lhs() == 0.25);
    CHECK(s.heat_zdot() == 0.25);
    CHECK(s.heat_visc() == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(s.heat_sink() == 0.25);
}

// ==== stationary solutions ==================================================

TEST_CASE("zero load step converges with tight untruncated residuals") {
    CoupledFixture f;
    CoupledOptions opt;
    CoupledResult r = solve_coupled(f.asem, f.in, opt, 1);
    CHECK(momentum_residual(f.asem, f.in, r.u, r.theta).lpNorm<Eigen::Infinity>() <=
          1e-10);
    CHECK(heat_residual(f.asem, f.in, r.u, r.theta).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(r.theta.minCoeff() > 0.0);
}

TEST_CASE("decoupled (b = 0) heat equation keeps uniform temperature exactly") {
    CoupledFixture f(3, 0.0);
    CoupledOptions opt;
    CoupledResult r = solve_coupled(f.asem, f.in, opt, 1);
    CHECK((r.u - Vec::Zero(f.dofs.n_free)).lpNorm<Eigen::Infinity>() <= 1e-12);
    // K_heat * const = 0 and no sources: theta stays at 1 to solver precision
    CHECK((r.theta - Vec::Ones(f.mesh.n_nodes())).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("uniform heat source raises a uniform temperature affinely") {
    // b = 0, theta uniform: Ms (theta - prev)/tau = Q with Q = q * weights
    // gives theta = prev + tau * q exactly (conductivity term vanishes).
    CoupledFixture f(3, 0.0);
    const double q = 2.0;
    Vec w = f.asem.scalar_weights();
    f.in.heat_source = q * w;
    CoupledOptions opt;
    CoupledResult r = solve_coupled(f.asem, f.in, opt, 1);
    const double expected = 1.0 + f.in.tau * q;
    CHECK((r.theta - Vec::Constant(f.mesh.n_nodes(), expected)).lpNorm<Eigen::Infinity>() <=
          1e-10);
}

// ==== residual consistency and derivatives ==================================

TEST_CASE("heat jacobian matches finite differences of the heat residual") {
    CoupledFixture f(2);
    const int nn = f.mesh.n_nodes();
    f.in.theta_prev = random_vec(nn, 41, 0.5, 2.0);
    f.in.u_prev = random_vec(f.dofs.n_free, 42, -0.1, 0.1);
    Vec u = random_vec(f.dofs.n_free, 43, -0.1, 0.1);
    Vec theta = random_vec(nn, 44, 0.5, 2.0);
    SpMat J = heat_jacobian(f.asem, f.in, u, theta);
    Vec dir = random_vec(nn, 45, -1.0, 1.0);
    const double h = 1e-6;
    Vec rp = heat_residual(f.asem, f.in, u, theta + h * dir);
    Vec rm = heat_residual(f.asem, f.in, u, theta - h * dir);
    Vec fd = (rp - rm) / (2.0 * h);
    Vec an = J * dir;
    CHECK((an - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * (1.0 + fd.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("momentum residual is linear in theta through the coupling") {
    CoupledFixture f(2);
    Vec u = random_vec(f.dofs.n_free, 46, -0.1, 0.1);
    Vec t1 = random_vec(f.mesh.n_nodes(), 47, 0.5, 2.0);
    Vec t2 = random_vec(f.mesh.n_nodes(), 48, 0.5, 2.0);
    Vec r1v = momentum_residual(f.asem, f.in, u, t1);
    Vec r2v = momentum_residual(f.asem, f.in, u, t2);
    Vec diff_an = f.Cup * (t2 - t1);  // residual carries -Cup theta
    CHECK(((r1v - r2v) - diff_an).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("truncated residuals coincide when the truncation is inactive") {
    CoupledFixture f(2);
    Vec u = random_vec(f.dofs.n_free, 49, -0.1, 0.1);
    Vec theta = random_vec(f.mesh.n_nodes(), 50, 0.5, 2.0);  // max < 16
    Vec full = heat_residual(f.asem, f.in, u, theta);
    Vec trunc = heat_residual(f.asem, f.in, u, theta, 16.0);
    CHECK((full - trunc).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("continuation from a tiny truncation bound reaches the same answer") {
    CoupledFixture f;
    f.in.heat_source = 3.0 * f.asem.scalar_weights();
    f.in.F = 0.1 * f.asem.volume_shape(Vec2(1.0, 0.0));
    CoupledOptions a;        // m_start = 16
    CoupledOptions b;
    b.m_start = 0.5;         // forces several doubling rounds
    CoupledResult ra = solve_coupled(f.asem, f.in, a, 1);
    CoupledResult rb = solve_coupled(f.asem, f.in, b, 1);
    CHECK(rb.m_rounds > ra.m_rounds);
    CHECK((ra.u - rb.u).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((ra.theta - rb.theta).lpNorm<Eigen::Infinity>() <= 1e-9);
    // acceptance is on untruncated residuals in both runs
    CHECK(heat_residual(f.asem, f.in, rb.u, rb.theta).lpNorm<Eigen::Infinity>() <= 1e-9);
}

// ==== comparison sequence and floors ========================================

TEST_CASE("comparison step solves the quadratic update") {
    // tau ceff v^2 + v = r: plug the output back in
    const double v = comparison_step(0.8, 0.1, 2.0, 0.5);
    CHECK(0.1 * 2.0 * v * v + v == doctest::Approx(0.8 + 0.1 * 0.5).epsilon(1e-13));
    CHECK(v > 0.0);
    CHECK(v < 0.8 + 0.1 * 0.5);
}

TEST_CASE("comparison step without sink reduces to explicit Euler") {
    CHECK(comparison_step(1.0, 0.25, 0.0, 2.0) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("balanced supply H* = cbar theta*^2 keeps the floor pinned") {
    // v = 1, ceff = 1, Heff = 1: tau v^2 + v = 1 + tau has root v = 1 exactly.
    PositivityMonitor mon;
    mon.init(1.0, 1.0, 1.0, 1.0);
    CHECK(mon.floor() == 1.0);
    for (int k = 0; k < 50; ++k) mon.advance(0.02);
    CHECK(mon.floor() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("basic floor tracks the closed-form bound from above") {
    PositivityMonitor mon;
    mon.init(1.0, 1.0, 1.0, 0.0);  // cbar = 1, eps = 1, theta* = 1, no supply
    CHECK(mon.floor() == 1.0);
    const double tau = 0.01;
    double t = 0.0;
    for (int k = 0; k < 100; ++k) {
        mon.advance(tau);
        t += tau;
        // the discrete sequence dominates the continuous comparison solution
        CHECK(mon.floor() >= theta_tilde(t, 1.0, 1.0) - 1e-12);
        CHECK(mon.floor() > 0.0);
    }
    // at T = 1: theta_tilde = 1 / (1 + 1) = 0.5
    CHECK(theta_tilde(1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mon.floor() == doctest::Approx(0.5).epsilon(2e-2));
}

TEST_CASE("floor initialization starts at theta_star regardless of supply") {
    PositivityMonitor mon;
    mon.init(1.0, 1.0, 0.25, 5.0);  // huge supply must not lift v0 above theta*
    CHECK(mon.floor() == 0.25);
    mon.advance(0.1);
    CHECK(mon.floor() > 0.25);  // supply now pushes the floor up
}

TEST_CASE("rescaled floor uses ceff = cbar / eps") {
    PositivityMonitor a, b;
    a.init(1.0, 1.0, 1.0, 0.0);
    b.init(1.0, 0.5, 1.0, 0.0);  // stronger effective sink
    CHECK(a.ceff == 1.0);
    CHECK(b.ceff == 2.0);
    a.advance(0.1);
    b.advance(0.1);
    CHECK(b.floor() < a.floor());
}

TEST_CASE("verify_positivity compares the nodal minimum against the floor") {
    Vec theta(3);
    theta << 1.0, 0.6, 0.8;
    CHECK(verify_positivity(theta, 0.6));
    CHECK(verify_positivity(theta, 0.6 + 5e-11));   // inside the tolerance
    CHECK_FALSE(verify_positivity(theta, 0.7));
}
