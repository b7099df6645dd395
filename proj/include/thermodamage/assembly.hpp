#pragma once

#include "thermodamage/loads.hpp"
#include "thermodamage/material.hpp"
#include "thermodamage/mesh.hpp"

#include <limits>
#include <vector>

namespace thermodamage {

// ==== sparse operators ======================================================

struct SparseOperator {
    SpMat m;
    bool symmetric = false;
};

// max|A - A^T| <= rtol * max|A|
bool is_symmetric(const SpMat& A, double rtol = 1e-12);

constexpr double kNoTruncation = std::numeric_limits<double>::infinity();

// ==== assembler =============================================================
//
// P1 finite elements on triangles. Polynomial integrands use exact rules
// (consistent mass, constant-strain stiffness); damage/temperature modulated
// coefficients are evaluated at centroids (one-point rule). Element loops may
// run on several threads; scatter happens sequentially in element order, so
// results are bitwise independent of the thread count.
//
// Scalar operators (damage z, temperature theta) live on all nodes; vector
// operators (displacement u) live on the free dofs of the DofMap. "full"
// displacement vectors are length 2*n_nodes and include Dirichlet zeros.

class Assembler {
public:
    Assembler(const Mesh2D& mesh, const DofMap& dofs, const MaterialLaws& mat,
              int threads = 1)
        : mesh_(mesh), dofs_(dofs), mat_(mat), threads_(threads < 1 ? 1 : threads) {}

    const Mesh2D& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }
    const MaterialLaws& material() const { return mat_; }
    int threads() const { return threads_; }

    // ---- scalar-field operators (node numbering) ----
    SparseOperator scalar_mass() const;                       // int li lj
    Vec scalar_weights() const;                               // w_i = int li
    Vec boundary_weights() const;                             // bnd int li (whole boundary)
    // conductivity stiffness, coefficient k(z_c, T_M(theta_c)) per triangle
    SparseOperator heat_stiffness(const Vec& z, const Vec& theta,
                                  double M = kNoTruncation) const;
    // coefficient-derivative part of d/dtheta [K(theta) theta] (Newton extra term)
    SpMat heat_stiffness_dtheta(const Vec& z, const Vec& theta,
                                double M = kNoTruncation) const;
    // S_ij = int b div(du/tau) li lj  (temperature sink from thermal expansion)
    SparseOperator sink_matrix(const Vec& du_full, double tau) const;
    // int d(z) (D0 e : e) li  with e = e(du)/tau  (viscous heating, lagged z/theta)
    Vec visc_heating(const Vec& z, const Vec& theta, const Vec& du_full, double tau) const;

    // ---- vector-field operators (free dof numbering) ----
    SparseOperator vector_mass() const;                       // int li lj per component
    SparseOperator elastic_stiffness(const Vec& z) const;     // c(z_c) C0
    SparseOperator viscosity_matrix(const Vec& z, const Vec& theta) const;  // d(z_c) D0
    // n_free x n_nodes, entry ((i,alpha), j) = b int lj div(v_i e_alpha)
    SpMat coupling_matrix() const;

    // gamma regularization |e(u)|^{gamma-2} e(u), exact per constant-strain
    // triangle. Residual and Jacobian are returned WITHOUT the leading tau.
    void gamma_term(const Vec& u_free, double gamma, Vec* residual, SpMat* jacobian) const;
    double gamma_energy(const Vec& u_free, double gamma) const;  // int |e|^gamma / gamma

    // ---- loads ----
    Vec traction_shape(const Vec2& dir, const std::vector<int>& sides) const;  // free dofs
    Vec volume_shape(const Vec2& dir) const;                                   // free dofs

    // ---- field helpers ----
    Mat2 strain(const Vec& u_full, int tri) const;
    double elastic_energy(const Vec& z, const Vec& u_free) const;  // 0.5 c(z) C0 e:e integrated
    // per-triangle 0.5 A (C0 e:e); elastic energy = sum_T c(z_c_T) * s_T
    Vec elastic_strain_scale(const Vec& u_free) const;
    double grad_squared(const Vec& scalar_nodal) const;            // sum_T A |grad f|^2

private:
    const Mesh2D& mesh_;
    const DofMap& dofs_;
    const MaterialLaws& mat_;
    int threads_;
};

} // namespace thermodamage
