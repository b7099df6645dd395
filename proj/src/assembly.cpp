#include "thermodamage/assembly.hpp"

#include <cmath>
#include <functional>
#include <thread>

namespace thermodamage {

bool is_symmetric(const SpMat& A, double rtol) {
    double amax = 0.0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            amax = std::max(amax, std::abs(it.value()));
    SpMat D = SpMat(A.transpose()) - A;
    double dmax = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it)
            dmax = std::max(dmax, std::abs(it.value()));
    return dmax <= rtol * std::max(amax, std::numeric_limits<double>::min());
}

namespace {

// Elements are processed in parallel chunks; callers scatter the per-element
// results sequentially in element order, keeping assembly deterministic.
void run_chunked(int n, int threads, const std::function<void(int, int)>& fn) {
    if (threads <= 1 || n < 64) {
        fn(0, n);
        return;
    }
    const int nthreads = std::min(threads, n);
    const int chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
        const int b = t * chunk;
        const int e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back(fn, b, e);
    }
    for (auto& th : pool) th.join();
}

double centroid(const Vec& nodal, const std::array<int, 3>& tri) {
    return (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
}

} // namespace

// ==== scalar operators ======================================================

SparseOperator Assembler::scalar_mass() const {
    const int nt = mesh_.n_triangles();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(9) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const double s = mesh_.area[t] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tri[i], tri[j], s * (i == j ? 2.0 : 1.0));
    }
    SpMat M(dofs_.n_nodes, dofs_.n_nodes);
    M.setFromTriplets(trip.begin(), trip.end());
    return {std::move(M), true};
}

Vec Assembler::scalar_weights() const {
    Vec w = Vec::Zero(dofs_.n_nodes);
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const double s = mesh_.area[t] / 3.0;
        for (int v : mesh_.triangles[t]) w[v] += s;
    }
    return w;
}

Vec Assembler::boundary_weights() const {
    Vec w = Vec::Zero(dofs_.n_nodes);
    for (const auto& be : mesh_.boundary) {
        w[be.a] += 0.5 * be.length;
        w[be.b] += 0.5 * be.length;
    }
    return w;
}

SparseOperator Assembler::heat_stiffness(const Vec& z, const Vec& theta, double M) const {
    const int nt = mesh_.n_triangles();
    std::vector<double> coeff(nt);
    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const auto& tri = mesh_.triangles[t];
            const double zc = centroid(z, tri);
            double thc = centroid(theta, tri);
            if (std::isfinite(M)) thc = truncate(thc, M);
            coeff[t] = conductivity(mat_, zc, thc);
        }
    });
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(9) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& g = mesh_.grad[t];
        const double s = coeff[t] * mesh_.area[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tri[i], tri[j], s * g[i].dot(g[j]));
    }
    SpMat K(dofs_.n_nodes, dofs_.n_nodes);
    K.setFromTriplets(trip.begin(), trip.end());
    return {std::move(K), true};
}

SpMat Assembler::heat_stiffness_dtheta(const Vec& z, const Vec& theta, double M) const {
    const int nt = mesh_.n_triangles();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(9) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& g = mesh_.grad[t];
        const double zc = centroid(z, tri);
        const double thc = centroid(theta, tri);
        double ind = 1.0;
        double thq = thc;
        if (std::isfinite(M)) {
            // truncation saturates: coefficient stops responding outside (0,M)
            if (thc <= 0.0 || thc >= M) ind = 0.0;
            thq = truncate(thc, M);
        }
        if (ind == 0.0) continue;
        const double dk = conductivity_dtheta(mat_, zc, thq) / 3.0;
        Vec2 gth = Vec2::Zero();
        for (int l = 0; l < 3; ++l) gth += theta[tri[l]] * g[l];
        for (int i = 0; i < 3; ++i) {
            const double r = mesh_.area[t] * dk * gth.dot(g[i]);
            for (int j = 0; j < 3; ++j) trip.emplace_back(tri[i], tri[j], r);
        }
    }
    SpMat G(dofs_.n_nodes, dofs_.n_nodes);
    G.setFromTriplets(trip.begin(), trip.end());
    return G;
}

SparseOperator Assembler::sink_matrix(const Vec& du_full, double tau) const {
    const int nt = mesh_.n_triangles();
    std::vector<double> coeff(nt);
    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t)
            coeff[t] = mat_.b * strain(du_full, t).trace() / tau;
    });
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(9) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const double s = coeff[t] * mesh_.area[t] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trip.emplace_back(tri[i], tri[j], s * (i == j ? 2.0 : 1.0));
    }
    SpMat S(dofs_.n_nodes, dofs_.n_nodes);
    S.setFromTriplets(trip.begin(), trip.end());
    return {std::move(S), true};
}

Vec Assembler::visc_heating(const Vec& z, const Vec& /*theta*/, const Vec& du_full,
                            double tau) const {
    const int nt = mesh_.n_triangles();
    std::vector<double> dens(nt);
    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const Mat2 edot = strain(du_full, t) / tau;
            const double tr = edot.trace();
            const double base = mat_.visc_lambda * tr * tr + 2.0 * mat_.visc_mu * edot.squaredNorm();
            dens[t] = mat_.d_visc(centroid(z, mesh_.triangles[t])) * base;
        }
    });
    Vec out = Vec::Zero(dofs_.n_nodes);
    for (int t = 0; t < nt; ++t) {
        const double s = dens[t] * mesh_.area[t] / 3.0;
        for (int v : mesh_.triangles[t]) out[v] += s;
    }
    return out;
}

// ==== vector operators ======================================================

SparseOperator Assembler::vector_mass() const {
    const int nt = mesh_.n_triangles();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(18) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const double s = mesh_.area[t] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double v = s * (i == j ? 2.0 : 1.0);
                for (int a = 0; a < 2; ++a) {
                    const int r = dofs_.full_to_free[2 * tri[i] + a];
                    const int c = dofs_.full_to_free[2 * tri[j] + a];
                    if (r >= 0 && c >= 0) trip.emplace_back(r, c, v);
                }
            }
    }
    SpMat M(dofs_.n_free, dofs_.n_free);
    M.setFromTriplets(trip.begin(), trip.end());
    return {std::move(M), true};
}

namespace {

// 6x6 isotropic constant-strain element stiffness with Lame pair (la, mu2)
using ElemMat = std::array<double, 36>;

ElemMat isotropic_block(const std::array<Vec2, 3>& g, double area, double la, double mu2) {
    ElemMat K{};
    for (int i = 0; i < 3; ++i)
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 3; ++j)
                for (int bcomp = 0; bcomp < 2; ++bcomp) {
                    double v = la * g[i][a] * g[j][bcomp] +
                               mu2 * (g[i][bcomp] * g[j][a]);
                    if (a == bcomp) v += mu2 * g[i].dot(g[j]);
                    K[(2 * i + a) * 6 + (2 * j + bcomp)] = area * v;
                }
    return K;
}

} // namespace

SparseOperator Assembler::elastic_stiffness(const Vec& z) const {
    const int nt = mesh_.n_triangles();
    std::vector<ElemMat> blocks(nt);
    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const double c = mat_.c(centroid(z, mesh_.triangles[t]));
            blocks[t] = isotropic_block(mesh_.grad[t], mesh_.area[t],
                                        c * mat_.lambda, c * mat_.mu);
        }
    });
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(36) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 2; ++a) {
                const int r = dofs_.full_to_free[2 * tri[i] + a];
                if (r < 0) continue;
                for (int j = 0; j < 3; ++j)
                    for (int bc = 0; bc < 2; ++bc) {
                        const int c = dofs_.full_to_free[2 * tri[j] + bc];
                        if (c < 0) continue;
                        trip.emplace_back(r, c, blocks[t][(2 * i + a) * 6 + (2 * j + bc)]);
                    }
            }
    }
    SpMat K(dofs_.n_free, dofs_.n_free);
    K.setFromTriplets(trip.begin(), trip.end());
    return {std::move(K), true};
}

SparseOperator Assembler::viscosity_matrix(const Vec& z, const Vec& /*theta*/) const {
    const int nt = mesh_.n_triangles();
    std::vector<ElemMat> blocks(nt);
    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const double d = mat_.d_visc(centroid(z, mesh_.triangles[t]));
            blocks[t] = isotropic_block(mesh_.grad[t], mesh_.area[t],
                                        d * mat_.visc_lambda, d * mat_.visc_mu);
        }
    });
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(36) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 2; ++a) {
                const int r = dofs_.full_to_free[2 * tri[i] + a];
                if (r < 0) continue;
                for (int j = 0; j < 3; ++j)
                    for (int bc = 0; bc < 2; ++bc) {
                        const int c = dofs_.full_to_free[2 * tri[j] + bc];
                        if (c < 0) continue;
                        trip.emplace_back(r, c, blocks[t][(2 * i + a) * 6 + (2 * j + bc)]);
                    }
            }
    }
    SpMat D(dofs_.n_free, dofs_.n_free);
    D.setFromTriplets(trip.begin(), trip.end());
    return {std::move(D), true};
}

SpMat Assembler::coupling_matrix() const {
    const int nt = mesh_.n_triangles();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<size_t>(18) * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& g = mesh_.grad[t];
        const double s = mat_.b * mesh_.area[t] / 3.0;
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 2; ++a) {
                const int r = dofs_.full_to_free[2 * tri[i] + a];
                if (r < 0) continue;
                for (int j = 0; j < 3; ++j)
                    trip.emplace_back(r, tri[j], s * g[i][a]);
            }
    }
    SpMat C(dofs_.n_free, dofs_.n_nodes);
    C.setFromTriplets(trip.begin(), trip.end());
    return C;
}

void Assembler::gamma_term(const Vec& u_free, double gamma, Vec* residual,
                           SpMat* jacobian) const {
    const Vec u_full = dofs_.expand(u_free);
    const int nt = mesh_.n_triangles();

    struct Local {
        std::array<double, 6> r{};
        ElemMat K{};
        bool active = false;
    };
    std::vector<Local> loc(nt);
    const bool want_jac = jacobian != nullptr;

    run_chunked(nt, threads_, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const Mat2 ee = strain(u_full, t);
            const double en = ee.norm();
            if (en == 0.0) continue;
            loc[t].active = true;
            const auto& g = mesh_.grad[t];
            const double A = mesh_.area[t];
            const double p2 = std::pow(en, gamma - 2.0);
            // e : sym(e_a x g_i) = (e g_i)_a
            std::array<double, 6> eg{};
            for (int i = 0; i < 3; ++i) {
                const Vec2 v = ee * g[i];
                eg[2 * i] = v[0];
                eg[2 * i + 1] = v[1];
            }
            for (int k = 0; k < 6; ++k) loc[t].r[k] = A * p2 * eg[k];
            if (want_jac) {
                const double p4 = (gamma - 2.0) * std::pow(en, gamma - 4.0);
                for (int i = 0; i < 3; ++i)
                    for (int a = 0; a < 2; ++a)
                        for (int j = 0; j < 3; ++j)
                            for (int bc = 0; bc < 2; ++bc) {
                                // sym(e_a x g_i) : sym(e_b x g_j)
                                double ss = 0.5 * (g[i][bc] * g[j][a]);
                                if (a == bc) ss += 0.5 * g[i].dot(g[j]);
                                loc[t].K[(2 * i + a) * 6 + (2 * j + bc)] =
                                    A * (p2 * ss + p4 * eg[2 * i + a] * eg[2 * j + bc]);
                            }
            }
        }
    });

    if (residual) residual->setZero(dofs_.n_free);
    std::vector<Triplet> trip;
    if (want_jac) trip.reserve(static_cast<size_t>(36) * nt);
    for (int t = 0; t < nt; ++t) {
        if (!loc[t].active) continue;
        const auto& tri = mesh_.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int a = 0; a < 2; ++a) {
                const int r = dofs_.full_to_free[2 * tri[i] + a];
                if (r < 0) continue;
                if (residual) (*residual)[r] += loc[t].r[2 * i + a];
                if (want_jac)
                    for (int j = 0; j < 3; ++j)
                        for (int bc = 0; bc < 2; ++bc) {
                            const int c = dofs_.full_to_free[2 * tri[j] + bc];
                            if (c < 0) continue;
                            trip.emplace_back(r, c, loc[t].K[(2 * i + a) * 6 + (2 * j + bc)]);
                        }
            }
    }
    if (want_jac) {
        jacobian->resize(dofs_.n_free, dofs_.n_free);
        jacobian->setFromTriplets(trip.begin(), trip.end());
    }
}

double Assembler::gamma_energy(const Vec& u_free, double gamma) const {
    const Vec u_full = dofs_.expand(u_free);
    double acc = 0.0;
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const double en = strain(u_full, t).norm();
        if (en > 0.0) acc += mesh_.area[t] * std::pow(en, gamma) / gamma;
    }
    return acc;
}

// ==== loads =================================================================

Vec Assembler::traction_shape(const Vec2& dir, const std::vector<int>& sides) const {
    Vec F = Vec::Zero(dofs_.n_free);
    for (const auto& be : mesh_.boundary) {
        if (be.label != BoundaryLabel::Neumann) continue;
        if (!sides.empty() &&
            std::find(sides.begin(), sides.end(), be.side) == sides.end())
            continue;
        const double s = 0.5 * be.length;
        for (int node : {be.a, be.b})
            for (int a = 0; a < 2; ++a) {
                const int f = dofs_.full_to_free[2 * node + a];
                if (f >= 0) F[f] += s * dir[a];
            }
    }
    return F;
}

Vec Assembler::volume_shape(const Vec2& dir) const {
    Vec F = Vec::Zero(dofs_.n_free);
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const double s = mesh_.area[t] / 3.0;
        for (int node : mesh_.triangles[t])
            for (int a = 0; a < 2; ++a) {
                const int f = dofs_.full_to_free[2 * node + a];
                if (f >= 0) F[f] += s * dir[a];
            }
    }
    return F;
}

// ==== field helpers =========================================================

Mat2 Assembler::strain(const Vec& u_full, int tri) const {
    const auto& t = mesh_.triangles[tri];
    const auto& g = mesh_.grad[tri];
    Mat2 H = Mat2::Zero();
    for (int i = 0; i < 3; ++i) {
        const Vec2 ui(u_full[2 * t[i]], u_full[2 * t[i] + 1]);
        H += ui * g[i].transpose();
    }
    return 0.5 * (H + H.transpose());
}

double Assembler::elastic_energy(const Vec& z, const Vec& u_free) const {
    const Vec u_full = dofs_.expand(u_free);
    double acc = 0.0;
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const Mat2 e = strain(u_full, t);
        const double tr = e.trace();
        const double base = mat_.lambda * tr * tr + 2.0 * mat_.mu * e.squaredNorm();
        acc += 0.5 * mat_.c(centroid(z, mesh_.triangles[t])) * base * mesh_.area[t];
    }
    return acc;
}

Vec Assembler::elastic_strain_scale(const Vec& u_free) const {
    const Vec u_full = dofs_.expand(u_free);
    Vec s(mesh_.n_triangles());
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const Mat2 e = strain(u_full, t);
        const double tr = e.trace();
        s[t] = 0.5 * mesh_.area[t] *
               (mat_.lambda * tr * tr + 2.0 * mat_.mu * e.squaredNorm());
    }
    return s;
}

double Assembler::grad_squared(const Vec& scalar_nodal) const {
    double acc = 0.0;
    for (int t = 0; t < mesh_.n_triangles(); ++t) {
        const auto& tri = mesh_.triangles[t];
        const auto& g = mesh_.grad[t];
        Vec2 gr = Vec2::Zero();
        for (int i = 0; i < 3; ++i) gr += scalar_nodal[tri[i]] * g[i];
        acc += mesh_.area[t] * gr.squaredNorm();
    }
    return acc;
}

} // namespace thermodamage
