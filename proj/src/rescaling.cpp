#include "thermodamage/rescaling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

namespace thermodamage {

namespace {

TimeSignal scale_signal(TimeSignal s, double factor) {
    s.value *= factor;
    for (double& v : s.values) v *= factor;
    return s;
}

std::string eps_dir_name(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "eps_%g", eps);
    return buf;
}

} // namespace

// ==== diagnostics ===========================================================

RescaleDiagnostics compute_rescale_diagnostics(const Mesh2D& mesh, const MaterialLaws& mat,
                                               const std::vector<TrajectoryFrame>& frames,
                                               double tau, double horizon,
                                               const TimeSignal& htilde,
                                               const TimeSignal& htilde_b, const Scaling& scal,
                                               int threads) {
    const DofMap dofs(mesh);
    const Assembler asmb(mesh, dofs, mat, threads);
    const SpMat Ms = asmb.scalar_mass().m;
    const SpMat Mv = asmb.vector_mass().m;
    const Vec w = asmb.scalar_weights();
    const double area = w.sum();
    const double bnd_len = asmb.boundary_weights().sum();
    const Vec ones = Vec::Ones(mesh.n_nodes());
    const bool modulated = mat.visc_damage_modulated;
    SpMat D = modulated ? SpMat() : asmb.viscosity_matrix(ones, ones).m;

    RescaleDiagnostics d;
    const double thermal0 = w.dot(frames[0].theta);
    Vec udot_free;

    for (std::size_t k = 0; k < frames.size(); ++k) {
        const Vec& th = frames[k].theta;
        d.time.push_back(frames[k].time);
        const double mean = w.dot(th) / area;
        d.theta_mean.push_back(mean);
        const Vec dev = th - mean * ones;
        d.spatial_defect.push_back(std::sqrt(dev.dot(Ms * dev)));
        d.grad_theta_sq.push_back(asmb.grad_squared(th));

        if (k == 0) {
            d.ode_residual.push_back(0.0);
            continue;
        }
        const Vec udot_full = (frames[k].u - frames[k - 1].u) / tau;
        udot_free = dofs.restrict_free(udot_full);
        if (modulated) D = asmb.viscosity_matrix(frames[k - 1].z, frames[k - 1].theta).m;

        const double mu = scal.viscosity() * udot_free.dot(D * udot_free);
        double srsq = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t)
            srsq += mesh.area[t] * asmb.strain(udot_full, t).squaredNorm();
        d.mu_density.push_back(mu);
        d.strain_rate_sq.push_back(srsq);

        d.mu_total += tau * mu;
        d.zdrop_total += w.dot(frames[k - 1].z - frames[k].z);
        const int step = static_cast<int>(k);
        d.source_total += tau * (local_mean(htilde, tau, step, horizon) * area +
                                 local_mean(htilde_b, tau, step, horizon) * bnd_len);
        d.ode_residual.push_back((w.dot(th) - thermal0) -
                                 (d.mu_total + d.zdrop_total + d.source_total));
    }

    double grad_int = 0.0, strain_int = 0.0;
    for (std::size_t k = 1; k < frames.size(); ++k) {
        grad_int += tau * d.grad_theta_sq[k];
        strain_int += tau * d.strain_rate_sq[k - 1];
    }
    d.grad_theta_l2 = std::sqrt(grad_int);
    d.eps_strain_rate_l2 = scal.eps * std::sqrt(strain_int);
    d.sup_spatial_defect = *std::max_element(d.spatial_defect.begin(), d.spatial_defect.end());
    if (frames.size() >= 2) {
        d.kinetic_final = 0.5 * scal.inertia() * mat.rho * udot_free.dot(Mv * udot_free);
    }
    return d;
}

std::vector<double> theta_ode_residual(const Mesh2D& mesh, const MaterialLaws& mat,
                                       const std::vector<TrajectoryFrame>& frames, double tau,
                                       double horizon, const TimeSignal& htilde,
                                       const TimeSignal& htilde_b, const Scaling& scal,
                                       int threads) {
    return compute_rescale_diagnostics(mesh, mat, frames, tau, horizon, htilde, htilde_b, scal,
                                       threads)
        .ode_residual;
}

// ==== member run ============================================================

namespace {

void write_rescaling_csv(const std::string& path, const RescaleDiagnostics& d) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "step,time,theta_mean,ode_residual,mu_density,strain_rate_sq,grad_theta_sq,"
           "spatial_defect\n";
    for (std::size_t k = 0; k < d.time.size(); ++k) {
        out << k << ',' << fmt17(d.time[k]) << ',' << fmt17(d.theta_mean[k]) << ','
            << fmt17(d.ode_residual[k]) << ','
            << (k == 0 ? "0" : fmt17(d.mu_density[k - 1])) << ','
            << (k == 0 ? "0" : fmt17(d.strain_rate_sq[k - 1])) << ','
            << fmt17(d.grad_theta_sq[k]) << ',' << fmt17(d.spatial_defect[k]) << '\n';
    }
}

} // namespace

RescaledRun run_rescaled(const SimConfig& cfg, double eps, const std::string& out_dir) {
    if (!(eps > 0.0) || eps > 1.0)
        throw ConfigError("rescaling requires eps in (0, 1], got " + fmt17(eps));
    const double beta = cfg.rescaling.beta;
    if (beta < 2.0) {
        const std::string msg = "rescaling.beta = " + fmt17(beta) +
                                " is below 2; the limit-ODE identity is certified for beta >= 2";
        if (cfg.run.strict) throw ConfigError(msg);
        std::cerr << "warning: " << msg << "\n";
    }

    Mesh2D mesh = build_mesh(cfg.mesh, cfg.config_dir, cfg.run.strict);
    for (const BoundaryEdge& e : mesh.boundary)
        if (e.label != BoundaryLabel::Dirichlet)
            throw ConfigError("rescaled runs require Dirichlet conditions on the whole "
                              "boundary (found a Neumann edge)");

    RescaledRun out;
    out.scal.eps = eps;
    out.scal.beta = beta;
    out.loads = cfg.loads;
    out.loads.H = scale_signal(cfg.rescaling.htilde, eps);
    out.loads.hb = scale_signal(cfg.rescaling.htilde_b, eps);

    out.run = run_simulation(cfg, mesh, out.loads, out.scal, out_dir);
    out.diag = compute_rescale_diagnostics(mesh, cfg.material, out.run.trajectory,
                                           cfg.time.tau(), cfg.time.horizon,
                                           cfg.rescaling.htilde, cfg.rescaling.htilde_b,
                                           out.scal, cfg.run.threads);
    if (!out_dir.empty()) write_rescaling_csv(out_dir + "/rescaling.csv", out.diag);
    return out;
}

// ==== sweep =================================================================

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    const double denom = n * sxx - sx * sx;
    if (n < 2 || denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / denom;
}

std::string sweep_report_header() {
    return "eps,beta,grad_theta_l2,eps_strain_rate_l2,sup_spatial_defect,mu_total,zdrop_total,"
           "source_total,ode_residual_final,ode_residual_max_abs,kinetic_final,"
           "worst_mech_residual,worst_total_residual,mu_nonneg,certifications_pass,"
           "slope_grad_theta,slope_eps_strain_rate,slope_spatial_defect,slope_ode_residual,"
           "slope_kinetic_final";
}

std::string format_sweep_row(const SweepRow& row, const SweepReport& rep) {
    const RescaleDiagnostics& d = row.diag;
    double ode_max = 0.0;
    for (double r : d.ode_residual) ode_max = std::max(ode_max, std::abs(r));
    std::string s = fmt17(row.eps);
    auto add = [&s](const std::string& v) {
        s += ',';
        s += v;
    };
    add(fmt17(rep.beta));
    add(fmt17(d.grad_theta_l2));
    add(fmt17(d.eps_strain_rate_l2));
    add(fmt17(d.sup_spatial_defect));
    add(fmt17(d.mu_total));
    add(fmt17(d.zdrop_total));
    add(fmt17(d.source_total));
    add(fmt17(d.ode_residual.back()));
    add(fmt17(ode_max));
    add(fmt17(d.kinetic_final));
    add(fmt17(row.certs.worst_mech));
    add(fmt17(row.certs.worst_total));
    add(row.mu_nonneg ? "PASS" : "FAIL");
    add(row.all_pass ? "PASS" : "FAIL");
    add(fmt17(rep.slope_grad_theta));
    add(fmt17(rep.slope_eps_strain_rate));
    add(fmt17(rep.slope_spatial_defect));
    add(fmt17(rep.slope_ode_residual));
    add(fmt17(rep.slope_kinetic_final));
    return s;
}

namespace {

void fit_slopes(SweepReport& rep) {
    std::vector<double> eps, grad, strain, defect, ode, kin;
    for (const SweepRow& r : rep.rows) {
        eps.push_back(r.eps);
        grad.push_back(r.diag.grad_theta_l2);
        strain.push_back(r.diag.eps_strain_rate_l2);
        defect.push_back(r.diag.sup_spatial_defect);
        double ode_max = 0.0;
        for (double v : r.diag.ode_residual) ode_max = std::max(ode_max, std::abs(v));
        ode.push_back(ode_max);
        kin.push_back(r.diag.kinetic_final);
    }
    rep.slope_grad_theta = fit_loglog_slope(eps, grad);
    rep.slope_eps_strain_rate = fit_loglog_slope(eps, strain);
    rep.slope_spatial_defect = fit_loglog_slope(eps, defect);
    rep.slope_ode_residual = fit_loglog_slope(eps, ode);
    rep.slope_kinetic_final = fit_loglog_slope(eps, kin);
}

void write_sweep_report(const std::string& out_dir, const SweepReport& rep) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/sweep_report.csv");
    if (!out) throw IoError("cannot open sweep_report.csv for writing");
    out << sweep_report_header() << '\n';
    for (const SweepRow& row : rep.rows) out << format_sweep_row(row, rep) << '\n';
}

} // namespace

SweepReport sweep_eps(const SimConfig& cfg, const std::string& out_dir) {
    std::vector<double> epsilons = cfg.rescaling.epsilons;
    if (epsilons.size() < 3)
        throw ConfigError("rescaling.epsilons needs at least 3 values for a sweep, got " +
                          std::to_string(epsilons.size()));
    std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());

    SweepReport rep;
    rep.beta = cfg.rescaling.beta;

    std::vector<std::future<RescaledRun>> jobs;
    jobs.reserve(epsilons.size());
    for (double eps : epsilons) {
        const std::string dir = out_dir.empty() ? "" : out_dir + "/" + eps_dir_name(eps);
        jobs.push_back(std::async(std::launch::async,
                                  [&cfg, eps, dir]() { return run_rescaled(cfg, eps, dir); }));
    }

    // sequential reduction ordered by descending eps; a failure writes the
    // partial report (completed members only) before propagating
    std::exception_ptr failure;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            RescaledRun r = jobs[i].get();
            SweepRow row;
            row.eps = epsilons[i];
            row.certs = r.run.certs;
            row.all_pass = r.run.certs.all_pass();
            row.mu_nonneg = std::all_of(r.diag.mu_density.begin(), r.diag.mu_density.end(),
                                        [](double m) { return m >= 0.0; });
            row.diag = std::move(r.diag);
            rep.rows.push_back(std::move(row));
        } catch (...) {
            if (!failure) failure = std::current_exception();
        }
    }
    rep.complete = !failure;
    fit_slopes(rep);
    write_sweep_report(out_dir, rep);
    if (failure) std::rethrow_exception(failure);
    return rep;
}

} // namespace thermodamage
