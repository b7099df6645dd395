#include "thermodamage/timeloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace thermodamage {

namespace {

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    return p.string();
}

std::string vtk_name(const std::string& dir, int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06d.vtk", step);
    return dir + "/" + buf;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string CertificationSummary::failed_names() const {
    std::string s;
    auto add = [&s](const char* name) {
        if (!s.empty()) s += ",";
        s += name;
    };
    if (!semistability) add("semistability");
    if (!mech_energy) add("mech_energy");
    if (!total_energy) add("total_energy");
    if (!positivity) add("positivity");
    if (!unidirectionality) add("unidirectionality");
    return s;
}

// ==== energy residuals ======================================================

namespace {
double stored_sum(const LedgerRow& r) {
    return r.elastic + r.grad_energy + r.gamma_reg + r.load_work;
}
} // namespace

double mech_energy_residual(const LedgerRow& now, const LedgerRow& initial) {
    const double budget = initial.kinetic + stored_sum(initial);
    const double state = now.kinetic + stored_sum(now) + now.r1_dissipation +
                         now.viscous_dissipation;
    // thermal expansion feeds work back into the mechanical balance
    return budget - now.external_power + now.coupling_work - state;
}

double total_energy_residual(const LedgerRow& now, const LedgerRow& initial) {
    const double budget = initial.kinetic + stored_sum(initial) + initial.thermal_energy;
    const double state = now.kinetic + stored_sum(now) + now.thermal_energy;
    return budget - now.external_power + now.heat_intake - state;
}

// ==== LedgerComputer ========================================================

LedgerComputer::LedgerComputer(const Assembler& asmb, const SimConfig& cfg,
                               const LoadData& loads, const Scaling& scal)
    : asmb_(asmb), mesh_(asmb.mesh()), dofs_(asmb.dofs()), mat_(asmb.material()), cfg_(cfg),
      loads_(loads), scal_(scal), tau_(cfg.time.tau()), steps_(cfg.time.steps) {
    Ms_ = asmb_.scalar_mass().m;
    Mv_ = asmb_.vector_mass().m;
    Cup_ = asmb_.coupling_matrix();
    w_ = asmb_.scalar_weights();
    bw_ = asmb_.boundary_weights();
    vol_shape_ = asmb_.volume_shape(loads_.fvol_dir);
    trac_shape_ = asmb_.traction_shape(loads_.fsurf_dir, loads_.fsurf_sides);
    area_ = w_.sum();
    bnd_len_ = bw_.sum();
    if (!mat_.visc_damage_modulated) {
        const Vec z1 = Vec::Ones(mesh_.n_nodes());
        D_static_ = asmb_.viscosity_matrix(z1, z1).m;
    }
}

const SpMat& LedgerComputer::viscosity_lagged(const Vec& z_prev, const Vec& theta_prev) {
    if (!mat_.visc_damage_modulated) return D_static_;
    D_lagged_ = asmb_.viscosity_matrix(z_prev, theta_prev).m;
    return D_lagged_;
}

Vec LedgerComputer::load_vector(int k) const {
    const double T = loads_.horizon;
    const double fv = (k == 0) ? loads_.fvol.eval(0.0, T) : local_mean(loads_.fvol, tau_, k, T);
    const double fs = (k == 0) ? loads_.fsurf.eval(0.0, T) : local_mean(loads_.fsurf, tau_, k, T);
    return fv * vol_shape_ + fs * trac_shape_;
}

Vec LedgerComputer::heat_source(int k) const {
    const double T = loads_.horizon;
    const double H = local_mean(loads_.H, tau_, k, T);
    const double h = local_mean(loads_.hb, tau_, k, T);
    return H * w_ + h * bw_;
}

void LedgerComputer::sample_semistability(LedgerRow& r, int k, const Vec& u_frozen_full,
                                          const Vec& z) {
    const bool due = (k == 0) || (k % cfg_.tol.semistab_cadence == 0) || (k == steps_);
    if (!due) return;
    const Vec u_free = dofs_.restrict_free(u_frozen_full);
    DamageProblem p(mesh_, mat_, Ms_, w_, asmb_.elastic_strain_scale(u_free), z);
    SemistabilityOptions opt;
    opt.samples = cfg_.tol.semistab_samples;
    opt.tol_rel = cfg_.tol.semistab_rel;
    opt.seed = cfg_.run.seed + static_cast<std::uint64_t>(k);
    const SemistabilityReport rep = check_semistability(p, z, opt);
    r.semistab_residual = rep.worst_residual;
    r.semistab_pass = rep.pass;
    certs_.worst_semistab = std::min(certs_.worst_semistab, rep.worst_residual);
    certs_.semistability = certs_.semistability && rep.pass;
}

void LedgerComputer::certify(LedgerRow& r, const LedgerRow& initial_row) {
    for (double v : {r.kinetic, r.elastic, r.grad_energy, r.gamma_reg, std::abs(r.load_work),
                     r.r1_dissipation, r.viscous_dissipation, std::abs(r.coupling_work),
                     r.thermal_energy, std::abs(r.external_power), r.heat_intake})
        energy_scale_ = std::max(energy_scale_, std::abs(v));
    const double tol_energy = cfg_.tol.energy_rel * energy_scale_;

    r.mech_residual = mech_energy_residual(r, initial_row);
    r.total_residual = total_energy_residual(r, initial_row);
    r.mech_pass = (r.mech_residual >= -tol_energy);
    r.total_pass = (r.total_residual >= -tol_energy);
    r.positivity_pass = (r.theta_min >= r.theta_floor - cfg_.tol.positivity_abs);
    r.unidir_pass = (r.z_max_increase <= cfg_.tol.unidirectional_abs);

    certs_.mech_energy = certs_.mech_energy && r.mech_pass;
    certs_.total_energy = certs_.total_energy && r.total_pass;
    certs_.positivity = certs_.positivity && r.positivity_pass;
    certs_.unidirectionality = certs_.unidirectionality && r.unidir_pass;
    certs_.worst_mech = std::min(certs_.worst_mech, r.mech_residual);
    certs_.worst_total = std::min(certs_.worst_total, r.total_residual);
    certs_.worst_theta_margin = std::min(certs_.worst_theta_margin, r.theta_min - r.theta_floor);
    certs_.worst_z_increase = std::max(certs_.worst_z_increase, r.z_max_increase);
}

LedgerRow LedgerComputer::initial(const Vec& u_full, const Vec& udot_full, const Vec& z,
                                  const Vec& theta) {
    const double theta_min = theta.minCoeff();
    theta_star_eff_ =
        (cfg_.positivity.theta_star > 0.0) ? cfg_.positivity.theta_star : theta_min;
    if (!(theta_star_eff_ > 0.0) || theta_min < theta_star_eff_)
        throw ConfigError("initial temperature violates theta_0 >= theta_* > 0 "
                          "(min theta_0 = " +
                          fmt17(theta_min) + ", theta_* = " + fmt17(theta_star_eff_) + ")");
    monitor_.init(mat_.cbar(), scal_.eps, theta_star_eff_, cfg_.positivity.H_star);
    certs_.worst_theta_margin = theta_min - monitor_.floor();

    LedgerRow r;
    r.step = 0;
    r.time = 0.0;
    const Vec ud = dofs_.restrict_free(udot_full);
    const Vec u0 = dofs_.restrict_free(u_full);
    r.kinetic = 0.5 * scal_.inertia() * mat_.rho * ud.dot(Mv_ * ud);
    r.elastic = asmb_.elastic_energy(z, u0);
    r.grad_energy = damage_regularization_energy(mesh_, mat_, Ms_, w_, z);
    r.gamma_reg = tau_ * asmb_.gamma_energy(u0, cfg_.solver.gamma);
    r.load_work = -load_vector(0).dot(u0);
    r.thermal_energy = w_.dot(theta);
    r.theta_min = theta_min;
    r.theta_floor = monitor_.floor();
    r.z_max_increase = 0.0;
    sample_semistability(r, 0, u_full, z);
    certify(r, r);
    row0_ = r;
    have_row0_ = true;
    F_prev_ = load_vector(0);
    return r;
}

LedgerRow LedgerComputer::step(int k, const Vec& u_full, const Vec& u_prev_full, const Vec& z,
                               const Vec& z_prev, const Vec& theta, const Vec& theta_prev) {
    if (!have_row0_) throw ValidationError("ledger step before initial row");
    LedgerRow r;
    r.step = k;
    r.time = tau_ * k;

    const Vec u = dofs_.restrict_free(u_full);
    const Vec u_prev = dofs_.restrict_free(u_prev_full);
    const Vec udot = (u - u_prev) / tau_;
    const Vec F = load_vector(k);
    const SpMat& D = viscosity_lagged(z_prev, theta_prev);

    r.kinetic = 0.5 * scal_.inertia() * mat_.rho * udot.dot(Mv_ * udot);
    r.elastic = asmb_.elastic_energy(z, u);
    r.grad_energy = damage_regularization_energy(mesh_, mat_, Ms_, w_, z);
    r.gamma_reg = tau_ * asmb_.gamma_energy(u, cfg_.solver.gamma);
    r.load_work = -F.dot(u);

    r1_cum_ += w_.dot(z_prev - z);
    visc_cum_ += tau_ * scal_.viscosity() * udot.dot(D * udot);
    coupling_cum_ += tau_ * udot.dot(Cup_ * theta);
    extpower_cum_ += (F - F_prev_).dot(u_prev);
    const double T = loads_.horizon;
    intake_cum_ += (tau_ / scal_.heat_lhs()) * (local_mean(loads_.H, tau_, k, T) * area_ +
                                                local_mean(loads_.hb, tau_, k, T) * bnd_len_);
    r.r1_dissipation = r1_cum_;
    r.viscous_dissipation = visc_cum_;
    r.coupling_work = coupling_cum_;
    r.external_power = extpower_cum_;
    r.heat_intake = intake_cum_;
    r.thermal_energy = w_.dot(theta);

    monitor_.advance(tau_);
    r.theta_min = theta.minCoeff();
    r.theta_floor = monitor_.floor();
    r.z_max_increase = (z - z_prev).maxCoeff();

    sample_semistability(r, k, u_prev_full, z);
    certify(r, row0_);
    F_prev_ = F;
    return r;
}

// ==== run driver ============================================================

namespace {

Vec initial_nodal(const std::string& file, double constant, int n, const std::string& base_dir) {
    if (!file.empty()) return read_nodal_file(resolve_path(file, base_dir), n, 1);
    return Vec::Constant(n, constant);
}

Vec initial_vector_field(const std::string& file, const Vec2& constant, int n,
                         const std::string& base_dir) {
    if (!file.empty()) return read_nodal_file(resolve_path(file, base_dir), n, 2);
    Vec v(2 * n);
    for (int i = 0; i < n; ++i) {
        v[2 * i] = constant.x();
        v[2 * i + 1] = constant.y();
    }
    return v;
}

} // namespace

json run_summary_json(const SimConfig& cfg, const Scaling& scal, const LoadData& loads,
                      const RunResult& res, const std::string& status) {
    const CertificationSummary& c = res.certs;
    auto pf = [](bool ok) { return ok ? "PASS" : "FAIL"; };
    json j;
    j["config"] = config_echo(cfg);
    j["scaling"] = {{"eps", scal.eps}, {"beta", scal.beta}};
    j["effective_loads"] = loads_to_json(loads);
    j["status"] = status;
    j["steps_completed"] = res.steps_completed;
    j["energy_scale"] = res.energy_scale;
    j["wall_seconds"] = res.wall_seconds;
    j["timestamp"] = utc_timestamp();
    j["certifications"] = {
        {"semistability", pf(c.semistability)},   {"mech_energy", pf(c.mech_energy)},
        {"total_energy", pf(c.total_energy)},     {"positivity", pf(c.positivity)},
        {"unidirectionality", pf(c.unidirectionality)},
    };
    j["worst"] = {
        {"semistab_residual", c.worst_semistab},  {"mech_residual", c.worst_mech},
        {"total_residual", c.worst_total},        {"theta_margin", c.worst_theta_margin},
        {"z_increase", c.worst_z_increase},
    };
    j["solver"] = {{"m_final_max", res.m_final_max}, {"sweeps_total", res.sweeps_total}};
    j["initial_udot"] = std::vector<double>(res.initial_udot.data(),
                                            res.initial_udot.data() + res.initial_udot.size());
    return j;
}

namespace {

void write_artifacts(const std::string& out_dir, const SimConfig& cfg, const Scaling& scal,
                     const LoadData& loads, const Mesh2D& mesh, const RunResult& res,
                     const std::string& status) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    save_mesh(mesh, out_dir + "/mesh.txt");
    write_ledger(out_dir + "/ledger.csv", res.ledger);
    write_trajectory(out_dir + "/trajectory.csv", res.trajectory, mesh.n_nodes());
    write_json_file(out_dir + "/run.json", run_summary_json(cfg, scal, loads, res, status));
}

} // namespace

RunResult run_simulation(const SimConfig& cfg, const Mesh2D& mesh, const LoadData& loads,
                         const Scaling& scal, const std::string& out_dir) {
    const auto t_start = std::chrono::steady_clock::now();
    const int n_nodes = mesh.n_nodes();
    const double tau = cfg.time.tau();
    const DofMap dofs(mesh);
    const Assembler asmb(mesh, dofs, cfg.material, cfg.run.threads);

    // ---- initial data ----
    Vec u0_full = initial_vector_field(cfg.initial.u0_file, Vec2::Zero(), n_nodes, cfg.config_dir);
    Vec udot0_full =
        initial_vector_field(cfg.initial.udot0_file, cfg.initial.udot0, n_nodes, cfg.config_dir);
    // displacement Dirichlet data is time-constant zero, so velocities vanish there
    u0_full = dofs.expand(dofs.restrict_free(u0_full));
    udot0_full = dofs.expand(dofs.restrict_free(udot0_full));
    Vec z0 = initial_nodal(cfg.initial.z0_file, cfg.initial.z0, n_nodes, cfg.config_dir);
    Vec theta0 = initial_nodal(cfg.initial.theta0_file, cfg.initial.theta0, n_nodes, cfg.config_dir);
    for (int i = 0; i < n_nodes; ++i) {
        if (!(z0[i] >= 0.0 && z0[i] <= 1.0))
            throw ConfigError("initial damage out of [0, 1] at node " + std::to_string(i));
        if (!(theta0[i] > 0.0))
            throw ConfigError("initial temperature must be strictly positive (theta_0 >= "
                              "theta_* > 0); node " +
                              std::to_string(i) + " has theta_0 = " + fmt17(theta0[i]));
    }
    // declared uniform heat-supply bound must actually be a lower bound
    if (cfg.positivity.H_star > 0.0) {
        const double needed = scal.eps * cfg.positivity.H_star;
        for (int k = 1; k <= cfg.time.steps; ++k) {
            const double Hk = local_mean(loads.H, tau, k, loads.horizon);
            if (Hk < needed - 1e-12 * std::max(1.0, needed))
                throw ConfigError("positivity.h_star = " + fmt17(cfg.positivity.H_star) +
                                  " is not a lower bound for the heat supply at step " +
                                  std::to_string(k) + " (mean " + fmt17(Hk) + ")");
        }
    }

    // ---- static operators ----
    const SpMat Ms = asmb.scalar_mass().m;
    const SpMat Mv = asmb.vector_mass().m;
    const SpMat Cup = asmb.coupling_matrix();
    const Vec w = asmb.scalar_weights();

    LedgerComputer lc(asmb, cfg, loads, scal);
    RunResult res;
    res.initial_udot = udot0_full;

    DamageSolverOptions dopt;
    dopt.tol_rel = cfg.tol.damage_rel;
    dopt.max_iter = cfg.tol.damage_max_iter;
    CoupledOptions copt;
    copt.tol_rel = cfg.tol.solver_rel;
    copt.tol_abs_floor = cfg.tol.solver_abs;
    copt.inner_delta = cfg.tol.inner_delta;
    copt.max_sweeps = cfg.solver.max_sweeps;
    copt.max_newton = cfg.solver.max_newton;
    copt.heat_newton = cfg.solver.heat_newton;
    copt.m_start = cfg.solver.m_start;
    copt.m_factor = cfg.solver.m_factor;
    copt.m_max_rounds = cfg.solver.m_max_rounds;
    copt.linear = (cfg.solver.linear == SolverConfig::Linear::Direct)
                      ? CoupledOptions::Linear::Direct
                      : CoupledOptions::Linear::Iterative;

    auto wall = [&t_start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    // ---- state ----
    Vec u_km1 = dofs.restrict_free(u0_full);                    // u_{k-1}
    Vec u_km2 = u_km1 - tau * dofs.restrict_free(udot0_full);   // u_{k-2}; u_{-1} = u_0 - tau v_0
    Vec z = z0;
    Vec theta = theta0;

    res.ledger.push_back(lc.initial(u0_full, udot0_full, z0, theta0));
    res.trajectory.push_back({0, 0.0, u0_full, z0, theta0});
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_vtk(vtk_name(out_dir, 0), mesh, u0_full, z0, theta0);
    }

    try {
        if (cfg.run.strict && !res.ledger.back().positivity_pass) {
            res.aborted_strict = true;
        }
        if (cfg.run.strict && res.ledger.back().semistab_pass &&
            !*res.ledger.back().semistab_pass) {
            res.aborted_strict = true;
        }
        for (int k = 1; k <= cfg.time.steps && !res.aborted_strict; ++k) {
            // damage minimization at frozen displacement u_{k-1}
            DamageProblem dp(mesh, cfg.material, Ms, w, asmb.elastic_strain_scale(u_km1), z);
            DamageResult dres = minimize_damage(dp, dopt);
            if (!dres.converged)
                throw StepFailure(k, "damage minimization did not converge (pg residual " +
                                         fmt17(dres.pg_residual) + ")");
            const Vec z_new = dres.z;

            // coupled momentum + heat at z_k
            const SpMat K = asmb.elastic_stiffness(z_new).m;
            const SpMat& D = lc.viscosity_lagged(z, theta);
            CoupledInputs in;
            in.Mv = &Mv;
            in.Ms = &Ms;
            in.D = &D;
            in.K = &K;
            in.Cup = &Cup;
            in.F = lc.load_vector(k);
            in.heat_source = lc.heat_source(k);
            in.u_prev = u_km1;
            in.u_prev2 = u_km2;
            in.theta_prev = theta;
            in.z_curr = z_new;
            in.z_prev = z;
            in.tau = tau;
            in.gamma = cfg.solver.gamma;
            in.rho = cfg.material.rho;
            in.scal = scal;
            CoupledResult cres = solve_coupled(asmb, in, copt, k);
            res.m_final_max = std::max(res.m_final_max, cres.m_final);
            res.sweeps_total += cres.sweeps;

            const Vec u_full = dofs.expand(cres.u);
            const Vec& u_prev_full = res.trajectory.back().u;
            LedgerRow row =
                lc.step(k, u_full, u_prev_full, z_new, z, cres.theta, theta);
            res.ledger.push_back(row);
            res.trajectory.push_back({k, row.time, u_full, z_new, cres.theta});
            res.steps_completed = k;
            if (!out_dir.empty() && (k % cfg.output.vtk_cadence == 0 || k == cfg.time.steps))
                write_vtk(vtk_name(out_dir, k), mesh, u_full, z_new, cres.theta);

            u_km2 = u_km1;
            u_km1 = cres.u;
            z = z_new;
            theta = cres.theta;

            const bool row_pass = row.mech_pass && row.total_pass && row.positivity_pass &&
                                  row.unidir_pass &&
                                  (!row.semistab_pass || *row.semistab_pass);
            if (cfg.run.strict && !row_pass) {
                res.aborted_strict = true;
            }
        }
    } catch (const StepFailure& e) {
        res.certs = lc.certs();
        res.energy_scale = lc.energy_scale();
        res.wall_seconds = wall();
        if (!out_dir.empty()) {
            write_artifacts(out_dir, cfg, scal, loads, mesh, res, "hard_fail");
            std::ofstream rep(out_dir + "/failure.txt");
            rep << "step " << e.step << ": " << e.what() << '\n';
            write_vtk(out_dir + "/failure_state.vtk", mesh, res.trajectory.back().u,
                      res.trajectory.back().z, res.trajectory.back().theta);
        }
        throw;
    }

    res.certs = lc.certs();
    res.energy_scale = lc.energy_scale();
    res.wall_seconds = wall();
    const std::string status = res.aborted_strict          ? "strict_abort"
                               : res.certs.all_pass()      ? "pass"
                                                           : "certification_fail";
    write_artifacts(out_dir, cfg, scal, loads, mesh, res, status);
    return res;
}

RunResult run_base(const SimConfig& cfg, const Mesh2D& mesh, const std::string& out_dir) {
    return run_simulation(cfg, mesh, cfg.loads, Scaling{}, out_dir);
}

} // namespace thermodamage
