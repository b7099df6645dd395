#include "thermodamage/config.hpp"
#include "thermodamage/output.hpp"
#include "thermodamage/rescaling.hpp"
#include "thermodamage/timeloop.hpp"
#include "thermodamage/verify.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <thread>

namespace td = thermodamage;

namespace {

// exit codes: 0 = success (all certifications PASS, or non-strict without a
// hard failure); 1 = certification FAIL under --strict (and verify FAIL);
// 2 = hard failure (config/parse error, solver divergence, I/O).
constexpr int kExitPass = 0;
constexpr int kExitCertFail = 1;
constexpr int kExitHard = 2;

struct CommonFlags {
    bool strict = false;
    int threads = -1;       // -1 = not given
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_flag("--strict", f.strict, "abort and exit 1 on the first certification FAIL");
    cmd->add_option("--threads", f.threads, "assembly threads (0 = hardware)");
    cmd->add_option("--output", f.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", f.seed, "random seed (overrides config)")
        ->each([&f](const std::string&) { f.seed_given = true; });
}

void apply_overrides(td::SimConfig& cfg, const CommonFlags& f) {
    if (f.strict) cfg.run.strict = true;
    if (f.threads >= 0) {
        cfg.run.threads = f.threads;
    } else if (const char* env = std::getenv("THERMODAMAGE_THREADS")) {
        cfg.run.threads = std::max(0, std::atoi(env));
    }
    if (cfg.run.threads == 0)
        cfg.run.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (!f.out_dir.empty()) cfg.run.out_dir = f.out_dir;
    if (f.seed_given) cfg.run.seed = f.seed;
}

void print_certifications(const td::CertificationSummary& c) {
    auto pf = [](bool ok) { return ok ? "PASS" : "FAIL"; };
    std::cout << "semistability:      " << pf(c.semistability)
              << "  (worst sampled residual " << td::fmt17(c.worst_semistab) << ")\n"
              << "mech_energy:        " << pf(c.mech_energy) << "  (worst residual "
              << td::fmt17(c.worst_mech) << ")\n"
              << "total_energy:       " << pf(c.total_energy) << "  (worst residual "
              << td::fmt17(c.worst_total) << ")\n"
              << "positivity:         " << pf(c.positivity) << "  (worst margin "
              << td::fmt17(c.worst_theta_margin) << ")\n"
              << "unidirectionality:  " << pf(c.unidirectionality) << "  (max increase "
              << td::fmt17(c.worst_z_increase) << ")\n";
}

int cmd_run(const std::string& config_path, const CommonFlags& flags) {
    td::SimConfig cfg = td::parse_config(config_path);
    apply_overrides(cfg, flags);
    td::Mesh2D mesh = td::build_mesh(cfg.mesh, cfg.config_dir, cfg.run.strict);
    td::RunResult res = td::run_base(cfg, mesh, cfg.run.out_dir);
    print_certifications(res.certs);
    const bool pass = res.certs.all_pass() && !res.aborted_strict;
    std::cout << "status: "
              << (res.aborted_strict ? "strict_abort" : pass ? "pass" : "certification_fail")
              << "  (" << res.steps_completed << " steps, " << td::fmt17(res.wall_seconds)
              << " s)\n"
              << "output: " << cfg.run.out_dir << "\n";
    if (cfg.run.strict && !pass) return kExitCertFail;
    return kExitPass;
}

int cmd_sweep(const std::string& config_path, const CommonFlags& flags) {
    td::SimConfig cfg = td::parse_config(config_path);
    apply_overrides(cfg, flags);
    td::SweepReport rep = td::sweep_eps(cfg, cfg.run.out_dir);
    bool any_fail = false;
    for (const td::SweepRow& row : rep.rows) {
        std::cout << "eps " << td::fmt17(row.eps) << ": certifications "
                  << (row.all_pass ? "PASS" : "FAIL") << ", |grad theta| "
                  << td::fmt17(row.diag.grad_theta_l2) << ", ode residual(T) "
                  << td::fmt17(row.diag.ode_residual.back()) << "\n";
        any_fail = any_fail || !row.all_pass;
    }
    std::cout << "slopes: grad_theta " << td::fmt17(rep.slope_grad_theta)
              << ", eps_strain_rate " << td::fmt17(rep.slope_eps_strain_rate)
              << ", spatial_defect " << td::fmt17(rep.slope_spatial_defect)
              << ", ode_residual " << td::fmt17(rep.slope_ode_residual) << "\n"
              << "output: " << cfg.run.out_dir << "/sweep_report.csv\n";
    if (cfg.run.strict && any_fail) return kExitCertFail;
    return kExitPass;
}

int cmd_verify(const std::string& run_dir) {
    td::VerifyReport rep = td::verify_run(run_dir);
    print_certifications(rep.certs);
    if (!rep.ledger_match)
        std::cout << "ledger: MISMATCH at ledger.csv:" << rep.first_mismatch_line << "\n";
    std::cout << "verify: " << rep.message << "\n";
    return rep.pass ? kExitPass : kExitCertFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermodamage: rate-independent damage in thermo-viscoelastic solids"};
    app.require_subcommand(1);

    std::string config_path, run_dir;
    CommonFlags flags;

    CLI::App* run_cmd = app.add_subcommand("run", "run a configured simulation");
    run_cmd->add_option("config", config_path, "config file")->required();
    add_common(run_cmd, flags);

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep-eps", "run the vanishing-viscosity/inertia sweep");
    sweep_cmd->add_option("config", config_path, "config file")->required();
    add_common(sweep_cmd, flags);

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "re-check all certifications from a stored run");
    verify_cmd->add_option("run_dir", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, flags);
        if (sweep_cmd->parsed()) return cmd_sweep(config_path, flags);
        if (verify_cmd->parsed()) return cmd_verify(run_dir);
    } catch (const td::StepFailure& e) {
        std::cerr << "hard failure: " << e.what() << "\n";
        return kExitHard;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHard;
    }
    return kExitHard;
}
