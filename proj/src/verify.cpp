#include "thermodamage/verify.hpp"

namespace thermodamage {

VerifyReport verify_run(const std::string& run_dir) {
    const json run = read_json_file(run_dir + "/run.json");
    const SimConfig cfg = config_from_echo(run.at("config"));
    Scaling scal;
    scal.eps = run.at("scaling").at("eps").get<double>();
    scal.beta = run.at("scaling").at("beta").get<double>();
    const LoadData loads = loads_from_json(run.at("effective_loads"), cfg.time.horizon);

    Mesh2D mesh = (cfg.mesh.source == MeshConfig::Source::Generated)
                      ? generate_unit_square(cfg.mesh.n, cfg.mesh.dirichlet_sides)
                      : load_mesh(run_dir + "/mesh.txt");

    int n_nodes = 0;
    const std::vector<TrajectoryFrame> frames =
        read_trajectory(run_dir + "/trajectory.csv", &n_nodes);
    if (n_nodes != mesh.n_nodes())
        throw ValidationError("trajectory node count " + std::to_string(n_nodes) +
                              " does not match the mesh (" + std::to_string(mesh.n_nodes()) + ")");
    const auto udot_raw = run.at("initial_udot").get<std::vector<double>>();
    if (static_cast<int>(udot_raw.size()) != 2 * n_nodes)
        throw ValidationError("initial_udot length mismatch in run.json");
    Vec udot0 = Eigen::Map<const Vec>(udot_raw.data(), udot_raw.size());

    const DofMap dofs(mesh);
    const Assembler asmb(mesh, dofs, cfg.material, cfg.run.threads);
    LedgerComputer lc(asmb, cfg, loads, scal);

    std::vector<LedgerRow> rows;
    rows.reserve(frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        if (frames[k].step != static_cast<int>(k))
            throw ValidationError("trajectory frame " + std::to_string(k) +
                                  " carries step index " + std::to_string(frames[k].step));
        if (k == 0) {
            rows.push_back(lc.initial(frames[0].u, udot0, frames[0].z, frames[0].theta));
        } else {
            rows.push_back(lc.step(static_cast<int>(k), frames[k].u, frames[k - 1].u,
                                   frames[k].z, frames[k - 1].z, frames[k].theta,
                                   frames[k - 1].theta));
        }
    }

    VerifyReport rep;
    rep.certs = lc.certs();
    rep.rows_checked = static_cast<int>(rows.size());

    const std::vector<std::string> stored = read_lines(run_dir + "/ledger.csv");
    if (stored.empty() || stored[0] != ledger_header()) {
        rep.ledger_match = false;
        rep.first_mismatch_line = 1;
    } else if (stored.size() != rows.size() + 1) {
        rep.ledger_match = false;
        rep.first_mismatch_line = static_cast<int>(std::min(stored.size(), rows.size() + 1)) + 1;
    } else {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (stored[k + 1] != format_ledger_row(rows[k])) {
                rep.ledger_match = false;
                rep.first_mismatch_line = static_cast<int>(k) + 2;
                break;
            }
        }
    }

    rep.pass = rep.certs.all_pass() && rep.ledger_match;
    if (rep.pass) {
        rep.message = "PASS (" + std::to_string(rep.rows_checked) + " rows re-derived)";
    } else {
        std::string what = rep.certs.failed_names();
        if (!rep.ledger_match) {
            if (!what.empty()) what += ",";
            what += "ledger_mismatch at ledger.csv:" + std::to_string(rep.first_mismatch_line);
        }
        rep.message = "FAIL (" + what + ")";
    }
    return rep;
}

} // namespace thermodamage
