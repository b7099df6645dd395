#include "thermodamage/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace thermodamage {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

const char* pf(bool ok) { return ok ? "PASS" : "FAIL"; }

} // namespace

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ==== ledger ================================================================

std::string ledger_header() {
    return "step,time,kinetic,elastic,grad_energy,gamma_reg,load_work,r1_dissipation,"
           "viscous_dissipation,coupling_work,thermal_energy,external_power,heat_intake,"
           "mech_residual,total_residual,theta_min,theta_floor,z_max_increase,"
           "semistab_residual,semistab_pass,positivity_pass,mech_pass,total_pass,unidir_pass";
}

std::string format_ledger_row(const LedgerRow& r) {
    std::string s = std::to_string(r.step);
    auto add = [&s](const std::string& v) {
        s += ',';
        s += v;
    };
    add(fmt17(r.time));
    add(fmt17(r.kinetic));
    add(fmt17(r.elastic));
    add(fmt17(r.grad_energy));
    add(fmt17(r.gamma_reg));
    add(fmt17(r.load_work));
    add(fmt17(r.r1_dissipation));
    add(fmt17(r.viscous_dissipation));
    add(fmt17(r.coupling_work));
    add(fmt17(r.thermal_energy));
    add(fmt17(r.external_power));
    add(fmt17(r.heat_intake));
    add(fmt17(r.mech_residual));
    add(fmt17(r.total_residual));
    add(fmt17(r.theta_min));
    add(fmt17(r.theta_floor));
    add(fmt17(r.z_max_increase));
    add(r.semistab_residual ? fmt17(*r.semistab_residual) : "");
    add(r.semistab_pass ? pf(*r.semistab_pass) : "");
    add(pf(r.positivity_pass));
    add(pf(r.mech_pass));
    add(pf(r.total_pass));
    add(pf(r.unidir_pass));
    return s;
}

void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows) {
    auto out = open_out(path);
    out << ledger_header() << '\n';
    for (const auto& r : rows) out << format_ledger_row(r) << '\n';
}

// ==== trajectory ============================================================

void write_trajectory(const std::string& path, const std::vector<TrajectoryFrame>& frames,
                      int n_nodes) {
    auto out = open_out(path);
    out << "# nodes " << n_nodes << '\n';
    out << "step,time,u(2n),z(n),theta(n)\n";
    for (const auto& f : frames) {
        out << f.step << ',' << fmt17(f.time);
        for (Eigen::Index i = 0; i < f.u.size(); ++i) out << ',' << fmt17(f.u[i]);
        for (Eigen::Index i = 0; i < f.z.size(); ++i) out << ',' << fmt17(f.z[i]);
        for (Eigen::Index i = 0; i < f.theta.size(); ++i) out << ',' << fmt17(f.theta[i]);
        out << '\n';
    }
}

std::vector<TrajectoryFrame> read_trajectory(const std::string& path, int* n_nodes_out) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# nodes ", 0) != 0)
        throw IoError(path + ": missing '# nodes' header");
    int n = std::stoi(line.substr(8));
    if (n < 1) throw IoError(path + ": invalid node count");
    if (n_nodes_out) *n_nodes_out = n;
    if (!std::getline(in, line)) throw IoError(path + ": missing column header");

    std::vector<TrajectoryFrame> frames;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        TrajectoryFrame f;
        f.u.resize(2 * n);
        f.z.resize(n);
        f.theta.resize(n);
        std::istringstream ls(line);
        std::string tok;
        auto next = [&]() -> double {
            if (!std::getline(ls, tok, ','))
                throw IoError(path + ":" + std::to_string(lineno) + ": truncated row");
            return std::stod(tok);
        };
        f.step = static_cast<int>(next());
        f.time = next();
        for (int i = 0; i < 2 * n; ++i) f.u[i] = next();
        for (int i = 0; i < n; ++i) f.z[i] = next();
        for (int i = 0; i < n; ++i) f.theta[i] = next();
        if (std::getline(ls, tok, ','))
            throw IoError(path + ":" + std::to_string(lineno) + ": trailing columns");
        frames.push_back(std::move(f));
    }
    if (frames.empty()) throw IoError(path + ": no frames");
    return frames;
}

// ==== VTK ===================================================================

void write_vtk(const std::string& path, const Mesh2D& mesh, const Vec& u_full, const Vec& z,
               const Vec& theta) {
    const int n = mesh.n_nodes();
    const int m = mesh.n_triangles();
    auto out = open_out(path);
    out << "# vtk DataFile Version 2.0\n";
    out << "thermodamage snapshot\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (int i = 0; i < n; ++i)
        out << fmt17(mesh.nodes[i].x()) << ' ' << fmt17(mesh.nodes[i].y()) << " 0\n";
    out << "CELLS " << m << ' ' << 4 * m << '\n';
    for (int t = 0; t < m; ++t)
        out << "3 " << mesh.triangles[t][0] << ' ' << mesh.triangles[t][1] << ' '
            << mesh.triangles[t][2] << '\n';
    out << "CELL_TYPES " << m << '\n';
    for (int t = 0; t < m; ++t) out << "5\n";
    out << "POINT_DATA " << n << '\n';
    out << "VECTORS displacement double\n";
    for (int i = 0; i < n; ++i)
        out << fmt17(u_full[2 * i]) << ' ' << fmt17(u_full[2 * i + 1]) << " 0\n";
    out << "SCALARS damage double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << fmt17(z[i]) << '\n';
    out << "SCALARS temperature double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < n; ++i) out << fmt17(theta[i]) << '\n';
}

// ==== config echo ===========================================================

namespace {

json signal_to_json(const TimeSignal& s) {
    json j;
    switch (s.kind) {
        case TimeSignal::Kind::Constant: j["kind"] = "constant"; j["value"] = s.value; break;
        case TimeSignal::Kind::Ramp: j["kind"] = "ramp"; j["value"] = s.value; break;
        case TimeSignal::Kind::Table:
            j["kind"] = "table";
            j["times"] = s.times;
            j["values"] = s.values;
            break;
    }
    return j;
}

TimeSignal signal_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return TimeSignal::constant(j.at("value").get<double>());
    if (kind == "ramp") return TimeSignal::ramp(j.at("value").get<double>());
    TimeSignal s;
    s.kind = TimeSignal::Kind::Table;
    s.times = j.at("times").get<std::vector<double>>();
    s.values = j.at("values").get<std::vector<double>>();
    s.validate("trajectory signal");
    return s;
}

json sides_to_json(const std::set<Side>& sides) {
    json arr = json::array();
    for (Side s : sides) arr.push_back(side_to_string(s));
    return arr;
}

std::set<Side> sides_from_json(const json& arr) {
    std::set<Side> out;
    for (const auto& s : arr) out.insert(side_from_string(s.get<std::string>()));
    return out;
}

} // namespace

json loads_to_json(const LoadData& l) {
    return json{
        {"volume_dir", {l.fvol_dir.x(), l.fvol_dir.y()}},
        {"volume", signal_to_json(l.fvol)},
        {"traction_dir", {l.fsurf_dir.x(), l.fsurf_dir.y()}},
        {"traction", signal_to_json(l.fsurf)},
        {"traction_sides", l.fsurf_sides},
        {"heat", signal_to_json(l.H)},
        {"flux", signal_to_json(l.hb)},
    };
}

LoadData loads_from_json(const json& j, double horizon) {
    LoadData l;
    l.fvol_dir = Vec2(j.at("volume_dir").at(0).get<double>(), j.at("volume_dir").at(1).get<double>());
    l.fvol = signal_from_json(j.at("volume"));
    l.fsurf_dir =
        Vec2(j.at("traction_dir").at(0).get<double>(), j.at("traction_dir").at(1).get<double>());
    l.fsurf = signal_from_json(j.at("traction"));
    l.fsurf_sides = j.at("traction_sides").get<std::vector<int>>();
    l.H = signal_from_json(j.at("heat"));
    l.hb = signal_from_json(j.at("flux"));
    l.horizon = horizon;
    return l;
}

json config_echo(const SimConfig& cfg) {
    json j;
    j["mesh"] = {
        {"source", cfg.mesh.source == MeshConfig::Source::Generated ? "generated" : "file"},
        {"n", cfg.mesh.n},
        {"dirichlet", sides_to_json(cfg.mesh.dirichlet_sides)},
        {"path", cfg.mesh.path},
        {"repair_orientation", cfg.mesh.repair_orientation},
    };
    j["time"] = {{"horizon", cfg.time.horizon}, {"steps", cfg.time.steps}};
    const MaterialLaws& m = cfg.material;
    j["material"] = {
        {"lambda", m.lambda},
        {"mu", m.mu},
        {"delta_at", m.delta_at},
        {"visc_lambda", m.visc_lambda},
        {"visc_mu", m.visc_mu},
        {"visc_damage_modulated", m.visc_damage_modulated},
        {"coupling_b", m.b},
        {"k0", m.k0},
        {"kappa", m.kappa},
        {"grad_exponent", m.q},
        {"grad_coefficient", m.g1},
        {"w", {m.w[0], m.w[1], m.w[2]}},
        {"rho", m.rho},
    };
    j["loads"] = loads_to_json(cfg.loads);
    j["initial"] = {
        {"z0", cfg.initial.z0},
        {"theta0", cfg.initial.theta0},
        {"udot0", {cfg.initial.udot0.x(), cfg.initial.udot0.y()}},
        {"u0_file", cfg.initial.u0_file},
        {"udot0_file", cfg.initial.udot0_file},
        {"z0_file", cfg.initial.z0_file},
        {"theta0_file", cfg.initial.theta0_file},
    };
    const ToleranceConfig& t = cfg.tol;
    j["tolerances"] = {
        {"energy_rel", t.energy_rel},
        {"solver_rel", t.solver_rel},
        {"solver_abs", t.solver_abs},
        {"inner_delta", t.inner_delta},
        {"damage_rel", t.damage_rel},
        {"damage_max_iter", t.damage_max_iter},
        {"semistab_rel", t.semistab_rel},
        {"semistab_samples", t.semistab_samples},
        {"semistab_cadence", t.semistab_cadence},
        {"positivity_abs", t.positivity_abs},
        {"unidirectional_abs", t.unidirectional_abs},
    };
    const SolverConfig& so = cfg.solver;
    j["solver"] = {
        {"gamma", so.gamma},
        {"m_start", so.m_start},
        {"m_factor", so.m_factor},
        {"m_max_rounds", so.m_max_rounds},
        {"heat_newton", so.heat_newton},
        {"linear", so.linear == SolverConfig::Linear::Direct ? "direct" : "iterative"},
        {"max_sweeps", so.max_sweeps},
        {"max_newton", so.max_newton},
    };
    j["positivity"] = {{"theta_star", cfg.positivity.theta_star}, {"h_star", cfg.positivity.H_star}};
    j["output"] = {{"vtk_cadence", cfg.output.vtk_cadence}};
    j["run"] = {
        {"seed", cfg.run.seed},
        {"threads", cfg.run.threads},
        {"strict", cfg.run.strict},
        {"out_dir", cfg.run.out_dir},
    };
    j["rescaling"] = {
        {"epsilons", cfg.rescaling.epsilons},
        {"beta", cfg.rescaling.beta},
        {"heat", signal_to_json(cfg.rescaling.htilde)},
        {"flux", signal_to_json(cfg.rescaling.htilde_b)},
    };
    return j;
}

SimConfig config_from_echo(const json& j) {
    SimConfig cfg;
    const json& jm = j.at("mesh");
    cfg.mesh.source = jm.at("source").get<std::string>() == "generated"
                          ? MeshConfig::Source::Generated
                          : MeshConfig::Source::File;
    cfg.mesh.n = jm.at("n").get<int>();
    cfg.mesh.dirichlet_sides = sides_from_json(jm.at("dirichlet"));
    cfg.mesh.path = jm.at("path").get<std::string>();
    cfg.mesh.repair_orientation = jm.at("repair_orientation").get<bool>();

    cfg.time.horizon = j.at("time").at("horizon").get<double>();
    cfg.time.steps = j.at("time").at("steps").get<int>();

    const json& ma = j.at("material");
    MaterialLaws& m = cfg.material;
    m.lambda = ma.at("lambda").get<double>();
    m.mu = ma.at("mu").get<double>();
    m.delta_at = ma.at("delta_at").get<double>();
    m.visc_lambda = ma.at("visc_lambda").get<double>();
    m.visc_mu = ma.at("visc_mu").get<double>();
    m.visc_damage_modulated = ma.at("visc_damage_modulated").get<bool>();
    m.b = ma.at("coupling_b").get<double>();
    m.k0 = ma.at("k0").get<double>();
    m.kappa = ma.at("kappa").get<double>();
    m.q = ma.at("grad_exponent").get<double>();
    m.g1 = ma.at("grad_coefficient").get<double>();
    m.w[0] = ma.at("w").at(0).get<double>();
    m.w[1] = ma.at("w").at(1).get<double>();
    m.w[2] = ma.at("w").at(2).get<double>();
    m.rho = ma.at("rho").get<double>();

    cfg.loads = loads_from_json(j.at("loads"), cfg.time.horizon);

    const json& in = j.at("initial");
    cfg.initial.z0 = in.at("z0").get<double>();
    cfg.initial.theta0 = in.at("theta0").get<double>();
    cfg.initial.udot0 = Vec2(in.at("udot0").at(0).get<double>(), in.at("udot0").at(1).get<double>());
    cfg.initial.u0_file = in.at("u0_file").get<std::string>();
    cfg.initial.udot0_file = in.at("udot0_file").get<std::string>();
    cfg.initial.z0_file = in.at("z0_file").get<std::string>();
    cfg.initial.theta0_file = in.at("theta0_file").get<std::string>();

    const json& to = j.at("tolerances");
    ToleranceConfig& t = cfg.tol;
    t.energy_rel = to.at("energy_rel").get<double>();
    t.solver_rel = to.at("solver_rel").get<double>();
    t.solver_abs = to.at("solver_abs").get<double>();
    t.inner_delta = to.at("inner_delta").get<double>();
    t.damage_rel = to.at("damage_rel").get<double>();
    t.damage_max_iter = to.at("damage_max_iter").get<int>();
    t.semistab_rel = to.at("semistab_rel").get<double>();
    t.semistab_samples = to.at("semistab_samples").get<int>();
    t.semistab_cadence = to.at("semistab_cadence").get<int>();
    t.positivity_abs = to.at("positivity_abs").get<double>();
    t.unidirectional_abs = to.at("unidirectional_abs").get<double>();

    const json& so = j.at("solver");
    cfg.solver.gamma = so.at("gamma").get<double>();
    cfg.solver.m_start = so.at("m_start").get<double>();
    cfg.solver.m_factor = so.at("m_factor").get<double>();
    cfg.solver.m_max_rounds = so.at("m_max_rounds").get<int>();
    cfg.solver.heat_newton = so.at("heat_newton").get<bool>();
    cfg.solver.linear = so.at("linear").get<std::string>() == "direct"
                            ? SolverConfig::Linear::Direct
                            : SolverConfig::Linear::Iterative;
    cfg.solver.max_sweeps = so.at("max_sweeps").get<int>();
    cfg.solver.max_newton = so.at("max_newton").get<int>();

    cfg.positivity.theta_star = j.at("positivity").at("theta_star").get<double>();
    cfg.positivity.H_star = j.at("positivity").at("h_star").get<double>();
    cfg.output.vtk_cadence = j.at("output").at("vtk_cadence").get<int>();

    const json& ru = j.at("run");
    cfg.run.seed = ru.at("seed").get<std::uint64_t>();
    cfg.run.threads = ru.at("threads").get<int>();
    cfg.run.strict = ru.at("strict").get<bool>();
    cfg.run.out_dir = ru.at("out_dir").get<std::string>();

    const json& re = j.at("rescaling");
    cfg.rescaling.epsilons = re.at("epsilons").get<std::vector<double>>();
    cfg.rescaling.beta = re.at("beta").get<double>();
    cfg.rescaling.htilde = signal_from_json(re.at("heat"));
    cfg.rescaling.htilde_b = signal_from_json(re.at("flux"));
    return cfg;
}

void write_json_file(const std::string& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
    auto in = open_in(path);
    json j;
    in >> j;
    return j;
}

std::vector<std::string> read_lines(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

} // namespace thermodamage
