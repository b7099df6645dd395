#include "thermodamage/config.hpp"
#include "thermodamage/output.hpp"

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace thermodamage;

namespace {

// Writes `content` to a temp config file, returns the path.
std::string write_config(const std::string& content, const char* name = "td_cfg_test.toml") {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

std::string parse_error(const std::string& content) {
    const std::string path = write_config(content);
    std::string msg;
    try {
        parse_config(path);
    } catch (const ConfigError& e) {
        msg = e.what();
    }
    std::remove(path.c_str());
    REQUIRE_FALSE(msg.empty());
    return msg;
}

} // namespace

// ==== parsing ===============================================================

TEST_CASE("empty config parses to defaults") {
    const std::string path = write_config("# nothing but a comment\n");
    SimConfig cfg = parse_config(path);
    std::remove(path.c_str());
    CHECK(cfg.mesh.source == MeshConfig::Source::Generated);
    CHECK(cfg.mesh.n == 16);
    CHECK(cfg.mesh.dirichlet_sides == std::set<Side>{Side::Left});
    CHECK(cfg.time.horizon == 1.0);
    CHECK(cfg.time.steps == 50);
    CHECK(cfg.material.mu == 1.0);
    CHECK(cfg.material.kappa == 1.5);
    CHECK(cfg.initial.z0 == 1.0);
    CHECK(cfg.initial.theta0 == 1.0);
    CHECK(cfg.solver.gamma == 5.0);
    CHECK(cfg.run.seed == 12345);
    CHECK(cfg.run.threads == 1);
}

TEST_CASE("representative config lands in every section") {
    const std::string path = write_config(
        "[mesh]\n"
        "source = \"generated\"\n"
        "n = 8\n"
        "dirichlet = [\"left\", \"right\"]\n"
        "\n"
        "[time]\n"
        "horizon = 2.0\n"
        "steps = 10\n"
        "\n"
        "[material]\n"
        "lambda = 2.0\n"
        "mu = 1.5\n"
        "delta_at = 0.2\n"
        "visc_mu = 0.25\n"
        "coupling_b = 0.5\n"
        "k0 = 2.0\n"
        "kappa = 1.25\n"
        "w0 = 0.1\n"
        "w1 = 0.2\n"
        "w2 = 0.3\n"
        "rho = 3.0\n"
        "\n"
        "[loads]\n"
        "traction_signal = \"ramp\"\n"
        "traction_value = 0.8\n"
        "traction_dir = [1.0, 0.0]\n"
        "traction_sides = [\"right\"]\n"
        "volume_signal = \"table\"\n"
        "volume_times = [0.0, 1.0, 2.0]\n"
        "volume_values = [0.0, 1.0, 0.5]\n"
        "volume_dir = [0.0, -1.0]\n"
        "heat_signal = \"constant\"\n"
        "heat_value = 0.7\n"
        "\n"
        "[initial]\n"
        "z0 = 0.5\n"
        "theta0 = 2.0\n"
        "udot0 = [0.1, -0.2]\n"
        "\n"
        "[tolerances]\n"
        "solver_rel = 1e-9\n"
        "\n"
        "[solver]\n"
        "gamma = 4.5\n"
        "m_start = 8\n"
        "\n"
        "[positivity]\n"
        "theta_star = 0.5\n"
        "h_star = 0.7\n"
        "\n"
        "[output]\n"
        "vtk_cadence = 7\n"
        "\n"
        "[run]\n"
        "seed = 99\n"
        "threads = 2\n"
        "strict = true\n"
        "out_dir = \"out/test\"\n"
        "\n"
        "[rescaling]\n"
        "epsilons = [1.0, 0.5]\n"
        "beta = 1.5\n"
        "heat_value = 0.3\n");
    SimConfig cfg = parse_config(path);
    std::remove(path.c_str());

    CHECK(cfg.mesh.n == 8);
    CHECK(cfg.mesh.dirichlet_sides == std::set<Side>{Side::Left, Side::Right});
    CHECK(cfg.time.horizon == 2.0);
    CHECK(cfg.time.steps == 10);
    CHECK(cfg.time.tau() == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(cfg.material.lambda == 2.0);
    CHECK(cfg.material.mu == 1.5);
    CHECK(cfg.material.delta_at == 0.2);
    CHECK(cfg.material.visc_mu == 0.25);
    CHECK(cfg.material.b == 0.5);
    CHECK(cfg.material.k0 == 2.0);
    CHECK(cfg.material.kappa == 1.25);
    CHECK(cfg.material.w == std::array<double, 3>{0.1, 0.2, 0.3});
    CHECK(cfg.material.rho == 3.0);
    CHECK(cfg.loads.fsurf.kind == TimeSignal::Kind::Ramp);
    CHECK(cfg.loads.fsurf.value == 0.8);
    CHECK(cfg.loads.fsurf_dir.x() == 1.0);
    CHECK(cfg.loads.fsurf_sides == std::vector<int>{static_cast<int>(Side::Right)});
    CHECK(cfg.loads.fvol.kind == TimeSignal::Kind::Table);
    CHECK(cfg.loads.fvol.times.size() == 3);
    CHECK(cfg.loads.fvol_dir.y() == -1.0);
    CHECK(cfg.loads.H.value == 0.7);
    CHECK(cfg.loads.horizon == 2.0);
    CHECK(cfg.initial.z0 == 0.5);
    CHECK(cfg.initial.theta0 == 2.0);
    CHECK(cfg.initial.udot0.y() == -0.2);
    CHECK(cfg.tol.solver_rel == 1e-9);
    CHECK(cfg.solver.gamma == 4.5);
    CHECK(cfg.solver.m_start == 8.0);
    CHECK(cfg.positivity.theta_star == 0.5);
    CHECK(cfg.positivity.H_star == 0.7);
    CHECK(cfg.output.vtk_cadence == 7);
    CHECK(cfg.run.seed == 99);
    CHECK(cfg.run.threads == 2);
    CHECK(cfg.run.strict);
    CHECK(cfg.run.out_dir == "out/test");
    CHECK(cfg.rescaling.epsilons == std::vector<double>{1.0, 0.5});
    CHECK(cfg.rescaling.beta == 1.5);
    CHECK(cfg.rescaling.htilde.value == 0.3);
}

// ==== parser diagnostics ====================================================

TEST_CASE("parser reports unknown sections, keys, and duplicates") {
    CHECK(parse_error("[physics]\nx = 1\n").find("unknown section '[physics]'") !=
          std::string::npos);
    CHECK(parse_error("[mesh]\nresolution = 4\n").find("unknown key 'mesh.resolution'") !=
          std::string::npos);
    CHECK(parse_error("[time]\nsteps = 5\nsteps = 6\n").find("duplicate key 'time.steps'") !=
          std::string::npos);
    CHECK(parse_error("[mesh]\nn = \"many\"\n").find("mesh.n") != std::string::npos);
}

TEST_CASE("validation failures carry the offending field") {
    CHECK(parse_error("[initial]\ntheta0 = 0.0\n").find("theta_* > 0") != std::string::npos);
    CHECK(parse_error("[loads]\nheat_signal = \"constant\"\nheat_value = -1\n")
              .find("must be >= 0") != std::string::npos);
    CHECK(parse_error("[solver]\ngamma = 4.0\n").find("solver.gamma") != std::string::npos);
    CHECK(parse_error("[rescaling]\nepsilons = [1.0, 0.0]\n").find("(0, 1]") !=
          std::string::npos);
    CHECK(parse_error("[rescaling]\nbeta = -1\n").find("rescaling.beta") != std::string::npos);
    CHECK(parse_error("[time]\nsteps = 0\n").find("time.steps") != std::string::npos);
    CHECK(parse_error("[initial]\nz0 = 1.5\n").find("[0, 1]") != std::string::npos);
    CHECK(parse_error("[output]\nvtk_cadence = 0\n").find("output.vtk_cadence") !=
          std::string::npos);
}

TEST_CASE("side selectors require a generated mesh") {
    const std::string msg = parse_error(
        "[mesh]\nsource = \"file\"\npath = \"whatever.txt\"\n"
        "[loads]\ntraction_signal = \"ramp\"\ntraction_value = 1\n"
        "traction_dir = [1, 0]\ntraction_sides = [\"right\"]\n");
    CHECK(msg.find("traction_sides") != std::string::npos);
    CHECK(msg.find("side tags") != std::string::npos);
}

TEST_CASE("times/values keys demand a table signal") {
    const std::string msg =
        parse_error("[loads]\nvolume_signal = \"ramp\"\nvolume_value = 1\n"
                    "volume_dir = [1, 0]\nvolume_times = [0, 1]\nvolume_values = [0, 1]\n");
    CHECK(msg.find("volume_times/_values") != std::string::npos);
    CHECK(msg.find("table") != std::string::npos);
}

TEST_CASE("table signals are validated at parse time") {
    const std::string msg =
        parse_error("[loads]\nheat_signal = \"table\"\nheat_times = [0, 0]\n"
                    "heat_values = [1, 1]\n");
    CHECK(msg.find("strictly increasing") != std::string::npos);
}

// ==== nodal files ===========================================================

TEST_CASE("read_nodal_file parses per-node rows") {
    const std::string path = write_config("1 2\n3 4\n5 6\n", "td_nodal.txt");
    Vec v = read_nodal_file(path, 3, 2);
    std::remove(path.c_str());
    REQUIRE(v.size() == 6);
    CHECK(v[0] == 1.0);
    CHECK(v[5] == 6.0);
}

TEST_CASE("read_nodal_file rejects shape mismatches") {
    const std::string short_path = write_config("1\n2\n", "td_nodal_short.txt");
    CHECK_THROWS_AS(read_nodal_file(short_path, 3, 1), IoError);
    std::remove(short_path.c_str());

    const std::string wide_path = write_config("1 2 3\n", "td_nodal_wide.txt");
    CHECK_THROWS_AS(read_nodal_file(wide_path, 1, 2), IoError);
    std::remove(wide_path.c_str());

    CHECK_THROWS_AS(read_nodal_file("/nonexistent/td_nodal.txt", 1, 1), IoError);
}

// ==== echo round trip =======================================================

TEST_CASE("config echo round trips through json") {
    const std::string path = write_config(
        "[mesh]\nn = 4\ndirichlet = [\"left\", \"top\"]\n"
        "[time]\nhorizon = 0.5\nsteps = 5\n"
        "[material]\nkappa = 1.2\nvisc_damage_modulated = true\n"
        "[loads]\nvolume_signal = \"table\"\nvolume_times = [0, 0.5]\n"
        "volume_values = [0, 2]\nvolume_dir = [0.5, 0.5]\n"
        "[positivity]\ntheta_star = 0.25\n"
        "[run]\nseed = 7\nout_dir = \"z\"\n");
    SimConfig cfg = parse_config(path);
    std::remove(path.c_str());

    SimConfig back = config_from_echo(config_echo(cfg));
    CHECK(back.mesh.n == cfg.mesh.n);
    CHECK(back.mesh.dirichlet_sides == cfg.mesh.dirichlet_sides);
    CHECK(back.time.horizon == cfg.time.horizon);
    CHECK(back.time.steps == cfg.time.steps);
    CHECK(back.material.kappa == cfg.material.kappa);
    CHECK(back.material.visc_damage_modulated == cfg.material.visc_damage_modulated);
    CHECK(back.loads.fvol.kind == cfg.loads.fvol.kind);
    CHECK(back.loads.fvol.times == cfg.loads.fvol.times);
    CHECK(back.loads.fvol.values == cfg.loads.fvol.values);
    CHECK(back.loads.fvol_dir.x() == cfg.loads.fvol_dir.x());
    CHECK(back.positivity.theta_star == cfg.positivity.theta_star);
    CHECK(back.run.seed == cfg.run.seed);
    CHECK(back.run.out_dir == cfg.run.out_dir);
    CHECK_NOTHROW(back.validate());
}

// ==== mesh building =========================================================

TEST_CASE("build_mesh produces the configured generated mesh") {
    MeshConfig mc;
    mc.n = 3;
    mc.dirichlet_sides = {Side::Bottom};
    Mesh2D mesh = build_mesh(mc, ".", false);
    CHECK(mesh.n_nodes() == 16);
    CHECK(mesh.n_triangles() == 18);
}

TEST_CASE("build_mesh resolves file paths against the config directory") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "td_cfg_meshdir";
    fs::create_directories(dir);
    Mesh2D square = generate_unit_square(2, {Side::Left});
    save_mesh(square, (dir / "m.txt").string());

    MeshConfig mc;
    mc.source = MeshConfig::Source::File;
    mc.path = "m.txt";
    Mesh2D mesh = build_mesh(mc, dir.string(), false);
    CHECK(mesh.n_nodes() == square.n_nodes());
    fs::remove_all(dir);
}
