#pragma once

#include "thermodamage/loads.hpp"
#include "thermodamage/material.hpp"
#include "thermodamage/mesh.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace thermodamage {

// ==== configuration =========================================================
//
// One human-readable key-value file with flat [section] blocks mirroring the
// modules. Unknown sections or keys are rejected. See configs/reference.toml
// for the full key set.

struct MeshConfig {
    enum class Source { Generated, File } source = Source::Generated;
    int n = 16;
    std::set<Side> dirichlet_sides = {Side::Left};
    std::string path;                // when source = File
    bool repair_orientation = true;  // repair clockwise triangles with a warning
};

struct TimeConfig {
    double horizon = 1.0;
    int steps = 50;
    double tau() const { return horizon / steps; }
};

struct InitialConfig {
    double z0 = 1.0;
    double theta0 = 1.0;
    Vec2 udot0 = Vec2::Zero();
    std::string u0_file, udot0_file, z0_file, theta0_file;  // optional nodal files
};

struct ToleranceConfig {
    double energy_rel = 1e-8;        // energy-inequality residual tolerance factor
    double solver_rel = 1e-10;       // coupled-solve residual, vs first iterate
    double solver_abs = 1e-11;       // floor factor, scaled by 1 + |rhs|
    double inner_delta = 1e-11;
    double damage_rel = 1e-8;        // projected-gradient residual factor
                                     // (sqrt(eps_mach): precision limit for an
                                     //  O(1) objective in double arithmetic)
    int damage_max_iter = 10000;
    double semistab_rel = 1e-8;
    int semistab_samples = 100;
    int semistab_cadence = 5;        // every k-th step, plus the final step
    double positivity_abs = 1e-10;
    double unidirectional_abs = 1e-14;
};

struct SolverConfig {
    double gamma = 5.0;              // strain regularization exponent, > 4
    double m_start = 16.0;           // truncation continuation schedule
    double m_factor = 2.0;
    int m_max_rounds = 40;
    bool heat_newton = false;
    enum class Linear { Direct, Iterative } linear = Linear::Direct;
    int max_sweeps = 200;
    int max_newton = 50;
};

struct PositivityConfig {
    double theta_star = 0.0;  // 0 = derive from initial temperature minimum
    double H_star = 0.0;      // uniform lower bound on the heat supply (enhanced floor)
};

struct OutputConfig {
    int vtk_cadence = 5;  // VTK snapshot every k-th step, plus the final step
};

struct RescalingConfig {
    std::vector<double> epsilons = {1.0, 0.5, 0.25, 0.125};
    double beta = 2.0;
    // limit sources: the per-run data is H_eps = eps * htilde, h_eps = eps * htilde_b
    TimeSignal htilde = TimeSignal::constant(0.0);
    TimeSignal htilde_b = TimeSignal::constant(0.0);
};

struct RunMeta {
    std::uint64_t seed = 12345;
    int threads = 1;
    bool strict = false;
    std::string out_dir = "out";
};

struct SimConfig {
    MeshConfig mesh;
    TimeConfig time;
    MaterialLaws material;
    LoadData loads;
    InitialConfig initial;
    ToleranceConfig tol;
    SolverConfig solver;
    PositivityConfig positivity;
    OutputConfig output;
    RescalingConfig rescaling;
    RunMeta run;
    std::string config_dir;  // directory of the source file (for nodal-file paths)

    void validate() const;   // static checks; state-dependent ones run in the driver
};

SimConfig parse_config(const std::string& path);

// Build the mesh described by the config (generated or loaded+validated).
Mesh2D build_mesh(const MeshConfig& mc, const std::string& config_dir, bool strict);

// Read a nodal data file (`components` values per line, one line per node).
Vec read_nodal_file(const std::string& path, int n_nodes, int components);

} // namespace thermodamage
