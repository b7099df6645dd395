#pragma once

#include "thermodamage/config.hpp"
#include "thermodamage/mesh.hpp"
#include "thermodamage/types.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thermodamage {

using nlohmann::json;

// ==== energy ledger rows ====================================================
//
// One row per completed step (plus step 0). All energies are instantaneous
// unless named *_cum or described as dissipation/work/intake, which are
// cumulative from t = 0. Residuals are inequality slacks: nonnegative up to
// tolerance when the corresponding discrete estimate holds.

struct LedgerRow {
    int step = 0;
    double time = 0.0;
    double kinetic = 0.0;              // (1/2) rho_eff int |u_dot|^2
    double elastic = 0.0;              // (1/2) int C(z) e(u):e(u)
    double grad_energy = 0.0;          // int g1 |grad z|^q + W(z)
    double gamma_reg = 0.0;            // (tau/gamma) int |e(u)|^gamma
    double load_work = 0.0;            // -<f_k, u_k>
    double r1_dissipation = 0.0;       // cumulative int (z_0 - z_k)
    double viscous_dissipation = 0.0;  // cumulative tau int D e(du/tau):e(du/tau), >= 0
    double coupling_work = 0.0;        // cumulative tau int theta B : e(du/tau)
    double thermal_energy = 0.0;       // int theta_k
    double external_power = 0.0;       // cumulative tau <f_dot, u>
    double heat_intake = 0.0;          // cumulative tau (int H + bdry h)
    double mech_residual = 0.0;
    double total_residual = 0.0;
    double theta_min = 0.0;            // min nodal temperature
    double theta_floor = 0.0;          // certified lower bound v_k
    double z_max_increase = 0.0;       // max_i (z_k - z_{k-1})_i, <= 0 when unidirectional
    std::optional<double> semistab_residual;  // worst sampled competitor slack
    std::optional<bool> semistab_pass;
    bool positivity_pass = true;
    bool mech_pass = true;
    bool total_pass = true;
    bool unidir_pass = true;
};

std::string ledger_header();
std::string format_ledger_row(const LedgerRow& r);
void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows);

// ==== trajectory ============================================================
//
// Full solver state per step, sufficient to re-run every certification
// without re-solving: step, time, u (2N full dofs), z (N), theta (N).

struct TrajectoryFrame {
    int step = 0;
    double time = 0.0;
    Vec u;      // full displacement vector (Dirichlet dofs included)
    Vec z;
    Vec theta;
};

void write_trajectory(const std::string& path, const std::vector<TrajectoryFrame>& frames,
                      int n_nodes);
std::vector<TrajectoryFrame> read_trajectory(const std::string& path, int* n_nodes_out = nullptr);

// ==== VTK snapshots =========================================================

void write_vtk(const std::string& path, const Mesh2D& mesh, const Vec& u_full, const Vec& z,
               const Vec& theta);

// ==== run metadata ==========================================================

json config_echo(const SimConfig& cfg);
SimConfig config_from_echo(const json& j);

// Effective load set of a run (rescaled runs carry scaled heat data).
json loads_to_json(const LoadData& loads);
LoadData loads_from_json(const json& j, double horizon);

void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

std::vector<std::string> read_lines(const std::string& path);

// 17-significant-digit decimal, round-trip exact for double.
std::string fmt17(double v);

} // namespace thermodamage
