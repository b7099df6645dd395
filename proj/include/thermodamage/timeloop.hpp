#pragma once

#include "thermodamage/assembly.hpp"
#include "thermodamage/config.hpp"
#include "thermodamage/coupled.hpp"
#include "thermodamage/damage.hpp"
#include "thermodamage/output.hpp"

#include <memory>
#include <string>
#include <vector>

namespace thermodamage {

// ==== certifications ========================================================

struct CertificationSummary {
    bool semistability = true;
    bool mech_energy = true;
    bool total_energy = true;
    bool positivity = true;
    bool unidirectionality = true;

    double worst_semistab = 0.0;      // most negative sampled competitor residual
    double worst_mech = 0.0;          // most negative mechanical-energy residual
    double worst_total = 0.0;         // most negative total-energy residual
    double worst_theta_margin = 0.0;  // min over steps of (min theta - floor)
    double worst_z_increase = 0.0;    // max over steps of max (z_k - z_{k-1})

    bool all_pass() const {
        return semistability && mech_energy && total_energy && positivity && unidirectionality;
    }
    std::string failed_names() const;  // comma-separated, empty when all pass
};

// ==== ledger computation ====================================================
//
// Everything in a ledger row derives from the state trajectory, the load
// data, and the scaling -- no solver internals. The live run and the verify
// re-check share this class, so a verified ledger is byte-identical.

class LedgerComputer {
  public:
    LedgerComputer(const Assembler& asmb, const SimConfig& cfg, const LoadData& loads,
                   const Scaling& scal);

    // Row for step 0. Establishes theta_star_eff and the floor sequence.
    LedgerRow initial(const Vec& u_full, const Vec& udot_full, const Vec& z, const Vec& theta);
    // Row for step k >= 1; previous state must be the exact stored state.
    LedgerRow step(int k, const Vec& u_full, const Vec& u_prev_full, const Vec& z,
                   const Vec& z_prev, const Vec& theta, const Vec& theta_prev);

    // Assembled load vector (free dofs): instantaneous at k = 0, local mean else.
    Vec load_vector(int k) const;
    // Assembled heat supply Q_H + Q_h (node space), local mean over step k.
    Vec heat_source(int k) const;

    const CertificationSummary& certs() const { return certs_; }
    double energy_scale() const { return energy_scale_; }
    double theta_star_eff() const { return theta_star_eff_; }
    const SpMat& viscosity_lagged(const Vec& z_prev, const Vec& theta_prev);

  private:
    friend struct LedgerAccess;
    double stored_energy_sum(const LedgerRow& r) const;
    void certify(LedgerRow& r, const LedgerRow& initial_row);
    void sample_semistability(LedgerRow& r, int k, const Vec& u_frozen_full, const Vec& z);

    const Assembler& asmb_;
    const Mesh2D& mesh_;
    const DofMap& dofs_;
    const MaterialLaws& mat_;
    SimConfig cfg_;
    LoadData loads_;
    Scaling scal_;
    double tau_;
    int steps_;

    SpMat Ms_, Mv_, Cup_;
    SpMat D_static_;    // viscosity matrix when not damage-modulated
    SpMat D_lagged_;    // per-step assembly when modulated
    Vec w_, bw_;
    Vec vol_shape_, trac_shape_;
    double area_ = 0.0, bnd_len_ = 0.0;

    PositivityMonitor monitor_;
    double theta_star_eff_ = 0.0;
    double r1_cum_ = 0.0, visc_cum_ = 0.0, coupling_cum_ = 0.0;
    double extpower_cum_ = 0.0, intake_cum_ = 0.0;
    Vec F_prev_;
    LedgerRow row0_;
    bool have_row0_ = false;
    double energy_scale_ = 0.0;
    CertificationSummary certs_;
};

// Energy-inequality residuals from ledger rows (RHS minus LHS; PASS means
// residual >= -tol_energy). Exactly 0.0 when now is the initial row.
double mech_energy_residual(const LedgerRow& now, const LedgerRow& initial);
double total_energy_residual(const LedgerRow& now, const LedgerRow& initial);

// ==== run driver ============================================================

struct RunResult {
    std::vector<LedgerRow> ledger;
    std::vector<TrajectoryFrame> trajectory;
    CertificationSummary certs;
    Vec initial_udot;                  // effective nodal velocity at t = 0 (full dofs)
    int steps_completed = 0;
    double energy_scale = 0.0;
    double wall_seconds = 0.0;
    bool aborted_strict = false;       // stopped at first FAIL under strict mode
    double m_final_max = 0.0;          // largest truncation bound used
    int sweeps_total = 0;
};

// Run the full scheme on a prepared mesh with explicit loads and scaling.
// out_dir: run artifacts (ledger.csv, trajectory.csv, run.json, mesh.txt,
// VTK snapshots) land there; empty string writes nothing. Throws StepFailure
// on solver divergence (artifacts for completed steps are still written).
RunResult run_simulation(const SimConfig& cfg, const Mesh2D& mesh, const LoadData& loads,
                         const Scaling& scal, const std::string& out_dir);

// Convenience: base (unscaled) run with the config's own loads.
RunResult run_base(const SimConfig& cfg, const Mesh2D& mesh, const std::string& out_dir);

// The run.json payload shared by live runs and failure dumps.
json run_summary_json(const SimConfig& cfg, const Scaling& scal, const LoadData& loads,
                      const RunResult& res, const std::string& status);

} // namespace thermodamage
