#pragma once

#include "thermodamage/timeloop.hpp"

#include <string>

namespace thermodamage {

// ==== post-hoc verification =================================================
//
// Re-derives every ledger row and certification from the stored trajectory
// (no re-solving) using the same LedgerComputer the live run used, then
// byte-compares the regenerated ledger against the stored ledger.csv.

struct VerifyReport {
    bool pass = false;                 // all certifications hold and ledger matches
    CertificationSummary certs;        // recomputed from the trajectory
    bool ledger_match = true;
    int first_mismatch_line = -1;      // 1-based line in ledger.csv, -1 if none
    int rows_checked = 0;
    std::string message;               // human-readable verdict
};

VerifyReport verify_run(const std::string& run_dir);

} // namespace thermodamage
