#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hamcg {

struct Metric {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool ok = false;
  bool timing = false;  // wall-clock budget; value left out of CSV output
};

/// Outcome of one acceptance criterion. `raw` keeps the underlying
/// measurements (for example the sampled h, T, A) so callers can apply their
/// own reference values.
struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<Metric> metrics;
  std::map<std::string, std::vector<double>> raw;
  double seconds = 0.0;
  std::string error;  // set when a solver threw; the criterion then fails
  bool pass() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  /// Smaller ensembles and grids; used by the determinism check.
  bool quick = false;
};

/// Mass and positivity bookkeeping shared by every solver run of a verify session.
struct InvariantLedger {
  double max_phase_mass_drift = 0.0;
  double max_graph_mass_drift_per_step = 0.0;
  long flagged_negative = 0;    // negative cells the solvers reported
  long observed_negative = 0;   // negative cells found by scanning solver output
  int runs = 0;
};

class VerifySession {
 public:
  explicit VerifySession(VerifyOptions options = {}) : options_(options) {}

  CriterionResult coefficient_identities();  // 1
  CriterionResult harmonic_closed_forms();   // 2
  CriterionResult drift_constant();          // 3
  CriterionResult mean_energy_law();         // 4
  CriterionResult graph_limit();             // 5
  CriterionResult overdamped_limit();        // 6
  CriterionResult local_equilibrium();       // 7
  CriterionResult rate_functional();         // 8
  CriterionResult energy_dissipation();      // 9
  CriterionResult invariants();              // 10
  CriterionResult determinism();             // 11

  CriterionResult run(int id);
  const InvariantLedger& ledger() const noexcept { return ledger_; }
  const VerifyOptions& options() const noexcept { return options_; }

 private:
  VerifyOptions options_;
  InvariantLedger ledger_;
  // Energy-dissipation outcomes recorded by the solver runs of criteria 6-8.
  std::vector<CriterionResult> dissipation_runs_;
  std::set<int> done_;  // criteria already run in this session
};

/// Suite names accepted by run_verify: "coefficients" (1-3), "mean-energy" (4),
/// "graph-limit" (5), "overdamped" (6, 7), "rate" (8, 9), "invariants" (10),
/// "determinism" (11), "all".
std::vector<int> suite_criteria(const std::string& suite);
std::vector<CriterionResult> run_verify(const std::vector<std::string>& suites, const VerifyOptions& options);

/// Columns criterion,name,metric,value,limit,status. Timings are left out so
/// repeated runs produce identical bytes.
std::string verify_csv(const std::vector<CriterionResult>& results);

}  // namespace hamcg
