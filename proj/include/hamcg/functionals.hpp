#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hamcg/vfp.hpp"

namespace hamcg {

/// Ordered snapshots on one box. All functionals here take theta = 1.
using PhaseTrajectory = std::vector<PhaseDensity>;

/// Sum of nu log(nu/zeta) cellvol with 0 log 0 = 0; +infinity when nu > 0 where
/// zeta = 0. Values below 1e-300 are floored before the log; `floored`
/// receives the count.
double relative_entropy(const PhaseDensity& nu, const PhaseDensity& zeta, int* floored = nullptr);

/// H(rho | Z_H^-1 e^-H) + (1/2) int psi*rho drho, with Z_H the box quadrature of e^-H.
double free_energy(const PhaseDensity& rho, const HamiltonianModel& model, int* floored = nullptr);

/// (1/2) int (psi * rho) drho; zero without psi.
double interaction_energy(const PhaseDensity& rho, const HamiltonianModel& model);

/// int |d_p log(f/M)|^2 f with M the Maxwellian exp(-p^2/2m), in the
/// Scharfetter-Gummel face form sum M_face (dg)(d log g) / dp^2 cellvol,
/// g = f/M. This is exactly the dissipation of the solver's momentum step.
/// Faces touching an empty cell contribute 0.
double relative_fisher_p(const PhaseDensity& rho, const HamiltonianModel& model);

/// Boltzmann entropy int rho log rho and Fisher information int |d_p log rho|^2 rho.
double boltzmann_entropy(const PhaseDensity& rho, int* floored = nullptr);
double boltzmann_fisher_p(const PhaseDensity& rho);

/// Test function f(t,q,p) with the p-derivatives the duality forms need.
struct TestFunction {
  std::string name;
  std::function<double(double, double, double)> value;
  std::function<double(double, double, double)> dp;
  std::function<double(double, double, double)> dpp;
};

struct DualityDictionary {
  std::vector<TestFunction> terms;
};

/// He_k(p), k = 1..4, times {1, q, q^2, t, tq, tq^2} (q, t rescaled to the box
/// and horizon), times a bump vanishing with its first derivative on the box edge.
DualityDictionary default_dictionary(const BoxDomain& box, double t_end);

struct GramSolve {
  double value = 0.0;
  bool singular = false;  // smallest eigenvalue below 1e-10 of the largest
  std::vector<double> coefficients;
};

/// max_c (c.b - c.Q.c / 2) evaluated at c = (Q + 1e-10 lambda_max)^-1 b.
GramSolve solve_gram(const std::vector<std::vector<double>>& Q, const std::vector<double>& b);

/// Supremum over span(dict) of 2 int [phi_pp - (p/m) phi_p - phi_p^2 / 2] drho
/// (test functions evaluated at t = rho.t).
GramSolve fisher_duality_bound(const PhaseDensity& rho, const HamiltonianModel& model, const DualityDictionary& dict);

struct RateRow {
  double t0 = 0.0, t1 = 0.0;
  double increment = 0.0;
  double defect = 0.0;
};

struct RateReport {
  double value = 0.0;
  double floor_estimate = 0.0;  // same functional on one solver step from each snapshot
  double defect = 0.0;          // time-integrated L1 norm of the column sums of the residual
  int empty_faces = 0;          // faces with zero density and nonzero flux (value is then +inf)
  std::vector<RateRow> per_time;
};

struct RateOptions {
  double defect_tolerance = 1e-3;
  bool estimate_floor = true;
};

/// h-form of the rate functional for the gamma-scaled equation. Per interval,
/// r = (rho_{i+1} - rho_i)/dt - L*(rho_mid) with L* from VfpOperator; the
/// column sums of r (the part outside the range of d_p) are removed in
/// proportion to rho_mid and reported as the defect; the rest is written as
/// r = -gamma d_p G by cumulative sums from the nearer p-boundary, and
/// (1/2) sum G^2 / (gamma^2 rho_face) cellvol dt is accumulated.
/// Throws NonRepresentableResidual if the defect exceeds the tolerance.
RateReport rate_functional_h(const PhaseTrajectory& traj, const HamiltonianModel& model, const VfpParams& params,
                             const RateOptions& options = {});

struct DualityReport {
  double value = 0.0;
  bool singular = false;
  double defect = 0.0;
};

/// Lower bound sup_c J(rho, sum c_i f_i): the linear term pairs the test
/// functions with the representable residual of rate_functional_h, the
/// quadratic term is (gamma^2/2) sum |D_p f|^2 rho_face on the same faces, so
/// the bound never exceeds the h-form value.
DualityReport rate_lower_bound_duality(const PhaseTrajectory& traj, const HamiltonianModel& model,
                                       const VfpParams& params, const DualityDictionary& dict);

struct DissipationRow {
  double t = 0.0;
  double free_energy = 0.0;
  double dissipation = 0.0;  // c * int_0^t I ds, c = gamma^2/2 or 1/2
  double lhs = 0.0;
  double rhs = 0.0;
  double h_moment = 0.0;  // (1/2) int H drho_t
  double h_moment_bound = 0.0;
};

struct DissipationReport {
  std::vector<DissipationRow> rows;
  double floor = 0.0;       // tolerance per unit time
  double min_margin = 0.0;  // min over rows after the first of rhs + floor * t - lhs
  bool pass = true;
  bool h_moment_pass = true;
  int floored_cells = 0;
};

struct DissipationOptions {
  double rate = 0.0;  // I(rho) on the right-hand side
  double floor_per_time = 1e-3;
};

/// Streaming form of energy_dissipation_check: feed snapshots in time order.
class DissipationMonitor {
 public:
  DissipationMonitor(const HamiltonianModel& model, const VfpParams& params, const DissipationOptions& options = {});
  void observe(const PhaseDensity& rho);
  const DissipationReport& report() const noexcept { return rep_; }

 private:
  HamiltonianModel model_;
  VfpParams params_;
  DissipationOptions options_;
  DissipationReport rep_;
  bool boltzmann_ = false;
  double c_ = 0.0, log_ratio_ = 0.0;
  double f0_ = 0.0, t0_ = 0.0, t_prev_ = 0.0, i_prev_ = 0.0, integral_ = 0.0;
  std::size_t count_ = 0;
};

/// F(rho_t) + c int_0^t I(rho_s) ds <= I + F(rho_0) at every snapshot
/// (trapezoidal time integral), plus (1/2) int H drho_t <= F(rho_0) + I +
/// log(Z_{H/2}/Z_H) - (1/2) int psi*rho_t drho_t. The small-noise form uses the
/// Boltzmann entropy and p-Fisher information with c = 1/2 and skips the
/// H-moment bound.
DissipationReport energy_dissipation_check(const PhaseTrajectory& traj, const HamiltonianModel& model,
                                           const VfpParams& params, const DissipationOptions& options = {});

}  // namespace hamcg
