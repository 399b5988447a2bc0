#pragma once

#include <functional>
#include <vector>

#include "hamcg/model.hpp"

namespace hamcg {

/// Cell averages of a density on a phase-space box (d = 1).
struct PhaseDensity {
  BoxDomain box;
  std::vector<double> rho;
  double t = 0.0;

  double mass() const;
  double& at(int iq, int jp) { return rho[box.index(iq, jp)]; }
  double at(int iq, int jp) const { return rho[box.index(iq, jp)]; }
  /// Position marginal as a density in q (integrated over p).
  std::vector<double> q_marginal() const;
  void normalise();
};

/// Cell averages of a density on a uniform grid over [q_lo, q_hi].
struct PositionDensity {
  double q_lo = -1.0, q_hi = 1.0;
  std::vector<double> sigma;
  double t = 0.0;

  int n() const noexcept { return static_cast<int>(sigma.size()); }
  double dq() const noexcept { return (q_hi - q_lo) / static_cast<double>(sigma.size()); }
  double center(int i) const noexcept { return q_lo + (i + 0.5) * dq(); }
  double mass() const;
  double mean() const;
  double variance() const;
  void normalise();
};

/// Point samples at cell centres, normalised to unit mass.
PhaseDensity sample_phase_density(const BoxDomain& box, const std::function<double(double, double)>& density);
PositionDensity sample_position_density(double q_lo, double q_hi, int n, const std::function<double(double)>& density);
/// Z^-1 exp(-H/theta) sampled at cell centres.
PhaseDensity gibbs_density(const HamiltonianModel& model, const BoxDomain& box, double theta = 1.0);
/// sigma(q) times the Maxwellian exp(-p^2/(2 m theta)), sampled at cell centres.
PhaseDensity lift_with_maxwellian(const HamiltonianModel& model, const BoxDomain& box,
                                  const std::function<double(double)>& sigma, double theta = 1.0);

/// Rescaled kinetic equation
///   gamma_scaled: d_t rho = -gamma div(rho J grad(H + psi*rho)) + gamma^2 d_p(rho (p/m - h0/gamma) + theta d_p rho)
///   small_noise:  d_t rho = -(1/eps) div(rho J grad H) + d_pp rho
enum class VfpForm { gamma_scaled, small_noise };

struct VfpParams {
  VfpForm form = VfpForm::gamma_scaled;
  double gamma = 1.0;
  double theta = 1.0;
  double epsilon = 1.0;
  double dt = 1e-3;
  double t_end = 1.0;
  /// Constant added momentum drift h0 (gamma_scaled only); 0 gives the unperturbed equation.
  double drift_perturbation = 0.0;
  double cfl = 0.3;
  double leak_tolerance = 1e-4;  // mass per unit time through the box boundary proxy
  bool throw_on_leak = true;
  std::vector<double> snapshot_times;  // absolute; empty means only t_end
  int snapshot_every = 0;              // if > 0, also every n steps (overrides snapshot_times)
};

/// Semi-discrete operator shared by the solver and the rate functional.
/// Transport is a stream-function flux form: with w = exp(-H_eff/theta) at
/// cell centres and g = rho/w, the flux through a face is
/// theta * (difference of exp(-H_eff/theta) at the face's end nodes) * g_face,
/// g_face minmod-reconstructed from the upwind side, so exp(-H) is exactly
/// stationary. The momentum part is a Scharfetter-Gummel flux per q-column.
class VfpOperator {
 public:
  VfpOperator(const HamiltonianModel& model, const BoxDomain& box, const VfpParams& params);

  /// Full right-hand side L*(rho) (mean field from rho itself).
  std::vector<double> rhs(const std::vector<double>& rho) const;
  std::vector<double> transport_rhs(const std::vector<double>& rho) const;
  std::vector<double> momentum_rhs(const std::vector<double>& rho) const;

  /// Exact solution of the momentum part over time tau (propagator cached per tau).
  void momentum_step(std::vector<double>& rho, double tau) const;
  /// SSP-RK2 transport over tau, sub-cycled to the CFL limit. Returns the
  /// boundary-leak proxy (mass per unit time) at the start.
  double transport_step(std::vector<double>& rho, double tau) const;

  /// Momentum potential U_j (exp(-U) is the discrete equilibrium in p) and coefficient D.
  const std::vector<double>& momentum_potential() const noexcept { return U_; }
  double momentum_diffusion() const noexcept { return D_; }
  double transport_prefactor() const noexcept;
  /// Mean-field potential (psi * sigma) at the given q points; zero without psi.
  std::vector<double> mean_field_potential(const std::vector<double>& rho, const std::vector<double>& q) const;

  const HamiltonianModel& model() const noexcept { return model_; }
  const BoxDomain& box() const noexcept { return box_; }
  const VfpParams& params() const noexcept { return params_; }
  int last_substeps() const noexcept { return last_substeps_; }

 private:
  struct TransportGeometry {
    std::vector<double> fq, fp;  // face coefficients: vertical faces (nq+1)*np, horizontal nq*(np+1)
    std::vector<double> w;       // cell weights
    double max_rate = 0.0;
  };
  TransportGeometry geometry(const std::vector<double>& rho) const;
  void transport_rhs(const std::vector<double>& rho, const TransportGeometry& geo, std::vector<double>& out) const;
  const std::vector<double>& propagator(double tau) const;

  HamiltonianModel model_;
  BoxDomain box_;
  VfpParams params_;
  std::vector<double> U_;
  double D_ = 1.0;
  std::vector<double> sub_, diag_, sup_;  // tridiagonal momentum matrix
  mutable double cached_tau_ = -1.0;
  mutable std::vector<double> cached_prop_;
  mutable int last_substeps_ = 0;
};

struct VfpDiagnostics {
  double max_mass_drift = 0.0;  // |mass - initial mass|, maximum over steps
  double max_leak_proxy = 0.0;
  int negativity_events = 0;
  std::size_t steps = 0;
  int substeps_per_step = 0;
};

struct VfpTrajectory {
  std::vector<PhaseDensity> snapshots;  // snapshots[0] is the initial state
  VfpDiagnostics diagnostics;
};

/// Largest dt accepted by solve_vfp: gamma^2 theta dt / m <= 0.5 (splitting
/// accuracy of the momentum relaxation); unbounded for the small-noise form.
double vfp_step_bound(const HamiltonianModel& model, const VfpParams& params);

/// Strang splitting: momentum(dt/2), transport(dt), momentum(dt/2).
/// `observer`, if set, sees the initial state and the state after every step.
VfpTrajectory solve_vfp(const HamiltonianModel& model, const PhaseDensity& init, const VfpParams& params,
                        const std::function<void(const PhaseDensity&)>& observer = {});

struct SmoluchowskiParams {
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> snapshot_times;
};

struct PositionTrajectory {
  std::vector<PositionDensity> snapshots;  // snapshots[0] is the initial state
  double max_mass_drift = 0.0;
  int negativity_events = 0;
};

/// d_t sigma = d_q(sigma (V' + psi' * sigma)) + d_qq sigma: Scharfetter-Gummel
/// fluxes, implicit Euler, mean field lagged one step, zero flux at the ends.
PositionTrajectory solve_smoluchowski(const HamiltonianModel& model, const PositionDensity& init,
                                      const SmoluchowskiParams& params);

/// Density of q + p/gamma: each cell split into 2x2 sub-cells whose mass is
/// deposited on the target grid by linear (cloud-in-cell) weights.
PositionDensity pushforward_xi_gamma(const PhaseDensity& rho, double gamma, double q_lo, double q_hi, int n);

double l1_distance(const PositionDensity& a, const PositionDensity& b);
double w1_distance(const PositionDensity& a, const PositionDensity& b);

/// Marginal-weighted L1 distance of the conditional p-densities to the
/// discrete Maxwellian exp(-p^2/(2 m theta)) on the same grid.
double maxwellian_conditional_l1(const PhaseDensity& rho, const HamiltonianModel& model, double theta = 1.0);

struct OverdampedRow {
  double gamma = 0.0;
  double l1 = 0.0;
  double w1 = 0.0;
  double mass_drift = 0.0;
  int negativity_events = 0;
};

struct OverdampedReport {
  std::vector<OverdampedRow> rows;
  bool monotone = false;  // L1 strictly decreasing in gamma
  PositionDensity reference;
};

struct OverdampedOptions {
  BoxDomain box{-5.0, 5.0, -5.0, 5.0, 100, 80};
  double dt_scale = 0.25;  // dt = dt_scale * m / gamma^2, capped at dt_max
  double dt_max = 2e-3;
  double smoluchowski_dt = 1e-3;
  /// Sees every solver state of every gamma run.
  std::function<void(double gamma, const PhaseDensity&)> observer;
};

/// Runs solve_vfp from sigma0 x Maxwellian for each gamma, pushes forward by
/// xi^gamma at t_probe, and compares with solve_smoluchowski from sigma0 on
/// the same q-grid.
OverdampedReport overdamped_convergence_report(const HamiltonianModel& model, const std::vector<double>& gammas,
                                               const std::function<double(double)>& sigma0, double t_probe,
                                               const OverdampedOptions& options = {});

}  // namespace hamcg
