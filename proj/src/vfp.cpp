#include "hamcg/vfp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hamcg/errors.hpp"
#include "hamcg/parallel.hpp"

namespace hamcg {

namespace {

// Bernoulli function x / (e^x - 1).
double bernoulli(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

// Solves a tridiagonal system in place (Thomas algorithm, no pivoting; the
// matrices here are diagonally dominant M-matrices).
void thomas(std::vector<double> a, std::vector<double> b, std::vector<double> c, std::vector<double>& d) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

std::vector<double> mean_field_on(const HamiltonianModel& model, const std::vector<double>& sigma, double q_lo,
                                  double dq, const std::vector<double>& x) {
  std::vector<double> phi(x.size(), 0.0);
  if (!model.interaction) return phi;
  const auto& psi = *model.interaction;
  for (std::size_t a = 0; a < x.size(); ++a) {
    double s = 0.0;
    for (std::size_t k = 0; k < sigma.size(); ++k) s += psi.value(x[a] - (q_lo + (k + 0.5) * dq)) * sigma[k];
    phi[a] = s * dq;
  }
  return phi;
}

}  // namespace

double PhaseDensity::mass() const {
  double s = 0.0;
  for (double v : rho) s += v;
  return s * box.cell_volume();
}

std::vector<double> PhaseDensity::q_marginal() const {
  std::vector<double> s(box.nq, 0.0);
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) s[i] += at(i, j);
  for (double& v : s) v *= box.dp();
  return s;
}

void PhaseDensity::normalise() {
  const double m = mass();
  require(m > 0.0 && std::isfinite(m), "phase density has no mass");
  for (double& v : rho) v /= m;
}

double PositionDensity::mass() const {
  double s = 0.0;
  for (double v : sigma) s += v;
  return s * dq();
}

double PositionDensity::mean() const {
  double s = 0.0;
  for (int i = 0; i < n(); ++i) s += center(i) * sigma[i];
  return s * dq() / mass();
}

double PositionDensity::variance() const {
  const double mu = mean();
  double s = 0.0;
  for (int i = 0; i < n(); ++i) s += (center(i) - mu) * (center(i) - mu) * sigma[i];
  return s * dq() / mass();
}

void PositionDensity::normalise() {
  const double m = mass();
  require(m > 0.0 && std::isfinite(m), "position density has no mass");
  for (double& v : sigma) v /= m;
}

PhaseDensity sample_phase_density(const BoxDomain& box, const std::function<double(double, double)>& density) {
  box.validate();
  PhaseDensity d;
  d.box = box;
  d.rho.resize(box.cell_count());
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) d.at(i, j) = std::max(0.0, density(box.q_center(i), box.p_center(j)));
  d.normalise();
  return d;
}

PositionDensity sample_position_density(double q_lo, double q_hi, int n, const std::function<double(double)>& density) {
  require(q_lo < q_hi && n >= 2, "invalid position grid");
  PositionDensity d;
  d.q_lo = q_lo;
  d.q_hi = q_hi;
  d.sigma.resize(n);
  for (int i = 0; i < n; ++i) d.sigma[i] = std::max(0.0, density(d.center(i)));
  d.normalise();
  return d;
}

PhaseDensity gibbs_density(const HamiltonianModel& model, const BoxDomain& box, double theta) {
  require(theta > 0.0, "temperature must be positive");
  double hmin = model.H(box.q_center(0), box.p_center(0));
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) hmin = std::min(hmin, model.H(box.q_center(i), box.p_center(j)));
  return sample_phase_density(box, [&](double q, double p) { return std::exp(-(model.H(q, p) - hmin) / theta); });
}

PhaseDensity lift_with_maxwellian(const HamiltonianModel& model, const BoxDomain& box,
                                  const std::function<double(double)>& sigma, double theta) {
  return sample_phase_density(
      box, [&](double q, double p) { return sigma(q) * std::exp(-p * p / (2.0 * model.mass * theta)); });
}

// ---------------------------------------------------------------------------

VfpOperator::VfpOperator(const HamiltonianModel& model, const BoxDomain& box, const VfpParams& params)
    : model_(model), box_(box), params_(params) {
  model_.validate();
  box_.validate();
  require(model_.dim == 1, "phase-space solver requires d = 1");
  require(params_.theta > 0.0, "temperature must be positive");
  require(params_.cfl > 0.0 && params_.cfl <= 0.5, "cfl must lie in (0, 0.5]");
  if (params_.form == VfpForm::gamma_scaled) {
    require(params_.gamma > 0.0, "gamma must be positive");
  } else {
    require(params_.epsilon > 0.0, "epsilon must be positive");
    require(params_.drift_perturbation == 0.0, "drift perturbation is only available in the gamma-scaled form");
  }

  const int np = box_.np;
  const double dp = box_.dp();
  U_.resize(np);
  if (params_.form == VfpForm::gamma_scaled) {
    D_ = params_.gamma * params_.gamma * params_.theta;
    const double h0 = params_.drift_perturbation / params_.gamma;
    for (int j = 0; j < np; ++j) {
      const double p = box_.p_center(j);
      U_[j] = (0.5 * p * p / model_.mass - h0 * p) / params_.theta;
    }
  } else {
    D_ = 1.0;
    std::fill(U_.begin(), U_.end(), 0.0);
  }
  // (A rho)_j = -(J_{j+1/2} - J_{j-1/2}) / dp with
  // J_{j+1/2} = -(D/dp) [B(-dU) rho_{j+1} - B(dU) rho_j].
  sub_.assign(np, 0.0);
  diag_.assign(np, 0.0);
  sup_.assign(np, 0.0);
  const double k = D_ / (dp * dp);
  for (int j = 0; j + 1 < np; ++j) {
    const double du = U_[j + 1] - U_[j];
    const double up = k * bernoulli(-du);   // rho_{j+1} -> j
    const double down = k * bernoulli(du);  // rho_j -> j+1
    sup_[j] += up;
    diag_[j + 1] -= up;
    sub_[j + 1] += down;
    diag_[j] -= down;
  }
}

double VfpOperator::transport_prefactor() const noexcept {
  return params_.form == VfpForm::gamma_scaled ? params_.gamma * params_.theta : 1.0 / params_.epsilon;
}

std::vector<double> VfpOperator::mean_field_potential(const std::vector<double>& rho,
                                                      const std::vector<double>& q) const {
  if (!model_.interaction) return std::vector<double>(q.size(), 0.0);
  PhaseDensity tmp;
  tmp.box = box_;
  tmp.rho = rho;
  return mean_field_on(model_, tmp.q_marginal(), box_.q_lo, box_.dq(), q);
}

VfpOperator::TransportGeometry VfpOperator::geometry(const std::vector<double>& rho) const {
  const int nq = box_.nq, np = box_.np;
  const double dq = box_.dq(), dp = box_.dp();
  const bool weighted = params_.form == VfpForm::gamma_scaled;
  const bool mean_field = weighted && model_.interaction.has_value();

  std::vector<double> xn(nq + 1), xc(nq);
  for (int i = 0; i <= nq; ++i) xn[i] = box_.q_lo + i * dq;
  for (int i = 0; i < nq; ++i) xc[i] = box_.q_center(i);
  std::vector<double> phin(nq + 1, 0.0), phic(nq, 0.0);
  if (mean_field) {
    phin = mean_field_potential(rho, xn);
    phic = mean_field_potential(rho, xc);
  }

  auto node_psi = [&](int i, int j) { return model_.H(xn[i], box_.p_lo + j * dp) + phin[i]; };
  std::vector<double> psi((nq + 1) * (np + 1));
  for (int j = 0; j <= np; ++j)
    for (int i = 0; i <= nq; ++i) psi[j * (nq + 1) + i] = node_psi(i, j);
  auto N = [&](int i, int j) -> double& { return psi[j * (nq + 1) + i]; };

  TransportGeometry geo;
  geo.w.assign(box_.cell_count(), 1.0);
  const double c = transport_prefactor();
  if (weighted) {
    const double theta = params_.theta;
    double shift = *std::min_element(psi.begin(), psi.end());
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < nq; ++i) shift = std::min(shift, model_.H(xc[i], box_.p_center(j)) + phic[i]);
    const double top = *std::max_element(psi.begin(), psi.end());
    if ((top - shift) / theta > 600.0) {
      fail(ErrorKind::InvalidArgument, "energy range over the box is too large for exp(-H/theta) weighting");
    }
    for (double& v : psi) v = std::exp(-(v - shift) / theta);
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < nq; ++i)
        geo.w[box_.index(i, j)] = std::exp(-(model_.H(xc[i], box_.p_center(j)) + phic[i] - shift) / theta);
  }

  geo.fq.assign((nq + 1) * np, 0.0);
  geo.fp.assign(nq * (np + 1), 0.0);
  for (int j = 0; j < np; ++j)
    for (int i = 1; i < nq; ++i)
      geo.fq[j * (nq + 1) + i] = weighted ? c * (N(i, j) - N(i, j + 1)) : c * (N(i, j + 1) - N(i, j));
  for (int j = 1; j < np; ++j)
    for (int i = 0; i < nq; ++i)
      geo.fp[j * nq + i] = weighted ? c * (N(i + 1, j) - N(i, j)) : -c * (N(i + 1, j) - N(i, j));
  // Boundary faces carry no flux; their would-be values feed the leak proxy.
  geo.max_rate = 0.0;
  const double area = dq * dp;
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nq; ++i) {
      const double out = std::abs(geo.fq[j * (nq + 1) + i]) + std::abs(geo.fq[j * (nq + 1) + i + 1]) +
                         std::abs(geo.fp[j * nq + i]) + std::abs(geo.fp[(j + 1) * nq + i]);
      geo.max_rate = std::max(geo.max_rate, out / (geo.w[box_.index(i, j)] * area));
    }
  // Stash the boundary coefficients in the outermost slots (zero-flux faces are
  // skipped by transport_rhs, so these are only read by the leak proxy).
  for (int j = 0; j < np; ++j) {
    geo.fq[j * (nq + 1)] = weighted ? c * (N(0, j) - N(0, j + 1)) : c * (N(0, j + 1) - N(0, j));
    geo.fq[j * (nq + 1) + nq] = weighted ? c * (N(nq, j) - N(nq, j + 1)) : c * (N(nq, j + 1) - N(nq, j));
  }
  for (int i = 0; i < nq; ++i) {
    geo.fp[i] = weighted ? c * (N(i + 1, 0) - N(i, 0)) : -c * (N(i + 1, 0) - N(i, 0));
    geo.fp[np * nq + i] = weighted ? c * (N(i + 1, np) - N(i, np)) : -c * (N(i + 1, np) - N(i, np));
  }
  return geo;
}

void VfpOperator::transport_rhs(const std::vector<double>& rho, const TransportGeometry& geo,
                                std::vector<double>& out) const {
  const int nq = box_.nq, np = box_.np;
  const double area = box_.cell_volume();
  std::vector<double> g(rho.size());
  for (std::size_t c = 0; c < rho.size(); ++c) g[c] = rho[c] / geo.w[c];
  auto G = [&](int i, int j) { return g[box_.index(i, j)]; };

  std::vector<double> Fq((nq + 1) * np, 0.0), Fp(nq * (np + 1), 0.0);
  parallel_for(0, static_cast<std::size_t>(np), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    for (int i = 1; i < nq; ++i) {
      const double a = geo.fq[j * (nq + 1) + i];
      double gf;
      if (a > 0.0) {
        const double up = G(i - 1, j), down = G(i, j);
        gf = i >= 2 ? up + 0.5 * minmod(up - G(i - 2, j), down - up) : up;
      } else {
        const double up = G(i, j), down = G(i - 1, j);
        gf = i + 1 < nq ? up + 0.5 * minmod(up - G(i + 1, j), down - up) : up;
      }
      Fq[j * (nq + 1) + i] = a * gf;
    }
  });
  parallel_for(1, static_cast<std::size_t>(np), [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    for (int i = 0; i < nq; ++i) {
      const double a = geo.fp[j * nq + i];
      double gf;
      if (a > 0.0) {
        const double up = G(i, j - 1), down = G(i, j);
        gf = j >= 2 ? up + 0.5 * minmod(up - G(i, j - 2), down - up) : up;
      } else {
        const double up = G(i, j), down = G(i, j - 1);
        gf = j + 1 < np ? up + 0.5 * minmod(up - G(i, j + 1), down - up) : up;
      }
      Fp[j * nq + i] = a * gf;
    }
  });
  out.assign(rho.size(), 0.0);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nq; ++i) {
      const double div = Fq[j * (nq + 1) + i + 1] - Fq[j * (nq + 1) + i] + Fp[(j + 1) * nq + i] - Fp[j * nq + i];
      out[box_.index(i, j)] = -div / area;
    }
}

std::vector<double> VfpOperator::transport_rhs(const std::vector<double>& rho) const {
  std::vector<double> out;
  transport_rhs(rho, geometry(rho), out);
  return out;
}

std::vector<double> VfpOperator::momentum_rhs(const std::vector<double>& rho) const {
  const int nq = box_.nq, np = box_.np;
  std::vector<double> out(rho.size(), 0.0);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nq; ++i) {
      double v = diag_[j] * rho[box_.index(i, j)];
      if (j > 0) v += sub_[j] * rho[box_.index(i, j - 1)];
      if (j + 1 < np) v += sup_[j] * rho[box_.index(i, j + 1)];
      out[box_.index(i, j)] = v;
    }
  return out;
}

std::vector<double> VfpOperator::rhs(const std::vector<double>& rho) const {
  std::vector<double> a = transport_rhs(rho);
  const std::vector<double> b = momentum_rhs(rho);
  for (std::size_t c = 0; c < a.size(); ++c) a[c] += b[c];
  return a;
}

const std::vector<double>& VfpOperator::propagator(double tau) const {
  if (tau == cached_tau_) return cached_prop_;
  const int n = box_.np;
  // Detailed balance against pi = exp(-U) makes S^-1 A S symmetric, S = diag(sqrt(pi)).
  const double umin = *std::min_element(U_.begin(), U_.end());
  Eigen::VectorXd s(n);
  for (int j = 0; j < n; ++j) s[j] = std::exp(-0.5 * (U_[j] - umin));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    a(j, j) = diag_[j];
    if (j + 1 < n) {
      const double sym = std::sqrt(sup_[j] * sub_[j + 1]);
      a(j, j + 1) = sym;
      a(j + 1, j) = sym;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) fail(ErrorKind::SolveFailure, "momentum propagator eigensolve failed");
  const Eigen::VectorXd ex = (tau * es.eigenvalues().array()).exp();
  const Eigen::MatrixXd e = es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().transpose();
  cached_prop_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int col = 0; col < n; ++col) {
    double sum = 0.0;
    for (int row = 0; row < n; ++row) {
      const double v = std::max(0.0, s[row] * e(row, col) / s[col]);
      cached_prop_[static_cast<std::size_t>(row) * n + col] = v;
      sum += v;
    }
    // Columns of exp(tau A) sum to one; restore it after clipping round-off.
    for (int row = 0; row < n; ++row) cached_prop_[static_cast<std::size_t>(row) * n + col] /= sum;
  }
  cached_tau_ = tau;
  return cached_prop_;
}

void VfpOperator::momentum_step(std::vector<double>& rho, double tau) const {
  const auto& P = propagator(tau);
  const int nq = box_.nq, np = box_.np;
  parallel_for(0, static_cast<std::size_t>(nq), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    std::vector<double> col(np), next(np, 0.0);
    for (int j = 0; j < np; ++j) col[j] = rho[box_.index(i, j)];
    for (int r = 0; r < np; ++r) {
      const double* row = &P[static_cast<std::size_t>(r) * np];
      double acc = 0.0;
      for (int j = 0; j < np; ++j) acc += row[j] * col[j];
      next[r] = acc;
    }
    for (int j = 0; j < np; ++j) rho[box_.index(i, j)] = next[j];
  });
}

double VfpOperator::transport_step(std::vector<double>& rho, double tau) const {
  const int nq = box_.nq, np = box_.np;
  TransportGeometry geo = geometry(rho);

  double leak = 0.0;
  for (int j = 0; j < np; ++j) {
    const double left = geo.fq[j * (nq + 1)], right = geo.fq[j * (nq + 1) + nq];
    if (left < 0.0) leak -= left * rho[box_.index(0, j)] / geo.w[box_.index(0, j)];
    if (right > 0.0) leak += right * rho[box_.index(nq - 1, j)] / geo.w[box_.index(nq - 1, j)];
  }
  for (int i = 0; i < nq; ++i) {
    const double bottom = geo.fp[i], top = geo.fp[np * nq + i];
    if (bottom < 0.0) leak -= bottom * rho[box_.index(i, 0)] / geo.w[box_.index(i, 0)];
    if (top > 0.0) leak += top * rho[box_.index(i, np - 1)] / geo.w[box_.index(i, np - 1)];
  }

  const bool refresh = params_.form == VfpForm::gamma_scaled && model_.interaction.has_value();
  const int nsub = std::max(1, static_cast<int>(std::ceil(tau * geo.max_rate / params_.cfl)));
  const double h = tau / nsub;
  std::vector<double> k1, k2, stage(rho.size());
  for (int s = 0; s < nsub; ++s) {
    if (refresh && s > 0) geo = geometry(rho);
    transport_rhs(rho, geo, k1);
    for (std::size_t c = 0; c < rho.size(); ++c) stage[c] = rho[c] + h * k1[c];
    if (refresh) geo = geometry(stage);
    transport_rhs(stage, geo, k2);
    for (std::size_t c = 0; c < rho.size(); ++c) rho[c] = 0.5 * rho[c] + 0.5 * (stage[c] + h * k2[c]);
  }
  last_substeps_ = nsub;
  return leak;
}

double vfp_step_bound(const HamiltonianModel& model, const VfpParams& params) {
  if (params.form == VfpForm::small_noise) return std::numeric_limits<double>::infinity();
  return 0.5 * model.mass / (params.gamma * params.gamma * params.theta);
}

VfpTrajectory solve_vfp(const HamiltonianModel& model, const PhaseDensity& init, const VfpParams& params,
                        const std::function<void(const PhaseDensity&)>& observer) {
  require(params.dt > 0.0 && params.t_end >= init.t, "invalid time stepping");
  require(init.rho.size() == init.box.cell_count(), "density does not match its box");
  for (double v : init.rho) require(std::isfinite(v) && v >= 0.0, "initial density must be finite and nonnegative");
  const double bound = vfp_step_bound(model, params);
  if (params.dt > bound * (1.0 + 1e-12)) {
    fail(ErrorKind::UnstableStep,
         "dt=" + std::to_string(params.dt) + " exceeds the splitting bound " + std::to_string(bound));
  }
  VfpOperator op(model, init.box, params);

  VfpTrajectory traj;
  const std::size_t nsteps = static_cast<std::size_t>(std::llround((params.t_end - init.t) / params.dt));
  std::vector<std::size_t> marks;
  if (params.snapshot_every > 0) {
    for (std::size_t s = params.snapshot_every; s <= nsteps; s += params.snapshot_every) marks.push_back(s);
  } else if (params.snapshot_times.empty()) {
    marks.push_back(nsteps);
  } else {
    for (double t : params.snapshot_times) {
      require(t >= init.t - 1e-12 && t <= params.t_end + 1e-12, "snapshot time outside the horizon");
      marks.push_back(static_cast<std::size_t>(std::llround((t - init.t) / params.dt)));
    }
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  }

  PhaseDensity cur = init;
  const double mass0 = cur.mass();
  traj.snapshots.push_back(cur);
  if (observer) observer(cur);
  std::size_t next = 0;
  while (next < marks.size() && marks[next] == 0) ++next;
  const double half = 0.5 * params.dt;
  for (std::size_t step = 1; step <= nsteps; ++step) {
    op.momentum_step(cur.rho, half);
    const double leak = op.transport_step(cur.rho, params.dt);
    op.momentum_step(cur.rho, half);
    cur.t = init.t + static_cast<double>(step) * params.dt;

    auto& d = traj.diagnostics;
    d.steps = step;
    d.substeps_per_step = std::max(d.substeps_per_step, op.last_substeps());
    d.max_leak_proxy = std::max(d.max_leak_proxy, leak);
    if (params.throw_on_leak && leak > params.leak_tolerance) {
      fail(ErrorKind::BoundaryLeak, "boundary flux proxy " + std::to_string(leak) + " at t=" + std::to_string(cur.t));
    }
    for (double v : cur.rho) {
      if (v < 0.0) ++d.negativity_events;
      if (!std::isfinite(v)) fail(ErrorKind::SolveFailure, "non-finite density at t=" + std::to_string(cur.t));
    }
    d.max_mass_drift = std::max(d.max_mass_drift, std::abs(cur.mass() - mass0));
    if (observer) observer(cur);
    if (next < marks.size() && marks[next] == step) {
      traj.snapshots.push_back(cur);
      ++next;
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------

PositionTrajectory solve_smoluchowski(const HamiltonianModel& model, const PositionDensity& init,
                                      const SmoluchowskiParams& params) {
  require(model.dim == 1, "Smoluchowski solver requires d = 1");
  require(params.dt > 0.0 && params.t_end >= init.t, "invalid time stepping");
  require(init.n() >= 3, "position grid too small");
  const int n = init.n();
  const double dq = init.dq();
  std::vector<double> xc(n);
  for (int i = 0; i < n; ++i) xc[i] = init.center(i);

  const std::size_t nsteps = static_cast<std::size_t>(std::llround((params.t_end - init.t) / params.dt));
  std::vector<std::size_t> marks;
  if (params.snapshot_times.empty()) {
    marks.push_back(nsteps);
  } else {
    for (double t : params.snapshot_times) marks.push_back(static_cast<std::size_t>(std::llround((t - init.t) / params.dt)));
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  }

  PositionTrajectory traj;
  PositionDensity cur = init;
  const double mass0 = cur.mass();
  traj.snapshots.push_back(cur);
  std::size_t next = 0;
  while (next < marks.size() && marks[next] == 0) ++next;
  const double k = params.dt / (dq * dq);
  std::vector<double> a(n), b(n), c(n);
  for (std::size_t step = 1; step <= nsteps; ++step) {
    const std::vector<double> phi = mean_field_on(model, cur.sigma, cur.q_lo, dq, xc);
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 1.0);
    std::fill(c.begin(), c.end(), 0.0);
    for (int i = 0; i + 1 < n; ++i) {
      const double du = model.V(xc[i + 1]) + phi[i + 1] - model.V(xc[i]) - phi[i];
      const double up = k * bernoulli(-du), down = k * bernoulli(du);
      // (I - dt A): row i loses `down` to i+1 and gains `up` from i+1.
      c[i] -= up;
      b[i + 1] += up;
      a[i + 1] -= down;
      b[i] += down;
    }
    thomas(a, b, c, cur.sigma);
    cur.t = init.t + static_cast<double>(step) * params.dt;
    for (double v : cur.sigma)
      if (v < 0.0) ++traj.negativity_events;
    traj.max_mass_drift = std::max(traj.max_mass_drift, std::abs(cur.mass() - mass0));
    if (next < marks.size() && marks[next] == step) {
      traj.snapshots.push_back(cur);
      ++next;
    }
  }
  return traj;
}

PositionDensity pushforward_xi_gamma(const PhaseDensity& rho, double gamma, double q_lo, double q_hi, int n) {
  require(gamma > 0.0, "gamma must be positive");
  require(q_lo < q_hi && n >= 2, "invalid target grid");
  const BoxDomain& box = rho.box;
  PositionDensity out;
  out.q_lo = q_lo;
  out.q_hi = q_hi;
  out.t = rho.t;
  out.sigma.assign(n, 0.0);
  const double dx = (q_hi - q_lo) / n;
  const double vol = box.cell_volume();
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) {
      const double m = 0.25 * rho.at(i, j) * vol;
      if (m == 0.0) continue;
      for (int s = 0; s < 4; ++s) {
        const double q = box.q_center(i) + ((s & 1) ? 0.25 : -0.25) * box.dq();
        const double p = box.p_center(j) + ((s & 2) ? 0.25 : -0.25) * box.dp();
        const double u = (q + p / gamma - q_lo) / dx - 0.5;
        if (u <= 0.0) {
          out.sigma[0] += m;
        } else if (u >= n - 1) {
          out.sigma[n - 1] += m;
        } else {
          const int i0 = static_cast<int>(std::floor(u));
          const double f = u - i0;
          out.sigma[i0] += (1.0 - f) * m;
          out.sigma[i0 + 1] += f * m;
        }
      }
    }
  for (double& v : out.sigma) v /= dx;
  return out;
}

namespace {

void require_same_grid(const PositionDensity& a, const PositionDensity& b) {
  require(a.n() == b.n() && std::abs(a.q_lo - b.q_lo) < 1e-12 && std::abs(a.q_hi - b.q_hi) < 1e-12,
          "position densities live on different grids");
}

}  // namespace

double l1_distance(const PositionDensity& a, const PositionDensity& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (int i = 0; i < a.n(); ++i) s += std::abs(a.sigma[i] - b.sigma[i]);
  return s * a.dq();
}

double w1_distance(const PositionDensity& a, const PositionDensity& b) {
  require_same_grid(a, b);
  double fa = 0.0, fb = 0.0, s = 0.0;
  for (int i = 0; i < a.n(); ++i) {
    fa += a.sigma[i] * a.dq();
    fb += b.sigma[i] * b.dq();
    s += std::abs(fa - fb);
  }
  return s * a.dq();
}

double maxwellian_conditional_l1(const PhaseDensity& rho, const HamiltonianModel& model, double theta) {
  const BoxDomain& box = rho.box;
  const double z = std::sqrt(2.0 * std::numbers::pi * model.mass * theta);
  std::vector<double> maxw(box.np);
  for (int j = 0; j < box.np; ++j) {
    const double p = box.p_center(j);
    maxw[j] = std::exp(-p * p / (2.0 * model.mass * theta)) / z;
  }
  double total = 0.0, weight = 0.0;
  for (int i = 0; i < box.nq; ++i) {
    double col = 0.0;
    for (int j = 0; j < box.np; ++j) col += rho.at(i, j);
    col *= box.dp();
    if (col <= 1e-14) continue;
    double l1 = 0.0;
    for (int j = 0; j < box.np; ++j) l1 += std::abs(rho.at(i, j) / col - maxw[j]);
    total += col * box.dq() * l1 * box.dp();
    weight += col * box.dq();
  }
  return weight > 0.0 ? total / weight : 0.0;
}

OverdampedReport overdamped_convergence_report(const HamiltonianModel& model, const std::vector<double>& gammas,
                                               const std::function<double(double)>& sigma0, double t_probe,
                                               const OverdampedOptions& options) {
  require(!gammas.empty(), "gamma list is empty");
  require(t_probe > 0.0, "probe time must be positive");
  const BoxDomain& box = options.box;

  OverdampedReport report;
  PositionDensity s0 = sample_position_density(box.q_lo, box.q_hi, box.nq, sigma0);
  SmoluchowskiParams sp;
  sp.dt = options.smoluchowski_dt;
  sp.t_end = t_probe;
  report.reference = solve_smoluchowski(model, s0, sp).snapshots.back();

  const PhaseDensity init = lift_with_maxwellian(model, box, sigma0);
  for (double g : gammas) {
    VfpParams vp;
    vp.gamma = g;
    vp.t_end = t_probe;
    vp.dt = std::min(options.dt_max, options.dt_scale * model.mass / (g * g));
    vp.dt = t_probe / std::ceil(t_probe / vp.dt);
    std::function<void(const PhaseDensity&)> obs;
    if (options.observer) obs = [&](const PhaseDensity& d) { options.observer(g, d); };
    const VfpTrajectory tr = solve_vfp(model, init, vp, obs);
    const PositionDensity push = pushforward_xi_gamma(tr.snapshots.back(), g, box.q_lo, box.q_hi, box.nq);
    OverdampedRow row;
    row.gamma = g;
    row.l1 = l1_distance(push, report.reference);
    row.w1 = w1_distance(push, report.reference);
    row.mass_drift = tr.diagnostics.max_mass_drift;
    row.negativity_events = tr.diagnostics.negativity_events;
    report.rows.push_back(row);
  }
  std::vector<OverdampedRow> sorted = report.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
  report.monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!(sorted[i].l1 < sorted[i - 1].l1)) report.monotone = false;
  return report;
}

}  // namespace hamcg
