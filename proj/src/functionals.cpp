#include "hamcg/functionals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hamcg/errors.hpp"

namespace hamcg {

namespace {

constexpr double kLogFloor = 1e-300;

double safe_log(double v, int* floored) {
  if (v < kLogFloor) {
    if (floored) ++*floored;
    return std::log(kLogFloor);
  }
  return std::log(v);
}

double bernoulli(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

// log of the box quadrature of exp(-s H).
double log_partition(const HamiltonianModel& model, const BoxDomain& box, double s) {
  double hmin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) hmin = std::min(hmin, model.H(box.q_center(i), box.p_center(j)));
  double z = 0.0;
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) z += std::exp(-s * (model.H(box.q_center(i), box.p_center(j)) - hmin));
  return -s * hmin + std::log(z * box.cell_volume());
}

void require_same_box(const BoxDomain& a, const BoxDomain& b) {
  require(a.nq == b.nq && a.np == b.np && a.q_lo == b.q_lo && a.q_hi == b.q_hi && a.p_lo == b.p_lo &&
              a.p_hi == b.p_hi,
          "densities live on different grids");
}

void check_trajectory(const PhaseTrajectory& traj) {
  require(!traj.empty(), "trajectory is empty");
  for (std::size_t i = 1; i < traj.size(); ++i) {
    require_same_box(traj[0].box, traj[i].box);
    require(traj[i].t > traj[i - 1].t, "snapshot times must increase strictly");
  }
}

double equal_spacing(const PhaseTrajectory& traj) {
  const double dt = traj[1].t - traj[0].t;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double d = traj[i].t - traj[i - 1].t;
    require(std::abs(d - dt) <= 1e-9 * std::max(1.0, std::abs(dt)), "snapshots must be equally spaced");
  }
  return dt;
}

void require_unit_temperature(const VfpParams& params) {
  require(params.theta == 1.0, "functionals are defined for theta = 1");
}

// Representable part of one interval's residual, as face fluxes G (r = -d_p G)
// and face densities, column-major per q-column: face j+1/2 of column i at
// i * (np - 1) + j.
struct IntervalFlux {
  std::vector<double> G, rho_face;
  double defect = 0.0;
};

IntervalFlux interval_flux(const VfpOperator& op, const std::vector<double>& a, const std::vector<double>& b,
                           double dt) {
  const BoxDomain& box = op.box();
  const int nq = box.nq, np = box.np;
  const double dq = box.dq(), dp = box.dp();
  std::vector<double> mid(a.size()), r(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) mid[c] = 0.5 * (a[c] + b[c]);
  const std::vector<double> L = op.rhs(mid);
  for (std::size_t c = 0; c < a.size(); ++c) r[c] = (b[c] - a[c]) / dt - L[c];

  IntervalFlux out;
  out.G.assign(static_cast<std::size_t>(nq) * (np - 1), 0.0);
  out.rho_face.assign(out.G.size(), 0.0);
  std::vector<double> col(np), rc(np);
  for (int i = 0; i < nq; ++i) {
    double s = 0.0, mass = 0.0;
    for (int j = 0; j < np; ++j) {
      col[j] = mid[box.index(i, j)];
      rc[j] = r[box.index(i, j)];
      s += rc[j];
      mass += col[j];
    }
    if (mass > 0.0) {
      out.defect += std::abs(s) * dp * dq;
      for (int j = 0; j < np; ++j) rc[j] -= s * col[j] / mass;
    } else {
      for (int j = 0; j < np; ++j) out.defect += std::abs(rc[j]) * dp * dq;
      continue;
    }
    // Cumulate from the lighter side of the column to keep tail fluxes exact.
    double below = 0.0;
    std::size_t split = 0;
    while (split + 1 < static_cast<std::size_t>(np) && below + col[split] <= 0.5 * mass) below += col[split++];
    double acc = 0.0;
    for (int j = 0; j + 1 < np; ++j) {
      if (static_cast<std::size_t>(j) >= split) break;
      acc -= rc[j] * dp;
      out.G[static_cast<std::size_t>(i) * (np - 1) + j] = acc;
    }
    acc = 0.0;
    for (int j = np - 2; j >= 0 && static_cast<std::size_t>(j) >= split; --j) {
      acc += rc[j + 1] * dp;
      out.G[static_cast<std::size_t>(i) * (np - 1) + j] = acc;
    }
    for (int j = 0; j + 1 < np; ++j) out.rho_face[static_cast<std::size_t>(i) * (np - 1) + j] = 0.5 * (col[j] + col[j + 1]);
  }
  return out;
}

double interval_rate(const IntervalFlux& f, const BoxDomain& box, double gamma, double dt, int* empty) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.G.size(); ++k) {
    if (f.rho_face[k] > 0.0) {
      s += f.G[k] * f.G[k] / f.rho_face[k];
    } else if (f.G[k] != 0.0) {
      if (empty) ++*empty;
      return std::numeric_limits<double>::infinity();
    }
  }
  return 0.5 * s / (gamma * gamma) * box.cell_volume() * dt;
}

VfpParams unperturbed(const VfpParams& params) {
  VfpParams p = params;
  p.drift_perturbation = 0.0;
  return p;
}

}  // namespace

double relative_entropy(const PhaseDensity& nu, const PhaseDensity& zeta, int* floored) {
  require_same_box(nu.box, zeta.box);
  double s = 0.0;
  for (std::size_t c = 0; c < nu.rho.size(); ++c) {
    const double a = nu.rho[c];
    if (a <= 0.0) continue;
    if (zeta.rho[c] <= 0.0) return std::numeric_limits<double>::infinity();
    s += a * (safe_log(a, floored) - safe_log(zeta.rho[c], floored));
  }
  return s * nu.box.cell_volume();
}

double interaction_energy(const PhaseDensity& rho, const HamiltonianModel& model) {
  if (!model.interaction) return 0.0;
  const BoxDomain& box = rho.box;
  const std::vector<double> sigma = rho.q_marginal();
  double s = 0.0;
  for (int i = 0; i < box.nq; ++i) {
    double phi = 0.0;
    for (int k = 0; k < box.nq; ++k) phi += model.interaction->value(box.q_center(i) - box.q_center(k)) * sigma[k];
    s += phi * box.dq() * sigma[i];
  }
  return 0.5 * s * box.dq();
}

double free_energy(const PhaseDensity& rho, const HamiltonianModel& model, int* floored) {
  const BoxDomain& box = rho.box;
  double s = 0.0;
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) {
      const double g = rho.at(i, j);
      if (g <= 0.0) continue;
      s += g * (safe_log(g, floored) + model.H(box.q_center(i), box.p_center(j)));
    }
  return s * box.cell_volume() + log_partition(model, box, 1.0) + interaction_energy(rho, model);
}

double relative_fisher_p(const PhaseDensity& rho, const HamiltonianModel& model) {
  const BoxDomain& box = rho.box;
  const double dp = box.dp();
  std::vector<double> u(box.np);
  for (int j = 0; j < box.np; ++j) u[j] = 0.5 * box.p_center(j) * box.p_center(j) / model.mass;
  const double umin = *std::min_element(u.begin(), u.end());
  double s = 0.0;
  for (int j = 0; j + 1 < box.np; ++j) {
    const double m0 = std::exp(-(u[j] - umin)), m1 = std::exp(-(u[j + 1] - umin));
    const double mface = bernoulli(u[j + 1] - u[j]) * m0;
    for (int i = 0; i < box.nq; ++i) {
      const double a = rho.at(i, j), b = rho.at(i, j + 1);
      if (a <= 0.0 || b <= 0.0) continue;
      const double ga = a / m0, gb = b / m1;
      s += mface * (gb - ga) * (std::log(gb) - std::log(ga));
    }
  }
  return s / (dp * dp) * box.cell_volume();
}

double boltzmann_entropy(const PhaseDensity& rho, int* floored) {
  double s = 0.0;
  for (double v : rho.rho)
    if (v > 0.0) s += v * safe_log(v, floored);
  return s * rho.box.cell_volume();
}

double boltzmann_fisher_p(const PhaseDensity& rho) {
  const BoxDomain& box = rho.box;
  double s = 0.0;
  for (int j = 0; j + 1 < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) {
      const double a = rho.at(i, j), b = rho.at(i, j + 1);
      if (a <= 0.0 || b <= 0.0) continue;
      s += (b - a) * (std::log(b) - std::log(a));
    }
  return s / (box.dp() * box.dp()) * box.cell_volume();
}

DualityDictionary default_dictionary(const BoxDomain& box, double t_end) {
  require(t_end > 0.0, "horizon must be positive");
  const double qc = 0.5 * (box.q_lo + box.q_hi), qh = 0.5 * (box.q_hi - box.q_lo);
  const double ph = std::max(std::abs(box.p_lo), std::abs(box.p_hi));
  // Hermite He_k with first and second derivatives.
  auto he = [](int k, double p, int d) -> double {
    switch (k) {
      case 1: return d == 0 ? p : d == 1 ? 1.0 : 0.0;
      case 2: return d == 0 ? p * p - 1.0 : d == 1 ? 2.0 * p : 2.0;
      case 3: return d == 0 ? p * p * p - 3.0 * p : d == 1 ? 3.0 * p * p - 3.0 : 6.0 * p;
      default: return d == 0 ? p * p * p * p - 6.0 * p * p + 3.0 : d == 1 ? 4.0 * p * p * p - 12.0 * p : 12.0 * p * p - 12.0;
    }
  };
  // (1 - x^2)^2 on |x| < 1 and derivatives in x.
  auto bump = [](double x, int d) -> double {
    if (std::abs(x) >= 1.0) return 0.0;
    const double y = 1.0 - x * x;
    return d == 0 ? y * y : d == 1 ? -4.0 * x * y : -4.0 * y + 8.0 * x * x;
  };
  static const char* kFactorNames[] = {"1", "q", "q2", "t", "tq", "tq2"};
  DualityDictionary dict;
  for (int k = 1; k <= 4; ++k)
    for (int f = 0; f < 6; ++f) {
      auto poly = [=](double t, double q) {
        const double x = (q - qc) / qh, s = t / t_end;
        const double base = (f % 3 == 0) ? 1.0 : (f % 3 == 1) ? x : x * x;
        return f >= 3 ? s * base : base;
      };
      auto pf = [=](double p, int d) {
        const double x = p / ph;
        const double h0 = he(k, p, 0), h1 = he(k, p, 1), h2 = he(k, p, 2);
        const double b0 = bump(x, 0), b1 = bump(x, 1) / ph, b2 = bump(x, 2) / (ph * ph);
        if (d == 0) return h0 * b0;
        if (d == 1) return h1 * b0 + h0 * b1;
        return h2 * b0 + 2.0 * h1 * b1 + h0 * b2;
      };
      TestFunction tf;
      tf.name = "He" + std::to_string(k) + "*" + kFactorNames[f];
      tf.value = [=](double t, double q, double p) { return poly(t, q) * bump((q - qc) / qh, 0) * pf(p, 0); };
      tf.dp = [=](double t, double q, double p) { return poly(t, q) * bump((q - qc) / qh, 0) * pf(p, 1); };
      tf.dpp = [=](double t, double q, double p) { return poly(t, q) * bump((q - qc) / qh, 0) * pf(p, 2); };
      dict.terms.push_back(std::move(tf));
    }
  return dict;
}

GramSolve solve_gram(const std::vector<std::vector<double>>& Q, const std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  GramSolve out;
  out.coefficients.assign(n, 0.0);
  if (n == 0) return out;
  Eigen::MatrixXd q(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    rhs[i] = b[i];
    for (int j = 0; j < n; ++j) q(i, j) = 0.5 * (Q[i][j] + Q[j][i]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.info() != Eigen::Success) fail(ErrorKind::SolveFailure, "Gram eigensolve failed");
  const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
  if (lmax == 0.0) {
    out.singular = true;
    return out;
  }
  const double shift = 1e-10 * lmax;
  out.singular = es.eigenvalues().minCoeff() < shift;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * rhs;
  for (int k = 0; k < n; ++k) {
    const double lam = std::max(0.0, es.eigenvalues()[k]) + shift;
    c += es.eigenvectors().col(k) * (proj[k] / lam);
  }
  // Any c gives a valid lower bound; evaluate the objective rather than b.Q^-1.b / 2.
  out.value = c.dot(rhs) - 0.5 * c.dot(q * c);
  for (int i = 0; i < n; ++i) out.coefficients[i] = c[i];
  return out;
}

GramSolve fisher_duality_bound(const PhaseDensity& rho, const HamiltonianModel& model, const DualityDictionary& dict) {
  const BoxDomain& box = rho.box;
  const int n = static_cast<int>(dict.terms.size());
  std::vector<std::vector<double>> Q(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0), d1(n), d2(n);
  for (int j = 0; j < box.np; ++j)
    for (int i = 0; i < box.nq; ++i) {
      const double w = rho.at(i, j) * box.cell_volume();
      if (w <= 0.0) continue;
      const double q = box.q_center(i), p = box.p_center(j);
      for (int a = 0; a < n; ++a) {
        d1[a] = dict.terms[a].dp(rho.t, q, p);
        d2[a] = dict.terms[a].dpp(rho.t, q, p);
        b[a] += w * (d2[a] - p / model.mass * d1[a]);
      }
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) Q[a][c] += w * d1[a] * d1[c];
    }
  GramSolve g = solve_gram(Q, b);
  g.value *= 2.0;
  return g;
}

RateReport rate_functional_h(const PhaseTrajectory& traj, const HamiltonianModel& model, const VfpParams& params,
                             const RateOptions& options) {
  check_trajectory(traj);
  require(params.form == VfpForm::gamma_scaled, "rate functional h-form is for the gamma-scaled equation");
  require_unit_temperature(params);
  RateReport rep;
  if (traj.size() < 2) return rep;
  const double dt = equal_spacing(traj);
  const BoxDomain& box = traj[0].box;
  const VfpParams base = unperturbed(params);
  const VfpOperator op(model, box, base);

  const double bound = vfp_step_bound(model, base);
  const int sub = std::max(1, static_cast<int>(std::ceil(dt / bound - 1e-12)));
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const IntervalFlux f = interval_flux(op, traj[k].rho, traj[k + 1].rho, dt);
    RateRow row;
    row.t0 = traj[k].t;
    row.t1 = traj[k + 1].t;
    row.increment = interval_rate(f, box, params.gamma, dt, &rep.empty_faces);
    row.defect = f.defect * dt;
    rep.value += row.increment;
    rep.defect += row.defect;
    rep.per_time.push_back(row);

    if (options.estimate_floor) {
      std::vector<double> next = traj[k].rho;
      const double h = dt / sub;
      for (int s = 0; s < sub; ++s) {
        op.momentum_step(next, 0.5 * h);
        op.transport_step(next, h);
        op.momentum_step(next, 0.5 * h);
      }
      const IntervalFlux fl = interval_flux(op, traj[k].rho, next, dt);
      rep.floor_estimate += interval_rate(fl, box, params.gamma, dt, nullptr);
    }
  }
  if (rep.defect > options.defect_tolerance) {
    fail(ErrorKind::NonRepresentableResidual, "residual q-flux defect " + std::to_string(rep.defect) +
                                                  " exceeds tolerance " + std::to_string(options.defect_tolerance));
  }
  return rep;
}

DualityReport rate_lower_bound_duality(const PhaseTrajectory& traj, const HamiltonianModel& model,
                                       const VfpParams& params, const DualityDictionary& dict) {
  check_trajectory(traj);
  require(params.form == VfpForm::gamma_scaled, "duality bound is for the gamma-scaled equation");
  require_unit_temperature(params);
  DualityReport rep;
  const int n = static_cast<int>(dict.terms.size());
  if (traj.size() < 2 || n == 0) return rep;
  const double dt = equal_spacing(traj);
  const BoxDomain& box = traj[0].box;
  const int nq = box.nq, np = box.np;
  const VfpOperator op(model, box, unperturbed(params));
  const std::size_t faces = static_cast<std::size_t>(nq) * (np - 1);
  const double g2 = params.gamma * params.gamma;

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd D(faces, n);
  Eigen::VectorXd G(faces), W(faces);
  std::vector<double> fv(box.cell_count());
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const IntervalFlux f = interval_flux(op, traj[k].rho, traj[k + 1].rho, dt);
    rep.defect += f.defect * dt;
    const double tm = 0.5 * (traj[k].t + traj[k + 1].t);
    for (int a = 0; a < n; ++a) {
      for (int j = 0; j < np; ++j)
        for (int i = 0; i < nq; ++i) fv[box.index(i, j)] = dict.terms[a].value(tm, box.q_center(i), box.p_center(j));
      for (int i = 0; i < nq; ++i)
        for (int j = 0; j + 1 < np; ++j)
          D(static_cast<Eigen::Index>(i) * (np - 1) + j, a) =
              (fv[box.index(i, j + 1)] - fv[box.index(i, j)]) / box.dp();
    }
    for (std::size_t s = 0; s < faces; ++s) {
      G[s] = f.G[s];
      W[s] = f.rho_face[s];
    }
    const double scale = dt * box.cell_volume();
    b += scale * (D.transpose() * G);
    Q += (scale * g2) * (D.transpose() * W.asDiagonal() * D);
  }
  std::vector<std::vector<double>> qv(n, std::vector<double>(n));
  std::vector<double> bv(n);
  for (int a = 0; a < n; ++a) {
    bv[a] = b[a];
    for (int c = 0; c < n; ++c) qv[a][c] = Q(a, c);
  }
  const GramSolve g = solve_gram(qv, bv);
  rep.value = g.value;
  rep.singular = g.singular;
  return rep;
}

DissipationMonitor::DissipationMonitor(const HamiltonianModel& model, const VfpParams& params,
                                       const DissipationOptions& options)
    : model_(model), params_(params), options_(options) {
  require_unit_temperature(params);
  rep_.floor = options.floor_per_time;
  boltzmann_ = params.form == VfpForm::small_noise;
  c_ = boltzmann_ ? 0.5 : 0.5 * params.gamma * params.gamma;
}

void DissipationMonitor::observe(const PhaseDensity& rho) {
  const BoxDomain& box = rho.box;
  const double energy =
      boltzmann_ ? boltzmann_entropy(rho, &rep_.floored_cells) : free_energy(rho, model_, &rep_.floored_cells);
  const double fisher = boltzmann_ ? boltzmann_fisher_p(rho) : relative_fisher_p(rho, model_);
  if (count_ == 0) {
    f0_ = energy;
    t0_ = rho.t;
    if (!boltzmann_) log_ratio_ = log_partition(model_, box, 0.5) - log_partition(model_, box, 1.0);
  } else {
    require(rho.t > t_prev_, "snapshot times must increase strictly");
    integral_ += 0.5 * (i_prev_ + fisher) * (rho.t - t_prev_);
  }
  t_prev_ = rho.t;
  i_prev_ = fisher;

  DissipationRow row;
  row.t = rho.t;
  row.free_energy = energy;
  row.dissipation = c_ * integral_;
  row.lhs = row.free_energy + row.dissipation;
  row.rhs = options_.rate + f0_;
  const double elapsed = row.t - t0_;
  const double margin = row.rhs + rep_.floor * elapsed - row.lhs;
  if (count_ > 0) {
    rep_.min_margin = count_ == 1 ? margin : std::min(rep_.min_margin, margin);
    if (margin < 0.0) rep_.pass = false;
  }
  if (!boltzmann_) {
    double hm = 0.0;
    for (int j = 0; j < box.np; ++j)
      for (int i = 0; i < box.nq; ++i) hm += model_.H(box.q_center(i), box.p_center(j)) * rho.at(i, j);
    row.h_moment = 0.5 * hm * box.cell_volume();
    row.h_moment_bound = f0_ + options_.rate + log_ratio_ - interaction_energy(rho, model_);
    if (row.h_moment > row.h_moment_bound + rep_.floor * elapsed) rep_.h_moment_pass = false;
  }
  rep_.rows.push_back(row);
  ++count_;
}

DissipationReport energy_dissipation_check(const PhaseTrajectory& traj, const HamiltonianModel& model,
                                           const VfpParams& params, const DissipationOptions& options) {
  check_trajectory(traj);
  DissipationMonitor mon(model, params, options);
  for (const auto& s : traj) mon.observe(s);
  return mon.report();
}

}  // namespace hamcg
