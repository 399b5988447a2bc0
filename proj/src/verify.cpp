#include "hamcg/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hamcg/coeffs.hpp"
#include "hamcg/errors.hpp"
#include "hamcg/functionals.hpp"
#include "hamcg/graphpde.hpp"
#include "hamcg/io.hpp"
#include "hamcg/parallel.hpp"
#include "hamcg/reeb.hpp"
#include "hamcg/sde.hpp"
#include "hamcg/vfp.hpp"

namespace hamcg {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Metric at_most(const std::string& name, double value, double limit) {
  return Metric{name, value, limit, value <= limit, false};
}

Metric at_least(const std::string& name, double value, double limit) {
  return Metric{name, value, limit, value >= limit, false};
}

Metric budget(const std::string& name, double seconds, double limit) {
  return Metric{name, seconds, limit, seconds <= limit, true};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double mean_energy(const HamiltonianModel& model, const PhaseDensity& d) {
  double s = 0.0;
  for (int j = 0; j < d.box.np; ++j)
    for (int i = 0; i < d.box.nq; ++i) s += model.H(d.box.q_center(i), d.box.p_center(j)) * d.at(i, j);
  return s * d.box.cell_volume();
}

long count_negative(const std::vector<double>& v) {
  return std::count_if(v.begin(), v.end(), [](double x) { return x < 0.0; });
}

struct CoefficientRun {
  ReebGraph graph;
  EdgeCoefficientTable table;
};

CoefficientRun double_well_table(bool quick) {
  CoefficientRun r;
  const int n = quick ? 200 : 400;
  r.graph = build_reeb_graph(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, n, n}, 3.0);
  TableOptions to;
  if (quick) {
    to.samples_per_edge = 24;
    to.curve.resolution = 384;
  }
  r.table = tabulate_coefficients(r.graph, to);
  return r;
}

}  // namespace

bool CriterionResult::pass() const {
  if (metrics.empty() || !error.empty()) return false;
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.ok; });
}

CriterionResult VerifySession::coefficient_identities() {
  const auto t0 = Clock::now();
  CriterionResult res{1, "coefficient identities (double well)", {}, {}, 0.0, {}};
  const CoefficientRun run = double_well_table(options_.quick);

  double ta_err = 0.0;
  for (const auto& e : run.table.edges) {
    const auto d = centered_derivative(e.h, e.TA);
    for (std::size_t i = 0; i < d.size(); ++i) ta_err = std::max(ta_err, rel(d[i], e.TB[i + 1]));
  }
  double kirchhoff = 0.0;
  for (const auto& k : run.table.kirchhoff) kirchhoff = std::max(kirchhoff, std::abs(k.relative));
  double area = 0.0;
  for (const auto& e : run.table.edges) {
    const std::size_t n = e.h.size();
    for (std::size_t i = 2; i + 2 < n; i += std::max<std::size_t>(1, n / 6)) {
      const double a = area_TA(run.graph, e.k, e.h[i]);
      res.raw["area_h"].push_back(e.h[i]);
      res.raw["area_TA"].push_back(a);
      res.raw["contour_TA"].push_back(e.TA[i]);
      area = std::max(area, rel(a, e.TA[i]));
    }
  }
  for (const auto& e : run.table.edges)
    for (double b : e.B) res.raw["B"].push_back(b);
  res.metrics.push_back(at_most("ta_prime_vs_tb_rel", ta_err, 1e-2));
  res.metrics.push_back(at_most("kirchhoff_rel", kirchhoff, 1e-2));
  res.metrics.push_back(at_most("contour_vs_area_rel", area, 1e-2));
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 60.0));
  return res;
}

CriterionResult VerifySession::harmonic_closed_forms() {
  const auto t0 = Clock::now();
  CriterionResult res{2, "harmonic closed forms", {}, {}, 0.0, {}};
  const HamiltonianModel model = make_preset("harmonic");
  const ReebGraph g = build_reeb_graph(model, BoxDomain{-3, 3, -3, 3, 256, 256}, 2.5);
  CurveOptions co;
  if (options_.quick) co.resolution = 512;
  double t_err = 0.0, a_err = 0.0;
  for (double h : {0.1, 0.5, 1.0, 2.0}) {
    const CurveIntegrals v = integrate_curve(model, extract_level_curve(g, h, 0, co));
    res.raw["h"].push_back(h);
    res.raw["T"].push_back(v.T);
    res.raw["A"].push_back(v.TA / v.T);
    t_err = std::max(t_err, rel(v.T, 2.0 * std::numbers::pi));
    a_err = std::max(a_err, rel(v.TA / v.T, h));
  }
  res.metrics.push_back(at_most("period_rel", t_err, 1e-3));
  res.metrics.push_back(at_most("diffusion_rel", a_err, 1e-3));
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 10.0));
  return res;
}

CriterionResult VerifySession::drift_constant() {
  const auto t0 = Clock::now();
  CriterionResult res{3, "drift B = 1/m", {}, {}, 0.0, {}};
  const bool quick = options_.quick;
  TableOptions to;
  if (quick) {
    to.samples_per_edge = 24;
    to.curve.resolution = 384;
  }
  struct Case {
    HamiltonianModel model;
    BoxDomain box;
    double h_max;
  };
  const int n = quick ? 160 : 300;
  const std::vector<Case> cases = {
      {make_preset("harmonic"), BoxDomain{-3, 3, -3, 3, n, n}, 2.5},
      {make_preset("double_well"), BoxDomain{-3, 3, -3, 3, n, n}, 3.0},
      {make_preset("double_well", {{"mass", 2.0}}), BoxDomain{-2.6, 2.6, -3.2, 3.2, n, n}, 2.0},
  };
  double worst = 0.0;
  for (const auto& c : cases) {
    const EdgeCoefficientTable tab = tabulate_coefficients(build_reeb_graph(c.model, c.box, c.h_max), to);
    for (const auto& e : tab.edges)
      for (double b : e.B) {
        res.raw["B"].push_back(b);
        res.raw["mass"].push_back(c.model.mass);
        worst = std::max(worst, std::abs(b - 1.0 / c.model.mass) * c.model.mass);
      }
  }
  res.metrics.push_back(at_most("max_abs_B_minus_inv_m_times_m", worst, 1e-3));
  res.seconds = since(t0);
  return res;
}

CriterionResult VerifySession::mean_energy_law() {
  const auto t0 = Clock::now();
  CriterionResult res{4, "mean-energy law", {}, {}, 0.0, {}};
  const bool quick = options_.quick;
  struct Case {
    std::string name;
    double q0, p0;
  };
  const std::vector<Case> cases = {{"harmonic", 1.0, 0.0}, {"double_well", 1.0, 0.6}};
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& c = cases[ci];
    const HamiltonianModel model = make_preset(c.name);
    const double inv_m = 1.0 / model.mass;

    // Particles of the randomly perturbed Hamiltonian system.
    SdeParams sp;
    sp.kind = SdeKind::perturbed_hamiltonian;
    sp.epsilon = 0.01;
    sp.dt = 1e-3;
    sp.t_end = 0.5;
    const std::size_t n = quick ? 2000 : 10000;
    const ParticleEnsemble init = ParticleEnsemble::at_point(n, c.q0, c.p0, options_.seed + ci);
    const double times[] = {sp.t_end};
    const auto snaps = simulate_perturbed_hamiltonian(model, sp, init, times);
    const ParticleEnsemble& fin = snaps.back();
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dh = model.H(fin.q[i], fin.p[i]) - model.H(init.q[i], init.p[i]);
      sum += dh;
      sq += dh * dh;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1)) / sp.t_end;
    const double sde_rate = mean / sp.t_end;
    res.raw["sde_rate_" + c.name] = {sde_rate, se};
    res.metrics.push_back(at_most("sde_zscore_" + c.name, std::abs(sde_rate - inv_m) / se, 3.0));

    // Phase-space solver, small-noise form.
    const int m = quick ? 60 : 120;
    const BoxDomain box = c.name == "harmonic" ? BoxDomain{-6, 6, -6, 6, m, m} : BoxDomain{-3.2, 3.2, -6, 6, m, m};
    const PhaseDensity rho0 = sample_phase_density(box, [&](double q, double p) { return std::exp(-model.H(q, p) / 0.3); });
    VfpParams vp;
    vp.form = VfpForm::small_noise;
    vp.epsilon = 1.0;
    vp.dt = 2e-3;
    vp.t_end = 0.5;
    long observed = 0;
    DissipationMonitor mon(model, vp);
    const VfpTrajectory tr = solve_vfp(model, rho0, vp, [&](const PhaseDensity& d) {
      mon.observe(d);
      observed += count_negative(d.rho);
    });
    CriterionResult dr{9, "small-noise form " + c.name, {}, {}, 0.0, {}};
    dr.metrics.push_back(at_least("min_margin", mon.report().min_margin, 0.0));
    dr.metrics.push_back(at_least("h_moment_bound", mon.report().h_moment_pass ? 1.0 : 0.0, 1.0));
    dissipation_runs_.push_back(dr);
    const double pde_rate = (mean_energy(model, tr.snapshots.back()) - mean_energy(model, rho0)) / vp.t_end;
    res.raw["pde_rate_" + c.name] = {pde_rate};
    res.metrics.push_back(at_most("pde_rel_" + c.name, rel(pde_rate, inv_m), 0.02));
    ledger_.max_phase_mass_drift = std::max(ledger_.max_phase_mass_drift, tr.diagnostics.max_mass_drift);
    ledger_.flagged_negative += tr.diagnostics.negativity_events;
    ledger_.observed_negative += observed;
    ++ledger_.runs;

    // Graph solver.
    const bool harmonic = c.name == "harmonic";
    const double h_max = harmonic ? 10.0 : 6.0;
    const double pm = 1.05 * std::sqrt(2.0 * model.mass * h_max);
    const double qm = harmonic ? pm : 3.3;
    const int gn = quick ? (harmonic ? 160 : 240) : (harmonic ? 256 : 400);
    const ReebGraph graph = build_reeb_graph(model, BoxDomain{-qm, qm, -pm, pm, gn, gn}, h_max);
    TableOptions to;
    if (quick) {
      to.samples_per_edge = 24;
      to.curve.resolution = 384;
    }
    const EdgeCoefficientTable tab = tabulate_coefficients(graph, to);
    const DiscreteGenerator gen = assemble(graph, tab, uniform_mesh(graph, quick ? 60 : (harmonic ? 200 : 120)));
    const double hc = harmonic ? 1.0 : 0.1, w = harmonic ? 0.02 : 0.001;
    const int k0 = harmonic ? 0 : 0;
    const GraphDensity g0 =
        project_initial([&](int k, double h) { return k == k0 ? std::exp(-(h - hc) * (h - hc) / w) : 0.0; }, gen);
    const double t_end = 0.25;
    const GraphTrajectory gt = evolve(gen, g0, t_end, 1e-3);
    const double graph_rate = (gt.snapshots.back().mean_h(gen) - g0.mean_h(gen)) / t_end;
    res.raw["graph_rate_" + c.name] = {graph_rate};
    res.metrics.push_back(at_most("graph_rel_" + c.name, rel(graph_rate, inv_m), 0.02));
    ledger_.max_graph_mass_drift_per_step =
        std::max(ledger_.max_graph_mass_drift_per_step, gt.diagnostics.max_mass_drift_per_step);
    ledger_.flagged_negative += gt.diagnostics.negativity_events;
    for (const auto& s : gt.snapshots) ledger_.observed_negative += count_negative(s.f);
    ++ledger_.runs;
  }
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 300.0));
  return res;
}

CriterionResult VerifySession::graph_limit() {
  const auto t0 = Clock::now();
  CriterionResult res{5, "particles vs graph diffusion (double well)", {}, {}, 0.0, {}};
  const bool quick = options_.quick;
  const HamiltonianModel model = make_preset("double_well");
  const int gn = quick ? 240 : 400;
  const ReebGraph graph = build_reeb_graph(model, BoxDomain{-3.5, 3.5, -3.3, 3.3, gn, gn}, 5.0);
  TableOptions to;
  if (quick) {
    to.samples_per_edge = 24;
    to.curve.resolution = 384;
  }
  const EdgeCoefficientTable tab = tabulate_coefficients(graph, to);

  const double q0 = 1.0, p0 = std::sqrt(0.2);  // h = 0.1 in the right well
  const double t_end = 0.5;
  SdeParams sp;
  sp.kind = SdeKind::perturbed_hamiltonian;
  sp.epsilon = 1e-3;
  sp.dt = 1e-4;
  sp.t_end = t_end;
  const std::size_t n = quick ? 2000 : 10000;
  const ParticleEnsemble init = ParticleEnsemble::at_point(n, q0, p0, options_.seed + 101);
  const double times[] = {t_end};
  const ParticleEnsemble fin = simulate_perturbed_hamiltonian(model, sp, init, times).back();
  const int bins = 20;
  const GraphHistogram hist = empirical_pushforward(graph, fin, bins);

  const int sub = 4;
  const DiscreteGenerator gen = assemble(graph, tab, histogram_mesh(hist, sub));
  const GraphDensity g0 = project_initial(graph, {{q0, p0, 1.0}}, gen);
  const GraphTrajectory gt = evolve(gen, g0, t_end, 5e-4);
  const GraphDensity& gf = gt.snapshots.back();
  ledger_.max_graph_mass_drift_per_step =
      std::max(ledger_.max_graph_mass_drift_per_step, gt.diagnostics.max_mass_drift_per_step);
  ledger_.flagged_negative += gt.diagnostics.negativity_events;
  ledger_.observed_negative += count_negative(gf.f);
  ++ledger_.runs;

  double l1 = hist.spill + hist.dropped;
  for (std::size_t k = 0; k < hist.mass.size(); ++k) {
    const std::size_t off = gen.mesh.offset(static_cast<int>(k));
    for (int b = 0; b < bins; ++b) {
      double m = 0.0;
      for (int s = 0; s < sub; ++s) m += gf.cell_mass(gen, off + static_cast<std::size_t>(b * sub + s));
      res.raw["empirical"].push_back(hist.mass[k][b]);
      res.raw["graph"].push_back(m);
      l1 += std::abs(m - hist.mass[k][b]);
    }
  }
  res.raw["spill_dropped"] = {hist.spill, hist.dropped};
  res.metrics.push_back(at_most("histogram_l1", l1, 0.10));
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 300.0));
  return res;
}

CriterionResult VerifySession::overdamped_limit() {
  const auto t0 = Clock::now();
  CriterionResult res{6, "overdamped limit (quadratic V)", {}, {}, 0.0, {}};
  const bool quick = options_.quick;
  const HamiltonianModel model = make_preset("harmonic");
  OverdampedOptions oo;
  if (quick) oo.box = BoxDomain{-5, 5, -5, 5, 50, 40};
  std::map<double, DissipationMonitor> monitors;
  std::map<double, long> observed;
  VfpParams vp;
  oo.observer = [&](double g, const PhaseDensity& d) {
    auto it = monitors.find(g);
    if (it == monitors.end()) {
      vp.gamma = g;
      it = monitors.emplace(g, DissipationMonitor(model, vp)).first;
    }
    it->second.observe(d);
    observed[g] += count_negative(d.rho);
  };
  const std::vector<double> gammas = quick ? std::vector<double>{5.0, 10.0} : std::vector<double>{5.0, 10.0, 20.0};
  const OverdampedReport rep =
      overdamped_convergence_report(model, gammas, [](double q) { return std::exp(-(q - 1.0) * (q - 1.0)); }, 1.0, oo);
  for (const auto& r : rep.rows) {
    res.raw["gamma"].push_back(r.gamma);
    res.raw["l1"].push_back(r.l1);
    res.raw["w1"].push_back(r.w1);
    ledger_.max_phase_mass_drift = std::max(ledger_.max_phase_mass_drift, r.mass_drift);
    ledger_.flagged_negative += r.negativity_events;
    ledger_.observed_negative += observed[r.gamma];
    ++ledger_.runs;
  }
  for (auto& [g, mon] : monitors) {
    CriterionResult d{9, "overdamped gamma=" + fmt(g), {}, {}, 0.0, {}};
    d.metrics.push_back(at_least("min_margin", mon.report().min_margin, 0.0));
    d.metrics.push_back(at_least("h_moment_bound", mon.report().h_moment_pass ? 1.0 : 0.0, 1.0));
    dissipation_runs_.push_back(d);
  }
  res.metrics.push_back(at_least("l1_strictly_decreasing", rep.monotone ? 1.0 : 0.0, 1.0));
  res.metrics.push_back(at_most("l1_at_largest_gamma", rep.rows.back().l1, 0.05));

  // Ornstein-Uhlenbeck variance law for the limiting equation.
  const double s0 = 0.25;
  const PositionDensity sig0 =
      sample_position_density(-6, 6, quick ? 120 : 240, [&](double q) { return std::exp(-q * q / (2.0 * s0)); });
  SmoluchowskiParams sp;
  sp.dt = 1e-3;
  sp.t_end = 1.0;
  sp.snapshot_times = {0.25, 0.5, 1.0};
  const PositionTrajectory st = solve_smoluchowski(model, sig0, sp);
  ledger_.max_phase_mass_drift = std::max(ledger_.max_phase_mass_drift, st.max_mass_drift);
  ledger_.flagged_negative += st.negativity_events;
  double ou = 0.0;
  for (std::size_t i = 1; i < st.snapshots.size(); ++i) {
    const auto& s = st.snapshots[i];
    res.raw["ou_t"].push_back(s.t);
    res.raw["ou_var"].push_back(s.variance());
    ledger_.observed_negative += count_negative(s.sigma);
    ou = std::max(ou, rel(s.variance(), 1.0 + (s0 - 1.0) * std::exp(-2.0 * s.t)));
  }
  ++ledger_.runs;
  res.raw["ou_s0"] = {s0};
  res.metrics.push_back(at_most("ou_variance_rel", ou, 0.01));
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 300.0));
  return res;
}

CriterionResult VerifySession::local_equilibrium() {
  const auto t0 = Clock::now();
  CriterionResult res{7, "local equilibrium (gamma = 20)", {}, {}, 0.0, {}};
  const HamiltonianModel model = make_preset("harmonic");
  const BoxDomain box = options_.quick ? BoxDomain{-5, 5, -5, 5, 50, 40} : BoxDomain{-5, 5, -5, 5, 100, 80};
  const PhaseDensity init = sample_phase_density(box, [](double q, double p) {
    return std::exp(-(q - 1.0) * (q - 1.0) / 0.5 - (p - 1.0) * (p - 1.0) / 0.5);
  });
  VfpParams vp;
  vp.gamma = 20.0;
  vp.dt = 0.25 / (vp.gamma * vp.gamma);
  vp.t_end = 1.0;
  DissipationMonitor mon(model, vp);
  long observed = 0;
  const VfpTrajectory tr = solve_vfp(model, init, vp, [&](const PhaseDensity& d) {
    mon.observe(d);
    observed += count_negative(d.rho);
  });
  ledger_.max_phase_mass_drift = std::max(ledger_.max_phase_mass_drift, tr.diagnostics.max_mass_drift);
  ledger_.flagged_negative += tr.diagnostics.negativity_events;
  ledger_.observed_negative += observed;
  ++ledger_.runs;
  CriterionResult d{9, "local equilibrium gamma=20", {}, {}, 0.0, {}};
  d.metrics.push_back(at_least("min_margin", mon.report().min_margin, 0.0));
  d.metrics.push_back(at_least("h_moment_bound", mon.report().h_moment_pass ? 1.0 : 0.0, 1.0));
  dissipation_runs_.push_back(d);

  const double l1 = maxwellian_conditional_l1(tr.snapshots.back(), model);
  res.raw["l1"] = {l1};
  res.metrics.push_back(at_most("conditional_maxwellian_l1", l1, 0.05));
  res.seconds = since(t0);
  return res;
}

CriterionResult VerifySession::rate_functional() {
  const auto t0 = Clock::now();
  CriterionResult res{8, "rate functional consistency", {}, {}, 0.0, {}};
  const bool quick = options_.quick;
  const HamiltonianModel model = make_preset("harmonic");
  const BoxDomain box = quick ? BoxDomain{-5, 5, -5, 5, 30, 24} : BoxDomain{-5, 5, -5, 5, 50, 40};
  const PhaseDensity init =
      sample_phase_density(box, [](double q, double p) { return std::exp(-(q - 1.0) * (q - 1.0) / 0.5 - p * p / 2.0); });
  RateOptions ro;
  ro.defect_tolerance = std::numeric_limits<double>::infinity();

  VfpParams vp;
  vp.gamma = 1.0;
  vp.dt = 0.01;
  vp.t_end = 1.0;
  vp.snapshot_every = 1;
  DissipationMonitor mon(model, vp);
  long observed = 0;
  const VfpTrajectory exact = solve_vfp(model, init, vp, [&](const PhaseDensity& d) {
    mon.observe(d);
    observed += count_negative(d.rho);
  });
  ledger_.max_phase_mass_drift = std::max(ledger_.max_phase_mass_drift, exact.diagnostics.max_mass_drift);
  ledger_.flagged_negative += exact.diagnostics.negativity_events;
  ledger_.observed_negative += observed;
  ++ledger_.runs;
  CriterionResult d{9, "rate floor run gamma=1", {}, {}, 0.0, {}};
  d.metrics.push_back(at_least("min_margin", mon.report().min_margin, 0.0));
  d.metrics.push_back(at_least("h_moment_bound", mon.report().h_moment_pass ? 1.0 : 0.0, 1.0));
  dissipation_runs_.push_back(d);
  const RateReport floor = rate_functional_h(exact.snapshots, model, vp, ro);
  res.raw["floor"] = {floor.value, floor.floor_estimate, floor.defect};
  res.metrics.push_back(at_most("exact_trajectory_rate", floor.value, 1e-4));

  const double h0 = 0.5;
  VfpParams pp = vp;
  pp.drift_perturbation = h0;
  const VfpTrajectory pert = solve_vfp(model, init, pp);
  const RateReport pr = rate_functional_h(pert.snapshots, model, vp, ro);
  const double horizon = vp.t_end;
  res.raw["perturbed"] = {pr.value, h0, horizon};
  res.metrics.push_back(at_most("perturbed_rate_rel", rel(pr.value, 0.5 * h0 * h0 * horizon), 0.05));

  // Randomised trajectories: solver output with random friction, drift
  // perturbation, initial data, multiplicative noise and time reversal.
  std::mt19937_64 rng(options_.seed + 808);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const BoxDomain small{-5, 5, -5, 5, 24, 20};
  const int count = quick ? 10 : 100;
  int violations = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < count; ++r) {
    VfpParams rp;
    rp.gamma = 0.5 + 1.5 * U(rng);
    rp.drift_perturbation = 2.0 * U(rng) - 1.0;
    rp.dt = 0.02;
    rp.t_end = 0.2;
    rp.snapshot_every = 1;
    rp.throw_on_leak = false;
    const double mq = 2.0 * U(rng) - 1.0, vq = 0.3 + U(rng), mp = U(rng) - 0.5, vpv = 0.5 + U(rng);
    const PhaseDensity ri = sample_phase_density(small, [&](double q, double p) {
      return std::exp(-(q - mq) * (q - mq) / (2 * vq) - (p - mp) * (p - mp) / (2 * vpv));
    });
    PhaseTrajectory traj = solve_vfp(model, ri, rp).snapshots;
    const double amp = 0.1 * U(rng);
    for (auto& s : traj) {
      for (double& v : s.rho) v *= 1.0 + amp * (2.0 * U(rng) - 1.0);
      s.normalise();
    }
    if (r % 3 == 0) {
      std::reverse(traj.begin(), traj.end());
      for (std::size_t i = 0; i < traj.size(); ++i) traj[i].t = static_cast<double>(i) * rp.dt;
    }
    VfpParams ev = rp;
    ev.drift_perturbation = 0.0;
    ro.estimate_floor = false;
    const double hv = rate_functional_h(traj, model, ev, ro).value;
    DualityDictionary dict = default_dictionary(small, traj.back().t);
    dict.terms.push_back(TestFunction{"p", [](double, double, double p) { return p; },
                                      [](double, double, double) { return 1.0; },
                                      [](double, double, double) { return 0.0; }});
    const double dv = rate_lower_bound_duality(traj, model, ev, dict).value;
    const double gap = dv - hv;
    worst_gap = std::max(worst_gap, gap / std::max(1.0, std::abs(hv)));
    if (gap > 1e-12 * std::max(1.0, std::abs(hv))) ++violations;
    res.raw["random_h"].push_back(hv);
    res.raw["random_dual"].push_back(dv);
  }
  res.metrics.push_back(at_most("duality_violations", violations, 0.0));
  res.raw["random_worst_gap"] = {worst_gap};
  res.seconds = since(t0);
  res.metrics.push_back(budget("seconds", res.seconds, 120.0));
  return res;
}

CriterionResult VerifySession::energy_dissipation() {
  const auto t0 = Clock::now();
  CriterionResult res{9, "energy-dissipation inequality", {}, {}, 0.0, {}};
  for (int id : {4, 6, 7, 8})
    if (!done_.count(id)) run(id);
  int violations = 0, h_violations = 0;
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& r : dissipation_runs_) {
    if (!r.metrics[0].ok) ++violations;
    if (!r.metrics[1].ok) ++h_violations;
    margin = std::min(margin, r.metrics[0].value);
    res.raw["margin"].push_back(r.metrics[0].value);
  }
  res.metrics.push_back(at_least("trajectories_checked", static_cast<double>(dissipation_runs_.size()), 1.0));
  res.metrics.push_back(at_most("violations", violations, 0.0));
  res.metrics.push_back(at_most("h_moment_violations", h_violations, 0.0));
  res.metrics.push_back(at_least("min_margin", margin, 0.0));
  res.seconds = since(t0);
  return res;
}

CriterionResult VerifySession::invariants() {
  const auto t0 = Clock::now();
  CriterionResult res{10, "conservation and positivity", {}, {}, 0.0, {}};
  for (int id : {4, 5, 6, 7, 8})
    if (!done_.count(id)) run(id);
  res.metrics.push_back(at_most("phase_mass_drift", ledger_.max_phase_mass_drift, 1e-8));
  res.metrics.push_back(at_most("graph_mass_drift_per_step", ledger_.max_graph_mass_drift_per_step, 1e-10));
  res.metrics.push_back(
      at_most("unflagged_negative_cells", static_cast<double>(std::max(0L, ledger_.observed_negative - ledger_.flagged_negative)), 0.0));
  res.raw["flagged_negative"] = {static_cast<double>(ledger_.flagged_negative)};
  res.raw["runs"] = {static_cast<double>(ledger_.runs)};
  res.seconds = since(t0);
  return res;
}

CriterionResult VerifySession::determinism() {
  const auto t0 = Clock::now();
  CriterionResult res{11, "determinism", {}, {}, 0.0, {}};
  VerifyOptions q = options_;
  q.quick = true;
  const std::vector<std::string> suites = {"coefficients", "mean-energy", "graph-limit", "overdamped", "rate",
                                           "invariants"};
  auto artifacts = [&](int threads) {
    const int saved = thread_count();
    set_thread_count(threads);
    std::string out = verify_csv(run_verify(suites, q));
    // One raw artifact per stochastic and deterministic solver family.
    SdeParams sp;
    sp.kind = SdeKind::perturbed_hamiltonian;
    sp.epsilon = 0.01;
    sp.dt = 1e-3;
    sp.t_end = 0.05;
    const double times[] = {0.05};
    out += ensemble_csv(simulate_perturbed_hamiltonian(make_preset("double_well"), sp,
                                                       ParticleEnsemble::at_point(500, 1.0, 0.3, q.seed), times));
    set_thread_count(saved);
    return out;
  };
  const std::string a = artifacts(1);
  const std::string b = artifacts(2);
  res.raw["hash"] = {static_cast<double>(fnv1a64(a) >> 11), static_cast<double>(fnv1a64(b) >> 11)};
  res.metrics.push_back(at_most("byte_mismatch", a == b ? 0.0 : 1.0, 0.0));
  res.seconds = since(t0);
  return res;
}

CriterionResult VerifySession::run(int id) {
  done_.insert(id);
  switch (id) {
    case 1: return coefficient_identities();
    case 2: return harmonic_closed_forms();
    case 3: return drift_constant();
    case 4: return mean_energy_law();
    case 5: return graph_limit();
    case 6: return overdamped_limit();
    case 7: return local_equilibrium();
    case 8: return rate_functional();
    case 9: return energy_dissipation();
    case 10: return invariants();
    case 11: return determinism();
    default: fail(ErrorKind::InvalidArgument, "no criterion " + std::to_string(id));
  }
}

std::vector<int> suite_criteria(const std::string& suite) {
  if (suite == "coefficients") return {1, 2, 3};
  if (suite == "mean-energy") return {4};
  if (suite == "graph-limit") return {5};
  if (suite == "overdamped") return {6, 7};
  if (suite == "rate") return {8, 9};
  if (suite == "invariants") return {10};
  if (suite == "determinism") return {11};
  if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  fail(ErrorKind::ConfigInvalid, "unknown verify suite '" + suite + "'");
}

std::vector<CriterionResult> run_verify(const std::vector<std::string>& suites, const VerifyOptions& options) {
  std::vector<int> ids;
  for (const auto& s : suites)
    for (int id : suite_criteria(s)) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  VerifySession session(options);
  std::vector<CriterionResult> out;
  for (int id : ids) {
    try {
      out.push_back(session.run(id));
    } catch (const Error& e) {
      CriterionResult r{id, "criterion " + std::to_string(id), {}, {}, 0.0, {}};
      r.error = e.what();
      out.push_back(r);
    }
  }
  return out;
}

std::string verify_csv(const std::vector<CriterionResult>& results) {
  std::string s = "criterion,name,metric,value,limit,status\n";
  for (const auto& r : results) {
    for (const auto& m : r.metrics) {
      s += std::to_string(r.id) + ",\"" + r.name + "\"," + m.name + "," + (m.timing ? "" : fmt(m.value)) + "," +
           fmt(m.limit) + "," + (m.ok ? "PASS" : "FAIL") + "\n";
    }
    if (!r.error.empty()) s += std::to_string(r.id) + ",\"" + r.name + "\",error,,,\"" + r.error + "\"\n";
    s += std::to_string(r.id) + ",\"" + r.name + "\",criterion,,," + (r.pass() ? "PASS" : "FAIL") + "\n";
  }
  return s;
}

}  // namespace hamcg
