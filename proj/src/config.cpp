#include "hamcg/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "hamcg/coeffs.hpp"
#include "hamcg/errors.hpp"
#include "hamcg/functionals.hpp"
#include "hamcg/graphpde.hpp"
#include "hamcg/io.hpp"
#include "hamcg/model.hpp"
#include "hamcg/parallel.hpp"
#include "hamcg/reeb.hpp"
#include "hamcg/sde.hpp"
#include "hamcg/verify.hpp"
#include "hamcg/vfp.hpp"
#include "json.hpp"

namespace hamcg {

namespace {

using json = nlohmann::json;

// Reads typed fields from a JSON object, fills defaults into a canonical copy
// and remembers every problem so they can be reported in one error.
class Reader {
 public:
  Reader(const json* src, std::string path, std::vector<std::string>* problems)
      : src_(src), path_(std::move(path)), problems_(problems), out_(json::object()) {
    if (src_ && !src_->is_object()) {
      problems_->push_back(path_ + ": expected an object");
      src_ = nullptr;
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    T v = fallback;
    if (src_ && src_->contains(key)) {
      const json& j = (*src_)[key];
      if (!matches<T>(j)) {
        problems_->push_back(where(key) + ": wrong type");
      } else {
        v = j.get<T>();
      }
    }
    out_[key] = v;
    return v;
  }

  double positive(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) problems_->push_back(where(key) + ": must be positive");
    return v;
  }

  int count(const std::string& key, int fallback, int lo = 1) {
    const int v = get<int>(key, fallback);
    if (v < lo) problems_->push_back(where(key) + ": must be >= " + std::to_string(lo));
    return v;
  }

  std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
    const std::string v = get<std::string>(key, fallback);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
      problems_->push_back(where(key) + ": unknown value '" + v + "'");
    return v;
  }

  bool present(const std::string& key) const { return src_ && src_->contains(key); }

  Reader child(const std::string& key) {
    seen_.insert(key);
    return Reader(present(key) ? &(*src_)[key] : nullptr, where(key), problems_);
  }

  void put(const std::string& key, json value) { out_[key] = std::move(value); }

  // Closes the object: flags unread keys and returns the canonical form.
  json finish() {
    if (src_)
      for (auto it = src_->begin(); it != src_->end(); ++it)
        if (!seen_.count(it.key())) problems_->push_back(where(it.key()) + ": unknown key");
    return out_;
  }

 private:
  template <class T>
  static bool matches(const json& j) {
    if constexpr (std::is_same_v<T, bool>) return j.is_boolean();
    else if constexpr (std::is_same_v<T, int>) return j.is_number_integer();
    else if constexpr (std::is_same_v<T, std::uint64_t>) return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0);
    else if constexpr (std::is_same_v<T, double>) return j.is_number();
    else if constexpr (std::is_same_v<T, std::string>) return j.is_string();
    else if constexpr (std::is_same_v<T, std::vector<double>>) {
      return j.is_array() && std::all_of(j.begin(), j.end(), [](const json& x) { return x.is_number(); });
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      return j.is_array() && std::all_of(j.begin(), j.end(), [](const json& x) { return x.is_string(); });
    } else {
      return false;
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* src_;
  std::string path_;
  std::vector<std::string>* problems_;
  std::set<std::string> seen_;
  json out_;
};

struct ModelSection {
  HamiltonianModel model;
};

struct GaussianInit {
  double q_mean = 1.0, q_var = 0.25, p_mean = 0.0, p_var = 1.0;
};

struct Settings {
  std::string scenario;
  std::uint64_t seed = 1;
  int threads = 0;
  HamiltonianModel model;
  BoxDomain box;
  double h_max = 3.0;
  TableOptions table;
  CriticalOptions critical;

  // simulate-sde
  SdeParams sde;
  int particles = 1000;
  double q0 = 1.0, p0 = 0.0;
  std::vector<double> sde_times;

  // solve-vfp
  VfpParams vfp;
  GaussianInit vfp_init;

  // solve-smoluchowski
  SmoluchowskiParams smol;
  double smol_lo = -6.0, smol_hi = 6.0, smol_mean = 0.0, smol_var = 0.25;
  int smol_n = 240;

  // solve-graph
  int graph_cells = 100;
  double graph_dt = 1e-3, graph_t_end = 0.25;
  int graph_edge = 0;
  double graph_h_center = 0.5, graph_width = 0.1;
  std::vector<double> graph_times;

  // overdamped-report
  std::vector<double> gammas{5.0, 10.0, 20.0};
  double od_t = 1.0, od_mean = 1.0, od_var = 0.5;

  // graph-limit-report
  double gl_epsilon = 1e-3, gl_t_end = 0.5, gl_sde_dt = 1e-4, gl_pde_dt = 5e-4;
  int gl_particles = 10000, gl_bins = 20, gl_sub = 4;
  double gl_q0 = 1.0, gl_p0 = 0.4472135954999579;

  // verify
  std::vector<std::string> suites{"all"};
  bool quick = false;

  json canonical;
};

const std::vector<std::string> kScenarios = {"critical-points", "build-graph",      "coefficients",
                                             "simulate-sde",    "solve-vfp",        "solve-smoluchowski",
                                             "solve-graph",     "overdamped-report", "graph-limit-report",
                                             "verify"};

Settings read_settings(const json& doc, std::optional<std::uint64_t> seed_override) {
  std::vector<std::string> problems;
  if (!doc.is_object() || doc.empty()) fail(ErrorKind::ConfigInvalid, "config is empty; required key: scenario");
  Settings s;
  Reader root(&doc, "", &problems);
  if (!doc.contains("scenario")) problems.push_back("scenario: required");
  s.scenario = root.choice("scenario", "", kScenarios);
  s.seed = root.get<std::uint64_t>("seed", 1);
  if (seed_override) {
    s.seed = *seed_override;
    root.put("seed", s.seed);
  }
  s.threads = root.count("threads", 0, 0);

  {
    Reader m = root.child("model");
    const std::vector<std::string> names = preset_names();
    const std::string preset = m.choice("preset", "double_well", names);
    Reader pr = m.child("params");
    PresetParams params;
    json pc = json::object();
    if (m.present("params") && doc["model"]["params"].is_object()) {
      for (auto it = doc["model"]["params"].begin(); it != doc["model"]["params"].end(); ++it) {
        if (!it.value().is_number()) problems.push_back("model.params." + it.key() + ": wrong type");
        else params[it.key()] = it.value().get<double>();
        pc[it.key()] = it.value();
      }
    } else {
      pr.finish();
    }
    m.put("params", pc);
    if (std::find(names.begin(), names.end(), preset) != names.end()) {
      try {
        s.model = make_preset(preset, params);
      } catch (const Error& e) {
        problems.push_back(std::string("model.params: ") + e.what());
      }
    }
    if (m.present("interaction")) {
      Reader ir = m.child("interaction");
      Interaction in;
      in.kind = ir.choice("kind", "quadratic", {"quadratic", "gaussian"}) == "gaussian" ? InteractionKind::gaussian
                                                                                      : InteractionKind::quadratic;
      in.strength = ir.get<double>("strength", 1.0);
      in.width = ir.positive("width", 1.0);
      s.model.interaction = in;
      m.put("interaction", ir.finish());
    }
    root.put("model", m.finish());
  }
  {
    // Phase-density solvers need room in p for the Maxwellian tails.
    const bool phase = s.scenario == "solve-vfp" || s.scenario == "overdamped-report";
    const BoxDomain def = phase ? BoxDomain{-4, 4, -7, 7, 96, 112} : BoxDomain{-3, 3, -3, 3, 256, 256};
    Reader b = root.child("box");
    s.box.q_lo = b.get<double>("q_lo", def.q_lo);
    s.box.q_hi = b.get<double>("q_hi", def.q_hi);
    s.box.p_lo = b.get<double>("p_lo", def.p_lo);
    s.box.p_hi = b.get<double>("p_hi", def.p_hi);
    s.box.nq = b.count("nq", def.nq, 8);
    s.box.np = b.count("np", def.np, 8);
    if (!(s.box.q_lo < s.box.q_hi) || !(s.box.p_lo < s.box.p_hi)) problems.push_back("box: lower corner must be below upper corner");
    root.put("box", b.finish());
  }
  {
    Reader g = root.child("graph");
    s.h_max = g.positive("h_max", 3.0);
    root.put("graph", g.finish());
  }
  {
    Reader c = root.child("coefficients");
    s.table.samples_per_edge = c.count("samples_per_edge", 64, 4);
    s.table.curve.resolution = c.count("resolution", 1024, 16);
    root.put("coefficients", c.finish());
  }
  {
    Reader c = root.child("sde");
    s.sde.kind = c.choice("kind", "langevin", {"langevin", "perturbed"}) == "perturbed" ? SdeKind::perturbed_hamiltonian
                                                                                      : SdeKind::vfp_langevin;
    s.sde.scheme = c.choice("scheme", "splitting", {"splitting", "euler_maruyama"}) == "euler_maruyama"
                       ? SdeScheme::euler_maruyama
                       : SdeScheme::splitting;
    s.sde.gamma = c.positive("gamma", 1.0);
    s.sde.theta = c.positive("theta", 1.0);
    s.sde.epsilon = c.positive("epsilon", 0.01);
    s.sde.dt = c.positive("dt", 1e-3);
    s.sde.t_end = c.positive("t_end", 1.0);
    s.sde.noise = c.get<bool>("noise", true);
    s.particles = c.count("particles", 1000);
    s.q0 = c.get<double>("q0", 1.0);
    s.p0 = c.get<double>("p0", 0.0);
    s.sde_times = c.get<std::vector<double>>("snapshot_times", {});
    root.put("sde", c.finish());
  }
  auto read_init = [&](Reader& parent, GaussianInit& init) {
    Reader i = parent.child("init");
    init.q_mean = i.get<double>("q_mean", init.q_mean);
    init.q_var = i.positive("q_var", init.q_var);
    init.p_mean = i.get<double>("p_mean", init.p_mean);
    init.p_var = i.positive("p_var", init.p_var);
    parent.put("init", i.finish());
  };
  {
    Reader v = root.child("vfp");
    s.vfp.form = v.choice("form", "gamma_scaled", {"gamma_scaled", "small_noise"}) == "small_noise"
                     ? VfpForm::small_noise
                     : VfpForm::gamma_scaled;
    s.vfp.gamma = v.positive("gamma", 1.0);
    s.vfp.theta = v.positive("theta", 1.0);
    s.vfp.epsilon = v.positive("epsilon", 1.0);
    s.vfp.dt = v.positive("dt", 1e-3);
    s.vfp.t_end = v.positive("t_end", 1.0);
    s.vfp.drift_perturbation = v.get<double>("drift_perturbation", 0.0);
    s.vfp.leak_tolerance = v.positive("leak_tolerance", 1e-4);
    s.vfp.throw_on_leak = v.get<bool>("throw_on_leak", true);
    s.vfp.snapshot_times = v.get<std::vector<double>>("snapshot_times", {});
    read_init(v, s.vfp_init);
    root.put("vfp", v.finish());
  }
  {
    Reader v = root.child("smoluchowski");
    s.smol.dt = v.positive("dt", 1e-3);
    s.smol.t_end = v.positive("t_end", 1.0);
    s.smol.snapshot_times = v.get<std::vector<double>>("snapshot_times", {});
    s.smol_lo = v.get<double>("q_lo", -6.0);
    s.smol_hi = v.get<double>("q_hi", 6.0);
    s.smol_n = v.count("n", 240, 8);
    s.smol_mean = v.get<double>("mean", 0.0);
    s.smol_var = v.positive("var", 0.25);
    if (!(s.smol_lo < s.smol_hi)) problems.push_back("smoluchowski: q_lo must be below q_hi");
    root.put("smoluchowski", v.finish());
  }
  {
    Reader g = root.child("graph_pde");
    s.graph_cells = g.count("cells_per_edge", 100, 4);
    s.graph_dt = g.positive("dt", 1e-3);
    s.graph_t_end = g.positive("t_end", 0.25);
    s.graph_edge = g.count("init_edge", 0, 0);
    s.graph_h_center = g.get<double>("init_h_center", 0.5);
    s.graph_width = g.positive("init_width", 0.1);
    s.graph_times = g.get<std::vector<double>>("snapshot_times", {});
    root.put("graph_pde", g.finish());
  }
  {
    Reader o = root.child("overdamped");
    s.gammas = o.get<std::vector<double>>("gammas", s.gammas);
    if (s.gammas.empty() || std::any_of(s.gammas.begin(), s.gammas.end(), [](double g) { return !(g > 0.0); }))
      problems.push_back("overdamped.gammas: must be a non-empty list of positive values");
    s.od_t = o.positive("t_probe", 1.0);
    s.od_mean = o.get<double>("q_mean", 1.0);
    s.od_var = o.positive("q_var", 0.5);
    root.put("overdamped", o.finish());
  }
  {
    Reader g = root.child("graph_limit");
    s.gl_epsilon = g.positive("epsilon", 1e-3);
    s.gl_t_end = g.positive("t_end", 0.5);
    s.gl_sde_dt = g.positive("sde_dt", 1e-4);
    s.gl_pde_dt = g.positive("pde_dt", 5e-4);
    s.gl_particles = g.count("particles", 10000);
    s.gl_bins = g.count("bins", 20, 2);
    s.gl_sub = g.count("sub", 4);
    s.gl_q0 = g.get<double>("q0", 1.0);
    s.gl_p0 = g.get<double>("p0", std::sqrt(0.2));
    root.put("graph_limit", g.finish());
  }
  {
    Reader v = root.child("verify");
    s.suites = v.get<std::vector<std::string>>("suites", s.suites);
    for (const auto& suite : s.suites) {
      try {
        suite_criteria(suite);
      } catch (const Error&) {
        problems.push_back("verify.suites: unknown suite '" + suite + "'");
      }
    }
    s.quick = v.get<bool>("quick", false);
    root.put("verify", v.finish());
  }
  s.canonical = root.finish();

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorKind::ConfigInvalid, msg);
  }
  return s;
}

std::string critical_points_csv(const std::vector<CriticalPoint>& cps) {
  std::string s = "q,p,value,kind,curvature,degenerate\n";
  for (const auto& c : cps)
    s += fmt(c.q) + "," + fmt(c.p) + "," + fmt(c.value) + "," + (c.kind == CriticalKind::minimum ? "minimum" : "saddle") +
         "," + fmt(c.curvature) + "," + (c.degenerate ? "1" : "0") + "\n";
  return s;
}

double gaussian(double x, double mean, double var) { return std::exp(-(x - mean) * (x - mean) / (2.0 * var)); }

}  // namespace

std::vector<std::string> scenario_names() { return kScenarios; }

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ConfigInvalid, std::string("malformed config: ") + e.what());
  }
  const Settings s = read_settings(doc, seed_override);
  return RunConfig{s.scenario, s.seed, s.threads, s.canonical.dump(2)};
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    fail(ErrorKind::ConfigInvalid, std::string("cannot read config: ") + e.what());
  }
  return parse_config(text, seed_override);
}

RunOutcome run(const RunConfig& config, const std::filesystem::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Settings s = read_settings(json::parse(config.canonical), std::nullopt);
  if (s.threads > 0) set_thread_count(s.threads);
  RunOutcome res;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(out / name, text);
    res.artifacts.push_back(name);
  };
  auto graph_and_table = [&]() {
    ReebGraph g = build_reeb_graph(s.model, s.box, s.h_max);
    EdgeCoefficientTable t = tabulate_coefficients(g, s.table);
    return std::make_pair(std::move(g), std::move(t));
  };

  const std::string& sc = s.scenario;
  if (sc == "critical-points") {
    const auto cps = find_critical_points(s.model, s.box, s.critical);
    emit("critical_points.csv", critical_points_csv(cps));
    res.summary = std::to_string(cps.size()) + " critical points";
  } else if (sc == "build-graph") {
    const ReebGraph g = build_reeb_graph(s.model, s.box, s.h_max);
    emit("graph.json", graph_json(g));
    write_label_grid(out / "labels.bin", g);
    res.artifacts.push_back("labels.bin");
    const auto sad = std::count_if(g.vertices.begin(), g.vertices.end(),
                                   [](const ReebVertex& v) { return v.kind == VertexKind::interior_saddle; });
    res.summary = "edges " + std::to_string(g.edges.size()) + ", saddles " + std::to_string(sad);
  } else if (sc == "coefficients") {
    const auto [g, t] = graph_and_table();
    for (const auto& e : t.edges) emit("coefficients_edge" + std::to_string(e.k) + ".csv", coefficient_csv(e));
    emit("coefficients.json", coefficient_table_json(t));
    double worst = 0.0;
    for (const auto& k : t.kirchhoff) worst = std::max(worst, std::abs(k.relative));
    res.summary = std::to_string(t.edges.size()) + " edges tabulated, worst Kirchhoff residual " + fmt(worst);
  } else if (sc == "simulate-sde") {
    const ParticleEnsemble init = ParticleEnsemble::at_point(static_cast<std::size_t>(s.particles), s.q0, s.p0, s.seed);
    std::vector<double> times = s.sde_times;
    if (times.empty()) times.push_back(s.sde.t_end);
    const auto snaps = s.sde.kind == SdeKind::perturbed_hamiltonian
                           ? simulate_perturbed_hamiltonian(s.model, s.sde, init, times)
                           : simulate_vfp_particles(s.model, s.sde, init, times);
    emit("ensemble.csv", ensemble_csv(snaps));
    emit("checkpoint.json", ensemble_checkpoint_json(snaps.back()));
    res.summary = std::to_string(snaps.size()) + " snapshots of " + std::to_string(s.particles) + " particles";
  } else if (sc == "solve-vfp") {
    const GaussianInit& in = s.vfp_init;
    const PhaseDensity init = sample_phase_density(s.box, [&](double q, double p) {
      return gaussian(q, in.q_mean, in.q_var) * gaussian(p, in.p_mean, in.p_var);
    });
    const bool monitor = s.vfp.theta == 1.0 && !s.model.interaction;
    std::optional<DissipationMonitor> mon;
    if (monitor) mon.emplace(s.model, s.vfp);
    const VfpTrajectory tr = solve_vfp(s.model, init, s.vfp, [&](const PhaseDensity& d) {
      if (mon) mon->observe(d);
    });
    emit("phase_density.csv", phase_density_csv(tr.snapshots));
    json d = {{"max_mass_drift", tr.diagnostics.max_mass_drift},
              {"max_leak_proxy", tr.diagnostics.max_leak_proxy},
              {"negativity_events", tr.diagnostics.negativity_events},
              {"steps", tr.diagnostics.steps},
              {"substeps_per_step", tr.diagnostics.substeps_per_step}};
    emit("diagnostics.json", d.dump(2) + "\n");
    if (mon) {
      emit("dissipation.csv", dissipation_csv(mon->report()));
      res.summary = std::string("energy-dissipation ") + (mon->report().pass ? "holds" : "violated") + ", ";
    }
    res.summary += "mass drift " + fmt(tr.diagnostics.max_mass_drift);
  } else if (sc == "solve-smoluchowski") {
    const PositionDensity init = sample_position_density(
        s.smol_lo, s.smol_hi, s.smol_n, [&](double q) { return gaussian(q, s.smol_mean, s.smol_var); });
    const PositionTrajectory tr = solve_smoluchowski(s.model, init, s.smol);
    emit("position_density.csv", position_density_csv(tr.snapshots));
    res.summary = "final variance " + fmt(tr.snapshots.back().variance());
  } else if (sc == "solve-graph") {
    const auto [g, t] = graph_and_table();
    if (s.graph_edge >= static_cast<int>(g.edges.size()))
      fail(ErrorKind::ConfigInvalid, "graph_pde.init_edge: graph has only " + std::to_string(g.edges.size()) + " edges");
    const DiscreteGenerator gen = assemble(g, t, uniform_mesh(g, s.graph_cells));
    const GraphDensity init = project_initial(
        [&](int k, double h) { return k == s.graph_edge ? gaussian(h, s.graph_h_center, s.graph_width * s.graph_width) : 0.0; },
        gen);
    EvolveOptions eo;
    eo.snapshot_times = s.graph_times;
    const GraphTrajectory tr = evolve(gen, init, s.graph_t_end, s.graph_dt, eo);
    emit("graph_trajectory.csv", graph_trajectory_csv(gen, tr));
    emit("vertex_diagnostics.csv", vertex_diagnostics_csv(gen, tr));
    res.summary = "mean h " + fmt(init.mean_h(gen)) + " -> " + fmt(tr.snapshots.back().mean_h(gen));
  } else if (sc == "overdamped-report") {
    OverdampedOptions oo;
    oo.box = s.box;
    const OverdampedReport rep = overdamped_convergence_report(
        s.model, s.gammas, [&](double q) { return gaussian(q, s.od_mean, s.od_var); }, s.od_t, oo);
    emit("overdamped.csv", overdamped_csv(rep));
    res.summary = std::string("L1 ") + (rep.monotone ? "decreasing" : "not decreasing") + " in gamma";
  } else if (sc == "graph-limit-report") {
    const auto [g, t] = graph_and_table();
    SdeParams sp;
    sp.kind = SdeKind::perturbed_hamiltonian;
    sp.epsilon = s.gl_epsilon;
    sp.dt = s.gl_sde_dt;
    sp.t_end = s.gl_t_end;
    const double times[] = {s.gl_t_end};
    const ParticleEnsemble fin = simulate_perturbed_hamiltonian(
        s.model, sp, ParticleEnsemble::at_point(static_cast<std::size_t>(s.gl_particles), s.gl_q0, s.gl_p0, s.seed), times)
                                     .back();
    const GraphHistogram hist = empirical_pushforward(g, fin, s.gl_bins);
    const DiscreteGenerator gen = assemble(g, t, histogram_mesh(hist, s.gl_sub));
    const GraphDensity gf = evolve(gen, project_initial(g, {{s.gl_q0, s.gl_p0, 1.0}}, gen), s.gl_t_end, s.gl_pde_dt)
                                .snapshots.back();
    std::string csv = "edge,h_lo,h_hi,empirical,graph\n";
    double l1 = hist.spill + hist.dropped;
    for (std::size_t k = 0; k < hist.mass.size(); ++k) {
      const std::size_t off = gen.mesh.offset(static_cast<int>(k));
      for (int b = 0; b < s.gl_bins; ++b) {
        double m = 0.0;
        for (int j = 0; j < s.gl_sub; ++j) m += gf.cell_mass(gen, off + static_cast<std::size_t>(b * s.gl_sub + j));
        l1 += std::abs(m - hist.mass[k][b]);
        csv += std::to_string(k) + "," + fmt(hist.bin_edges[k][b]) + "," + fmt(hist.bin_edges[k][b + 1]) + "," +
               fmt(hist.mass[k][b]) + "," + fmt(m) + "\n";
      }
    }
    emit("graph_limit.csv", csv);
    res.summary = "histogram L1 " + fmt(l1) + " (spill " + fmt(hist.spill) + ", dropped " + fmt(hist.dropped) + ")";
  } else if (sc == "verify") {
    VerifyOptions vo;
    vo.seed = s.seed;
    vo.quick = s.quick;
    const auto results = run_verify(s.suites, vo);
    emit("verify.csv", verify_csv(results));
    for (const auto& r : results) {
      res.summary += (r.pass() ? "PASS " : "FAIL ") + std::to_string(r.id) + " " + r.name + "\n";
      if (!r.pass()) res.exit_code = exit_verification;
    }
    if (!res.summary.empty()) res.summary.pop_back();
  }

  emit("config.json", config.canonical + "\n");
  Manifest m;
  m.scenario = sc;
  m.config_hash = hex64(fnv1a64(config.canonical));
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  m.threads = thread_count();
  m.artifacts = res.artifacts;
  emit("manifest.json", manifest_json(m));
  return res;
}

}  // namespace hamcg
