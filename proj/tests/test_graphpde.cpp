#include <cmath>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/graphpde.hpp"

using namespace hamcg;

namespace {

struct Setup {
  ReebGraph graph;
  EdgeCoefficientTable table;
  DiscreteGenerator gen;
};

const Setup& double_well() {
  static const Setup s = [] {
    Setup r;
    r.graph = build_reeb_graph(make_preset("double_well"), BoxDomain{-3.3, 3.3, -3.7, 3.7, 240, 240}, 6.0);
    TableOptions to;
    to.samples_per_edge = 32;
    r.table = tabulate_coefficients(r.graph, to);
    r.gen = assemble(r.graph, r.table, uniform_mesh(r.graph, 60));
    return r;
  }();
  return s;
}

}  // namespace

TEST_CASE("generator is symmetric with zero row sums") {
  const auto& gen = double_well().gen;
  const Eigen::SparseMatrix<double> d = gen.L - Eigen::SparseMatrix<double>(gen.L.transpose());
  CHECK(d.norm() < 1e-10 * gen.L.norm());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(gen.L.cols());
  CHECK((gen.L * ones).cwiseAbs().maxCoeff() < 1e-10 * gen.L.norm());
  for (double w : gen.weight) CHECK(w > 0.0);
}

TEST_CASE("the uniform density with respect to T dh is stationary") {
  // Liouville measure pushed to the graph: rho_hat = T, i.e. f = const.
  const auto& gen = double_well().gen;
  GraphDensity g;
  g.f.assign(gen.mesh.cell_count(), 1.0);
  const auto r = gen.mass_rate(g.f);
  double worst = 0.0;
  for (double x : r) worst = std::max(worst, std::abs(x));
  CHECK(worst < 1e-10);
  for (const auto& v : gen.vertex_links) CHECK(std::abs(gen.vertex_residual(v, g.f)) < 1e-10);
}

TEST_CASE("mean energy grows at rate 1/m") {
  // From (T rho)_t = (TA f')' and (TA)' = T/m: d<h>/dt = 1/m while no
  // mass reaches the cap.
  const auto& s = double_well();
  const GraphDensity g0 =
      project_initial([](int k, double h) { return k == 0 ? std::exp(-(h - 0.1) * (h - 0.1) / 0.001) : 0.0; }, s.gen);
  const auto tr = evolve(s.gen, g0, 0.25, 1e-3);
  const double rate = (tr.snapshots.back().mean_h(s.gen) - g0.mean_h(s.gen)) / 0.25;
  CHECK(rate == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(tr.diagnostics.max_mass_drift_per_step < 1e-10);
  CHECK(tr.snapshots.back().total_mass(s.gen) == doctest::Approx(1.0).epsilon(1e-12));
  for (double f : tr.snapshots.back().f) CHECK(f >= 0.0);
}

TEST_CASE("mass splits across the saddle symmetrically") {
  const auto& s = double_well();
  int top = -1;
  for (const auto& v : s.graph.vertices)
    if (v.kind == VertexKind::interior_saddle) top = s.graph.edge_above(v.id);
  const GraphDensity g0 =
      project_initial([&](int k, double h) { return k == top ? std::exp(-(h - 0.5) * (h - 0.5) / 0.01) : 0.0; }, s.gen);
  EvolveOptions eo;
  eo.snapshot_times = {0.5};
  const auto tr = evolve(s.gen, g0, 0.5, 1e-3, eo);
  std::vector<double> mass(3, 0.0);
  for (std::size_t k = 0; k < 3; ++k)
    for (int c = 0; c < s.gen.mesh.cells(static_cast<int>(k)); ++c)
      mass[k] += tr.snapshots.back().cell_mass(s.gen, s.gen.mesh.offset(static_cast<int>(k)) + c);
  std::vector<double> wells;
  for (int k = 0; k < 3; ++k)
    if (k != top) wells.push_back(mass[k]);
  CHECK(wells[0] > 0.01);
  CHECK(wells[0] == doctest::Approx(wells[1]).epsilon(1e-6));
}

TEST_CASE("mesh refinement converges") {
  const auto& s = double_well();
  auto rho = [](int k, double h) { return k == 0 ? std::exp(-(h - 0.1) * (h - 0.1) / 0.002) : 0.0; };
  auto run = [&](const DiscreteGenerator& g) { return evolve(g, project_initial(rho, g), 0.1, 1e-3).snapshots.back(); };
  const auto mid = assemble(s.graph, s.table, uniform_mesh(s.graph, 120));
  const auto ref = assemble(s.graph, s.table, uniform_mesh(s.graph, 240));
  const auto fr = run(ref);
  const double e60 = graph_l1_distance(s.gen, run(s.gen), ref, fr);
  const double e120 = graph_l1_distance(mid, run(mid), ref, fr);
  CHECK(e120 < 0.6 * e60);
}

TEST_CASE("histogram meshes and initial projections") {
  const auto& s = double_well();
  ParticleEnsemble e = ParticleEnsemble::at_point(4, 0, 0, 1);
  e.q = {1.0, -1.0, 1.0, 0.0};
  e.p = {0.3, 0.3, 1.0, 1.5};
  const auto hist = empirical_pushforward(s.graph, e, 8);
  const auto mesh = histogram_mesh(hist, 2);
  for (std::size_t k = 0; k < mesh.edge_count(); ++k) CHECK(mesh.cells(static_cast<int>(k)) == 16);
  const auto gen = assemble(s.graph, s.table, mesh);
  const auto g = project_initial(hist, gen);
  CHECK(g.total_mass(gen) == doctest::Approx(1.0));
  const auto p = project_initial(s.graph, {{1.0, 0.3, 2.0}, {-1.0, 0.3, 2.0}}, gen);
  CHECK(p.total_mass(gen) == doctest::Approx(1.0));
  CHECK(p.mean_h(gen) > 0.0);
  CHECK(p.mean_h(gen) < 0.25);
}

TEST_CASE("assembly rejects inconsistent input") {
  const auto& s = double_well();
  GraphMesh m = uniform_mesh(s.graph, 10);
  m.faces.pop_back();
  try {
    assemble(s.graph, s.table, m);
    FAIL("expected MeshTableMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MeshTableMismatch);
  }
  CHECK_THROWS_AS(project_initial([](int, double) { return 0.0; }, s.gen), Error);
}
