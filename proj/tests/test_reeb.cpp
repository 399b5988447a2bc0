#include <cmath>
#include <random>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/reeb.hpp"
#include "hamcg/sde.hpp"

using namespace hamcg;

namespace {

const ReebGraph& double_well_graph() {
  static const ReebGraph g = build_reeb_graph(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 200, 200}, 3.0);
  return g;
}

// Analytic component for the double well: below the saddle value the sign
// of q picks the well, above it there is one component.
int expected_edge(const ReebGraph& g, double q, double p) {
  const double h = g.model.H(q, p);
  for (const auto& e : g.edges) {
    if (h < e.h_lo || h > e.h_hi) continue;
    if (h > 0.25) return e.k;
    if ((q < 0) == (e.seed_q < 0)) return e.k;
  }
  return -1;
}

}  // namespace

TEST_CASE("double-well graph topology") {
  const ReebGraph& g = double_well_graph();
  REQUIRE(g.edges.size() == 3);
  int minima = 0, saddles = 0, tops = 0;
  for (const auto& v : g.vertices) {
    minima += v.kind == VertexKind::exterior_min;
    saddles += v.kind == VertexKind::interior_saddle;
    tops += v.kind == VertexKind::open_top;
  }
  CHECK(minima == 2);
  CHECK(saddles == 1);
  CHECK(tops == 1);
  const auto sv = g.saddle_values();
  REQUIRE(sv.size() == 1);
  CHECK(sv[0] == doctest::Approx(0.25));
  for (const auto& v : g.vertices)
    if (v.kind == VertexKind::interior_saddle) {
      CHECK(g.edges_at_vertex(v.id).size() == 3);
      const int up = g.edge_above(v.id);
      CHECK(g.edges[up].h_hi == doctest::Approx(3.0));
    }
  // incidence: +1 where the vertex is the upper end
  for (const auto& e : g.edges)
    for (auto [vid, sign] : e.incidence) CHECK(sign == (vid == e.upper_vertex ? 1 : -1));
}

TEST_CASE("other presets") {
  const auto h = build_reeb_graph(make_preset("harmonic"), BoxDomain{-3, 3, -3, 3, 64, 64}, 2.0);
  CHECK(h.edges.size() == 1);
  const auto t = build_reeb_graph(make_preset("triple_well"), BoxDomain{-3.2, 3.6, -3, 3, 300, 300}, 2.0);
  CHECK(t.edges.size() == 5);
  CHECK(t.saddle_values().size() == 2);
  CHECK_THROWS_AS(build_reeb_graph(make_preset("harmonic"), BoxDomain{-1, 1, -1, 1, 64, 64}, 2.0), Error);
}

TEST_CASE("point classification matches the analytic components") {
  const ReebGraph& g = double_well_graph();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double q = U(rng), p = U(rng);
    const double h = g.model.H(q, p);
    if (h > 3.0 || std::abs(h - 0.25) < 1e-3) continue;
    CHECK(classify_point(g, q, p) == expected_edge(g, q, p));
    CHECK(classify_point_exact(g, q, p) == expected_edge(g, q, p));
    ++checked;
  }
  CHECK(checked > 1000);
  CHECK(classify_point(g, -1.0, 0.0) == expected_edge(g, -0.9, 0.0));
  CHECK(xi(g, 1.0, 0.5).h == doctest::Approx(0.125));
}

TEST_CASE("classification errors") {
  const ReebGraph& g = double_well_graph();
  auto kind = [&](double q, double p) {
    try {
      classify_point(g, q, p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind(0.0, 0.0) == ErrorKind::NearCriticalLevel);
  CHECK(kind(5.0, 0.0) == ErrorKind::OutsideGraph);
  CHECK(kind(0.0, 2.9) == ErrorKind::OutsideGraph);  // H = 4.455 > h_max
}

TEST_CASE("empirical push-forward accounts for every particle") {
  const ReebGraph& g = double_well_graph();
  ParticleEnsemble e = ParticleEnsemble::at_point(5, 0, 0, 1);
  e.q = {1.0, -1.0, 0.0, 5.0, 1.5};
  e.p = {0.1, 0.1, 0.0, 0.0, 2.0};
  const GraphHistogram hist = empirical_pushforward(g, e, 10);
  CHECK(hist.total == 5);
  CHECK(hist.spill == doctest::Approx(0.2));
  CHECK(hist.dropped == doctest::Approx(0.2));
  CHECK(hist.classified_mass() == doctest::Approx(0.6));
  for (const auto& be : hist.bin_edges) CHECK(be.size() == 11);
}
