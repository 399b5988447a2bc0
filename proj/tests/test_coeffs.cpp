#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hamcg/coeffs.hpp"
#include "hamcg/errors.hpp"

using namespace hamcg;

namespace {

constexpr double pi = std::numbers::pi;

// Phase-space area of {H <= h} restricted to q in [a, b]: 2 int sqrt(2m(h - V)).
// Substituting q = c + r sin(s) near each turning point would be sharper; a
// fine midpoint rule is enough at the tolerances used here.
double phase_area(const HamiltonianModel& m, double h, double a, double b, int n = 400000) {
  const double dq = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = h - m.V(a + (i + 0.5) * dq);
    if (v > 0) s += std::sqrt(2.0 * m.mass * v);
  }
  return 2.0 * s * dq;
}

const ReebGraph& dw_graph() {
  static const ReebGraph g = build_reeb_graph(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 300, 300}, 3.0);
  return g;
}

int right_well(const ReebGraph& g) {
  for (const auto& e : g.edges)
    if (e.h_hi < 1.0 && e.seed_q > 0) return e.k;
  return -1;
}

}  // namespace

TEST_CASE("harmonic ellipse integrals") {
  // H = p^2/2m + q^2/2: T = 2 pi sqrt(m), TA = T h / m, TB = T / m.
  for (double m : {1.0, 2.0}) {
    const auto model = make_preset("harmonic", {{"mass", m}});
    const auto g = build_reeb_graph(model, BoxDomain{-3, 3, -4, 4, 128, 128}, 2.5);
    for (double h : {0.2, 1.0, 2.0}) {
      const auto v = integrate_curve(model, extract_level_curve(g, h, 0));
      const double T = 2 * pi * std::sqrt(m);
      CHECK(v.T == doctest::Approx(T).epsilon(1e-4));
      CHECK(v.TA == doctest::Approx(T * h / m).epsilon(1e-4));
      CHECK(v.TB == doctest::Approx(T / m).epsilon(1e-4));
      CHECK(area_TA(g, 0, h) == doctest::Approx(T * h / m).epsilon(2e-2));
    }
  }
}

TEST_CASE("double-well coefficients against phase-area quadrature") {
  const ReebGraph& g = dw_graph();
  const auto& model = g.model;
  const int k = right_well(g);
  REQUIRE(k >= 0);
  for (double h : {0.05, 0.15, 0.22}) {
    const auto v = integrate_curve(model, extract_level_curve(g, h, k));
    // TA = area / m, T = d(area)/dh
    CHECK(v.TA == doctest::Approx(phase_area(model, h, 0.0, 3.0)).epsilon(1e-3));
    const double d = 1e-4;
    const double T = (phase_area(model, h + d, 0.0, 3.0) - phase_area(model, h - d, 0.0, 3.0)) / (2 * d);
    CHECK(v.T == doctest::Approx(T).epsilon(2e-3));
  }
  const int top = g.edge_above(g.edges[k].upper_vertex);
  const auto v = integrate_curve(model, extract_level_curve(g, 1.0, top));
  CHECK(v.TA == doctest::Approx(phase_area(model, 1.0, -3.0, 3.0)).epsilon(1e-3));
}

TEST_CASE("small oscillations and the saddle divergence") {
  const ReebGraph& g = dw_graph();
  const int k = right_well(g);
  // V''(1) = 2: T -> 2 pi / sqrt(2) at the bottom of a well; the first
  // anharmonic correction at h = 1e-3 is below 1e-3 relative.
  CurveOptions fine;
  fine.resolution = 4096;
  CHECK(compute_T(g.model, extract_level_curve(g, 1e-3, k, fine)) == doctest::Approx(2 * pi / std::sqrt(2.0)).epsilon(1.5e-3));
  double prev = 0.0;
  for (double d : {1e-1, 3e-2, 1e-2, 3e-3, 1.5e-3}) {
    const double T = compute_T(g.model, extract_level_curve(g, 0.25 - d, k));
    CHECK(T > prev);
    prev = T;
  }
  CHECK_THROWS_AS(extract_level_curve(g, 0.2501, k), Error);
}

TEST_CASE("graph-free extraction") {
  const auto curves = extract_level_curves(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 64, 64}, 0.1, 512);
  CHECK(curves.size() == 2);
  for (const auto& c : curves) CHECK(c.closed);
  const auto one = extract_level_curves(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 64, 64}, 0.5, 512);
  CHECK(one.size() == 1);
}

TEST_CASE("tabulated edges") {
  const ReebGraph& g = dw_graph();
  TableOptions to;
  to.samples_per_edge = 32;
  const auto tab = tabulate_coefficients(g, to);
  REQUIRE(tab.edges.size() == 3);
  for (const auto& e : tab.edges) {
    for (std::size_t i = 0; i < e.h.size(); ++i) {
      CHECK(e.B[i] == doctest::Approx(1.0));
      CHECK(e.A[i] == doctest::Approx(e.TA[i] / e.T[i]));
      if (i > 0) CHECK(e.TA[i] > e.TA[i - 1]);
    }
    const auto d = centered_derivative(e.h, e.TA);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(e.TB[i + 1]).epsilon(2e-2));
  }
  REQUIRE(tab.kirchhoff.size() == 1);
  CHECK(std::abs(tab.kirchhoff[0].relative) < 1e-2);
  const auto& e = tab.edges[0];
  const double mid = 0.5 * (e.h[3] + e.h[4]);
  CHECK(tab.TA_at(e.k, mid) > e.TA[3]);
  CHECK(tab.TA_at(e.k, mid) < e.TA[4]);
}

TEST_CASE("three-point derivative is exact on quadratics") {
  const std::vector<double> h{0.0, 0.1, 0.35, 0.4, 1.0};
  std::vector<double> y;
  for (double x : h) y.push_back(3 * x * x - x + 2);
  const auto d = centered_derivative(h, y);
  REQUIRE(d.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(6 * h[i + 1] - 1));
}

TEST_CASE("quartic period against the turning-point integral") {
  // Degenerate minimum: no graph, curves come from the graph-free extractor.
  const auto model = make_preset("quartic");
  for (double h : {0.05, 0.2}) {
    const auto curves = extract_level_curves(model, BoxDomain{-2, 2, -2, 2, 64, 64}, h, 1024);
    REQUIRE(curves.size() == 1);
    const double a = std::pow(4 * h, 0.25), d = 1e-4;
    const double T = (phase_area(model, h + d, -a - 0.1, a + 0.1) - phase_area(model, h - d, -a - 0.1, a + 0.1)) / (2 * d);
    CHECK(compute_T(model, curves[0]) == doctest::Approx(T).epsilon(1e-2));
  }
}
