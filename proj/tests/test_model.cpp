#include <cmath>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/model.hpp"

using namespace hamcg;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("polynomial evaluation and derivatives") {
  const Polynomial p({1.0, -2.0, 0.0, 3.0});  // 1 - 2q + 3q^3
  CHECK(p.value(2.0) == doctest::Approx(21.0));
  CHECK(p.derivative(2.0) == doctest::Approx(34.0));
  CHECK(p.second_derivative(2.0) == doctest::Approx(36.0));
  CHECK(p.derivative().value(-1.0) == doctest::Approx(7.0));
  CHECK(p.antiderivative().value(1.0) == doctest::Approx(1.0 - 1.0 + 0.75));
  CHECK(Polynomial({0.0, 0.0, 0.0}).degree() == 0);
}

TEST_CASE("potential from derivative roots") {
  const double roots[] = {-1.8, -1.0, 0.0, 1.3, 2.4};
  const Polynomial v = Polynomial::from_derivative_roots(roots, 0.25);
  for (double r : roots) CHECK(std::abs(v.derivative(r)) < 1e-12);
  double lowest = 1e300;
  for (double r : roots)
    if (v.second_derivative(r) > 0) lowest = std::min(lowest, v.value(r));
  CHECK(std::abs(lowest) < 1e-12);
}

TEST_CASE("presets") {
  const auto dw = make_preset("double_well");
  CHECK(dw.H(0.0, 2.0) == doctest::Approx(2.25));
  CHECK(make_preset("double_well", {{"mass", 2.0}}).H(0.0, 2.0) == doctest::Approx(1.25));
  CHECK(dw.V(1.0) == doctest::Approx(0.0));
  CHECK(dw.V(0.0) == doctest::Approx(0.25));
  CHECK(make_preset("harmonic", {{"stiffness", 3.0}}).V(2.0) == doctest::Approx(6.0));
  CHECK(make_preset("quartic").V(2.0) == doctest::Approx(4.0));
  CHECK(dw.laplacian_p_H() == doctest::Approx(1.0));
  CHECK(kind_of([] { make_preset("double_well", {{"depthh", 1.0}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_preset("nope"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { make_preset("harmonic", {{"mass", -1.0}}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("separable Hamiltonian in d > 1") {
  const auto m = make_preset("harmonic", {{"dim", 2.0}});
  const double q[] = {1.0, 2.0}, p[] = {0.5, -1.0};
  CHECK(m.H(q, p) == doctest::Approx(0.5 * (0.25 + 1.0) + 0.5 * (1.0 + 4.0)));
}

TEST_CASE("critical points of the double well") {
  const auto cps = find_critical_points(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 64, 64});
  REQUIRE(cps.size() == 3);
  CHECK(cps[0].q == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(cps[0].kind == CriticalKind::minimum);
  CHECK(cps[1].q == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(cps[1].kind == CriticalKind::saddle);
  CHECK(cps[1].value == doctest::Approx(0.25));
  CHECK(cps[2].kind == CriticalKind::minimum);
}

TEST_CASE("degenerate and colliding critical points") {
  const auto quartic = find_critical_points(make_preset("quartic"), BoxDomain{-2, 2, -2, 2, 64, 64});
  REQUIRE(quartic.size() == 1);
  CHECK(quartic[0].degenerate);
  CHECK(quartic[0].kind == CriticalKind::minimum);

  // V' = q (q^2 - 1)(q^2 - 4): symmetric, so the saddles at +-1 share a value.
  HamiltonianModel sym;
  const double roots[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
  sym.potential = Polynomial::from_derivative_roots(roots, 1.0);
  CHECK(kind_of([&] { find_critical_points(sym, BoxDomain{-3, 3, -3, 3, 64, 64}); }) ==
        ErrorKind::SaddleValueCollision);
}

TEST_CASE("mean-field force") {
  auto m = make_preset("harmonic");
  const double nodes[] = {-1.0, 0.0, 2.0}, w[] = {0.25, 0.25, 0.5};
  CHECK(kind_of([&] { conv_force(m, nodes, w, 0.0); }) == ErrorKind::MissingInteraction);

  m.interaction = Interaction{InteractionKind::quadratic, 2.0, 1.0};
  // psi'(x) = 2x, so the force is 2 (q - mean) with mean 0.75.
  CHECK(conv_force(m, nodes, w, 1.0) == doctest::Approx(0.5));

  m.interaction = Interaction{InteractionKind::gaussian, 1.5, 0.7};
  double expect = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double x = 0.3 - nodes[j], e = 1e-6;
    expect += w[j] * (m.interaction->value(x + e) - m.interaction->value(x - e)) / (2 * e);
  }
  CHECK(conv_force(m, nodes, w, 0.3) == doctest::Approx(expect).epsilon(1e-7));
  const double bad[] = {0.5, 0.2, 0.2};
  CHECK(kind_of([&] { conv_force(m, nodes, bad, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("growth report") {
  const auto r = check_growth_conditions(make_preset("double_well"), BoxDomain{-3, 3, -3, 3, 64, 64});
  CHECK(r.potential_nonnegative);
  CHECK(r.min_potential == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::isfinite(r.growth_constant));
}
