#include <cmath>
#include <limits>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/functionals.hpp"

using namespace hamcg;

namespace {

const BoxDomain kBox{-6, 6, -6, 6, 120, 120};

PhaseDensity gauss(double mq, double vq, double mp, double vp, const BoxDomain& box = kBox) {
  return sample_phase_density(box, [=](double q, double p) {
    return std::exp(-(q - mq) * (q - mq) / (2 * vq) - (p - mp) * (p - mp) / (2 * vp));
  });
}

}  // namespace

TEST_CASE("relative entropy of Gaussians") {
  const auto a = gauss(0.5, 1.0, 0.0, 1.0), b = gauss(0.0, 1.0, 0.0, 1.0);
  CHECK(relative_entropy(a, a) == doctest::Approx(0.0));
  // KL(N(0.5,1) | N(0,1)) = 0.125
  CHECK(relative_entropy(a, b) == doctest::Approx(0.125).epsilon(1e-3));
  const auto c = gauss(0.0, 0.5, 0.0, 1.0);
  // KL(N(0,0.5) | N(0,1)) = (0.5 - 1 - log 0.5)/2
  CHECK(relative_entropy(c, b) == doctest::Approx(0.5 * (0.5 - 1 - std::log(0.5))).epsilon(1e-3));
  PhaseDensity z = b;
  z.rho[z.box.index(60, 60)] = 0.0;
  CHECK(std::isinf(relative_entropy(a, z)));
  int floored = 0;
  relative_entropy(b, b, &floored);
  CHECK(floored == 0);
}

TEST_CASE("free energy vanishes at equilibrium") {
  const auto model = make_preset("double_well");
  const BoxDomain box{-3, 3, -6, 6, 80, 80};
  CHECK(std::abs(free_energy(gibbs_density(model, box), model)) < 1e-12);
  CHECK(free_energy(sample_phase_density(box, [](double q, double p) { return std::exp(-q * q - p * p); }), model) > 0.0);
}

TEST_CASE("interaction energy") {
  auto model = make_preset("harmonic");
  const auto d = gauss(1.0, 0.5, 0.0, 1.0);
  CHECK(interaction_energy(d, model) == 0.0);
  model.interaction = Interaction{InteractionKind::quadratic, 1.0, 1.0};
  // (1/2) E[(X - Y)^2 / 2] = Var / 2
  CHECK(interaction_energy(d, model) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("Fisher information in p") {
  const auto model = make_preset("harmonic");
  CHECK(relative_fisher_p(gauss(1.0, 0.3, 0.0, 1.0), model) < 1e-12);
  // p ~ N(0, 2): |d_p log f + p|^2 = p^2 / 4, expectation 1/2
  CHECK(relative_fisher_p(gauss(0.0, 1.0, 0.0, 2.0), model) == doctest::Approx(0.5).epsilon(1e-2));
  // p ~ N(0.5, 1): shift 0.5, so (p - (p - 0.5))^2 = 0.25
  CHECK(relative_fisher_p(gauss(0.0, 1.0, 0.5, 1.0), model) == doctest::Approx(0.25).epsilon(1e-2));
  CHECK(boltzmann_fisher_p(gauss(0.0, 1.0, 0.0, 2.0)) == doctest::Approx(0.5).epsilon(1e-2));
  // -(1 + log 2pi) / 2 per unit-variance coordinate
  CHECK(boltzmann_entropy(gauss(0.0, 1.0, 0.0, 1.0)) == doctest::Approx(-(1 + std::log(2 * M_PI))).epsilon(1e-3));
}

TEST_CASE("Gram solve") {
  const auto g = solve_gram({{2.0, 0.0}, {0.0, 4.0}}, {2.0, 4.0});
  CHECK(g.value == doctest::Approx(3.0));
  CHECK(g.coefficients[0] == doctest::Approx(1.0));
  CHECK(!g.singular);
  const auto s = solve_gram({{1.0, 1.0}, {1.0, 1.0}}, {1.0, 1.0});
  CHECK(s.singular);
  CHECK(s.value == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("duality form of the Fisher information is a lower bound") {
  const auto model = make_preset("harmonic");
  const auto d = gauss(0.0, 1.0, 0.0, 2.0, BoxDomain{-6, 6, -6, 6, 60, 60});
  const double exact = relative_fisher_p(d, model);
  const double dual = fisher_duality_bound(d, model, default_dictionary(d.box, 1.0)).value;
  CHECK(dual <= exact * (1 + 1e-2));
  CHECK(dual > 0.5 * exact);
}

TEST_CASE("rate functional on solver output and perturbations") {
  const auto model = make_preset("harmonic");
  const BoxDomain box{-5, 5, -5, 5, 40, 32};
  const auto init = gauss(1.0, 0.25, 0.0, 1.0, box);
  VfpParams vp;
  vp.dt = 0.01;
  vp.t_end = 0.5;
  vp.snapshot_every = 1;
  const auto exact = solve_vfp(model, init, vp).snapshots;
  const RateReport r = rate_functional_h(exact, model, vp);
  CHECK(r.value < 1e-4);
  CHECK(r.per_time.size() == exact.size() - 1);

  VfpParams pp = vp;
  pp.drift_perturbation = 0.5;
  const auto pert = solve_vfp(model, init, pp).snapshots;
  // (1/2) h0^2 T
  CHECK(rate_functional_h(pert, model, vp).value == doctest::Approx(0.0625).epsilon(5e-2));
  const double dual = rate_lower_bound_duality(pert, model, vp, default_dictionary(box, vp.t_end)).value;
  CHECK(dual <= rate_functional_h(pert, model, vp).value + 1e-12);
  CHECK(dual > 0.0);

  auto reversed = exact;
  std::reverse(reversed.begin(), reversed.end());
  for (std::size_t i = 0; i < reversed.size(); ++i) reversed[i].t = i * vp.dt;
  RateOptions loose;
  loose.defect_tolerance = std::numeric_limits<double>::infinity();
  CHECK(rate_functional_h(reversed, model, vp, loose).value > 0.1);
}

TEST_CASE("non-representable residuals are rejected") {
  const auto model = make_preset("harmonic");
  const BoxDomain box{-5, 5, -5, 5, 30, 24};
  VfpParams vp;
  vp.dt = 0.01;
  auto a = gauss(1.0, 0.25, 0.0, 1.0, box), b = gauss(-1.0, 0.25, 0.0, 1.0, box);
  b.t = 0.01;
  try {
    rate_functional_h({a, b}, model, vp);
    FAIL("expected NonRepresentableResidual");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonRepresentableResidual);
  }
}

TEST_CASE("energy-dissipation inequality") {
  const auto model = make_preset("double_well");
  const BoxDomain box{-3, 3, -5, 5, 50, 40};
  VfpParams vp;
  vp.gamma = 2.0;
  vp.dt = 0.01;
  vp.t_end = 0.5;
  vp.snapshot_every = 5;
  const auto tr = solve_vfp(model, gauss(1.0, 0.1, 0.5, 0.5, box), vp);
  const auto rep = energy_dissipation_check(tr.snapshots, model, vp);
  CHECK(rep.pass);
  CHECK(rep.h_moment_pass);
  CHECK(rep.rows.size() == tr.snapshots.size());
  for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(rep.rows[i].free_energy <= rep.rows[i - 1].free_energy + 1e-12);

  // Snapshots sharpened towards a point gain free energy: the inequality breaks.
  auto bad = tr.snapshots;
  for (std::size_t i = 1; i < bad.size(); ++i) {
    for (double& v : bad[i].rho) v = std::pow(v, 1.0 + 0.5 * i);
    bad[i].normalise();
  }
  CHECK(!energy_dissipation_check(bad, model, vp).pass);
}
