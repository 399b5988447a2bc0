#include <array>
#include <cmath>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/vfp.hpp"

using namespace hamcg;

namespace {

struct Moments {
  double mq = 0, mp = 0, vq = 0, vp = 0, cqp = 0;
};

Moments moments(const PhaseDensity& d) {
  Moments m;
  const double cv = d.box.cell_volume();
  for (int j = 0; j < d.box.np; ++j)
    for (int i = 0; i < d.box.nq; ++i) {
      const double w = d.at(i, j) * cv, q = d.box.q_center(i), p = d.box.p_center(j);
      m.mq += w * q;
      m.mp += w * p;
      m.vq += w * q * q;
      m.vp += w * p * p;
      m.cqp += w * q * p;
    }
  m.vq -= m.mq * m.mq;
  m.vp -= m.mp * m.mp;
  m.cqp -= m.mq * m.mp;
  return m;
}

// Mean and covariance of the linear SDE dq = g p dt, dp = -g q dt - g^2 p dt + g sqrt(2) dW,
// integrated with RK4.
std::array<double, 5> gaussian_moments(double g, std::array<double, 5> s, double t) {
  auto f = [g](const std::array<double, 5>& x) {
    const double mq = x[0], mp = x[1], vq = x[2], vp = x[3], c = x[4];
    return std::array<double, 5>{g * mp, -g * mq - g * g * mp, 2 * g * c, -2 * g * c - 2 * g * g * vp + 2 * g * g,
                                 g * vp - g * vq - g * g * c};
  };
  const int n = 20000;
  const double h = t / n;
  for (int k = 0; k < n; ++k) {
    auto add = [](std::array<double, 5> a, const std::array<double, 5>& b, double c) {
      for (int i = 0; i < 5; ++i) a[i] += c * b[i];
      return a;
    };
    const auto k1 = f(s), k2 = f(add(s, k1, h / 2)), k3 = f(add(s, k2, h / 2)), k4 = f(add(s, k3, h));
    for (int i = 0; i < 5; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return s;
}

double l1(const PhaseDensity& a, const PhaseDensity& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rho.size(); ++i) s += std::abs(a.rho[i] - b.rho[i]);
  return s * a.box.cell_volume();
}

}  // namespace

TEST_CASE("Gibbs density is stationary") {
  const auto model = make_preset("double_well");
  const BoxDomain box{-3, 3, -5, 5, 60, 60};
  const auto g = gibbs_density(model, box);
  VfpParams vp;
  vp.gamma = 2.0;
  vp.dt = 0.01;
  vp.t_end = 0.5;
  const auto tr = solve_vfp(model, g, vp);
  CHECK(l1(tr.snapshots.back(), g) < 1e-5);
}

TEST_CASE("Gaussian moments follow the linear covariance equations") {
  const auto model = make_preset("harmonic");
  const BoxDomain box{-6, 6, -6, 6, 120, 120};
  const auto init = sample_phase_density(box, [](double q, double p) {
    return std::exp(-(q - 1) * (q - 1) / 0.5 - p * p / 1.0);
  });
  const Moments m0 = moments(init);
  VfpParams vp;
  vp.gamma = 1.0;
  vp.dt = 0.005;
  vp.t_end = 0.5;
  const auto tr = solve_vfp(model, init, vp);
  const Moments m = moments(tr.snapshots.back());
  const auto ref = gaussian_moments(1.0, {m0.mq, m0.mp, m0.vq, m0.vp, m0.cqp}, 0.5);
  CHECK(m.mq == doctest::Approx(ref[0]).epsilon(1e-2));
  CHECK(m.mp == doctest::Approx(ref[1]).epsilon(2e-2));
  CHECK(m.vq == doctest::Approx(ref[2]).epsilon(1e-2));
  CHECK(m.vp == doctest::Approx(ref[3]).epsilon(1e-2));
  CHECK(tr.diagnostics.max_mass_drift < 1e-10);
  CHECK(tr.snapshots.front().t == 0.0);
}

TEST_CASE("small-noise form: mean energy grows at rate 1/m") {
  const auto model = make_preset("harmonic", {{"mass", 2.0}});
  const BoxDomain box{-6, 6, -8, 8, 100, 100};
  const auto init = sample_phase_density(box, [&](double q, double p) { return std::exp(-model.H(q, p) / 0.3); });
  VfpParams vp;
  vp.form = VfpForm::small_noise;
  vp.dt = 2e-3;
  vp.t_end = 0.4;
  auto energy = [&](const PhaseDensity& d) {
    double s = 0;
    for (int j = 0; j < box.np; ++j)
      for (int i = 0; i < box.nq; ++i) s += model.H(box.q_center(i), box.p_center(j)) * d.at(i, j);
    return s * box.cell_volume();
  };
  const auto tr = solve_vfp(model, init, vp);
  CHECK((energy(tr.snapshots.back()) - energy(init)) / 0.4 == doctest::Approx(0.5).epsilon(2e-2));
}

TEST_CASE("step bound") {
  const auto model = make_preset("harmonic");
  VfpParams vp;
  vp.gamma = 10.0;
  CHECK(vfp_step_bound(model, vp) == doctest::Approx(0.005));
  vp.dt = 0.01;
  const auto init = gibbs_density(model, BoxDomain{-5, 5, -5, 5, 20, 20});
  CHECK_THROWS_AS(solve_vfp(model, init, vp), Error);
  vp.form = VfpForm::small_noise;
  CHECK(std::isinf(vfp_step_bound(model, vp)));
}

TEST_CASE("boundary leak is detected") {
  const auto model = make_preset("harmonic");
  const BoxDomain box{-2, 2, -2, 2, 30, 30};
  const auto init = sample_phase_density(box, [](double q, double p) { return std::exp(-(q - 1.5) * (q - 1.5) - p * p); });
  VfpParams vp;
  vp.dt = 0.01;
  vp.t_end = 0.2;
  try {
    solve_vfp(model, init, vp);
    FAIL("expected BoundaryLeak");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BoundaryLeak);
  }
  vp.throw_on_leak = false;
  const auto tr = solve_vfp(model, init, vp);
  CHECK(tr.diagnostics.max_leak_proxy > vp.leak_tolerance);
  CHECK(tr.snapshots.back().mass() == doctest::Approx(1.0));
}

TEST_CASE("Smoluchowski equation: Ornstein-Uhlenbeck variance") {
  const auto model = make_preset("harmonic", {{"stiffness", 2.0}});
  const auto init = sample_position_density(-5, 5, 200, [](double q) { return std::exp(-(q - 0.5) * (q - 0.5) / 0.2); });
  SmoluchowskiParams sp;
  sp.dt = 5e-4;
  sp.t_end = 0.5;
  const auto tr = solve_smoluchowski(model, init, sp);
  // dq = -k q dt + sqrt(2) dW: var -> 1/k + (v0 - 1/k) e^{-2kt}, mean -> m0 e^{-kt}
  const double v0 = init.variance(), m0 = init.mean();
  const auto& s = tr.snapshots.back();
  CHECK(s.variance() == doctest::Approx(0.5 + (v0 - 0.5) * std::exp(-2.0)).epsilon(5e-3));
  CHECK(s.mean() == doctest::Approx(m0 * std::exp(-1.0)).epsilon(5e-3));
  CHECK(tr.max_mass_drift < 1e-10);
}

TEST_CASE("position distances") {
  auto a = sample_position_density(-5, 5, 1000, [](double q) { return std::exp(-q * q / 2); });
  auto b = sample_position_density(-5, 5, 1000, [](double q) { return std::exp(-(q - 0.5) * (q - 0.5) / 2); });
  CHECK(w1_distance(a, b) == doctest::Approx(0.5).epsilon(1e-2));
  // L1 between unit Gaussians shifted by d: 2 (2 Phi(d/2) - 1)
  CHECK(l1_distance(a, b) == doctest::Approx(2 * std::erf(0.25 / std::sqrt(2.0))).epsilon(1e-2));
  CHECK(l1_distance(a, a) == 0.0);
}

TEST_CASE("coarse-graining and local equilibrium") {
  const auto model = make_preset("harmonic");
  const BoxDomain box{-5, 5, -5, 5, 100, 80};
  const auto lifted = lift_with_maxwellian(model, box, [](double q) { return std::exp(-(q - 1) * (q - 1)); });
  CHECK(maxwellian_conditional_l1(lifted, model) < 1e-3);
  const auto tilted = sample_phase_density(box, [](double q, double p) { return std::exp(-q * q - (p - 1) * (p - 1) / 2); });
  CHECK(maxwellian_conditional_l1(tilted, model) > 0.5);
  const auto push = pushforward_xi_gamma(lifted, 20.0, -6, 6, 120);
  CHECK(push.mass() == doctest::Approx(1.0));
  // q + p/gamma: variance 1/2 + 1/gamma^2
  CHECK(push.variance() == doctest::Approx(0.5 + 1.0 / 400).epsilon(1e-2));
}
