#include <cmath>

#include "doctest.h"
#include "hamcg/errors.hpp"
#include "hamcg/io.hpp"
#include "hamcg/parallel.hpp"
#include "hamcg/sde.hpp"

using namespace hamcg;

TEST_CASE("noise-free perturbed system keeps H") {
  const auto model = make_preset("double_well");
  SdeParams sp;
  sp.kind = SdeKind::perturbed_hamiltonian;
  sp.noise = false;
  sp.epsilon = 0.05;
  sp.dt = 1e-3;
  sp.t_end = 0.2;
  const auto init = ParticleEnsemble::at_point(4, 1.2, 0.3, 7);
  const double times[] = {0.2};
  const auto out = simulate_perturbed_hamiltonian(model, sp, init, times).back();
  for (std::size_t i = 0; i < 4; ++i) CHECK(model.H(out.q[i], out.p[i]) == doctest::Approx(model.H(1.2, 0.3)).epsilon(1e-4));
}

TEST_CASE("Langevin particles relax to the Gibbs variances") {
  // Harmonic, m = 2, theta = 0.5: stationary Var q = theta, Var p = m theta.
  const auto model = make_preset("harmonic", {{"mass", 2.0}});
  SdeParams sp;
  sp.gamma = 1.0;
  sp.theta = 0.5;
  sp.dt = 0.01;
  sp.t_end = 20.0;
  const std::size_t n = 20000;
  const double times[] = {20.0};
  const auto out = simulate_vfp_particles(model, sp, ParticleEnsemble::at_point(n, 1.0, 0.0, 3), times).back();
  double vq = 0.0, vp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vq += out.q[i] * out.q[i];
    vp += out.p[i] * out.p[i];
  }
  vq /= n;
  vp /= n;
  CHECK(std::abs(vq - 0.5) < 0.03);
  CHECK(std::abs(vp - 1.0) < 0.05);
}

TEST_CASE("perturbed system: energy grows at rate 1/m") {
  const auto model = make_preset("harmonic", {{"mass", 2.0}});
  SdeParams sp;
  sp.kind = SdeKind::perturbed_hamiltonian;
  sp.epsilon = 0.02;
  sp.dt = 1e-3;
  sp.t_end = 0.5;
  const std::size_t n = 10000;
  const double times[] = {0.5};
  const auto out = simulate_perturbed_hamiltonian(model, sp, ParticleEnsemble::at_point(n, 1.0, 0.0, 11), times).back();
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = model.H(out.q[i], out.p[i]) - model.H(1.0, 0.0);
    s += d;
    s2 += d * d;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean - 0.5 * 0.5) < 4 * se);
}

TEST_CASE("step bound and failures") {
  const auto model = make_preset("harmonic");
  SdeParams sp;
  sp.gamma = 10.0;
  CHECK(sde_step_bound(model, sp) == doctest::Approx(0.005));
  sp.dt = 0.01;
  const double times[] = {0.1};
  CHECK_THROWS_AS(simulate_vfp_particles(model, sp, ParticleEnsemble::at_point(4, 0, 0, 1), times), Error);
  sp.kind = SdeKind::perturbed_hamiltonian;
  sp.epsilon = 0.01;
  CHECK(sde_step_bound(model, sp) == doctest::Approx(0.001));
}

TEST_CASE("results do not depend on the worker count") {
  const auto model = make_preset("double_well");
  SdeParams sp;
  sp.dt = 1e-3;
  sp.t_end = 0.05;
  const double times[] = {0.05};
  const auto init = ParticleEnsemble::at_point(3000, 0.5, 0.0, 99);
  const int saved = thread_count();
  set_thread_count(1);
  const auto a = simulate_vfp_particles(model, sp, init, times).back();
  set_thread_count(3);
  const auto b = simulate_vfp_particles(model, sp, init, times).back();
  set_thread_count(saved);
  CHECK(a.q == b.q);
  CHECK(a.p == b.p);
}

TEST_CASE("checkpoint restart reproduces the uninterrupted run") {
  const auto model = make_preset("double_well");
  SdeParams sp;
  sp.kind = SdeKind::perturbed_hamiltonian;
  sp.epsilon = 0.05;
  sp.dt = 1e-3;
  sp.t_end = 0.2;
  const auto init = ParticleEnsemble::at_point(50, 1.0, 0.2, 5);
  const double both[] = {0.1, 0.2};
  const auto direct = simulate_perturbed_hamiltonian(model, sp, init, both);
  const ParticleEnsemble mid = ensemble_from_checkpoint(ensemble_checkpoint_json(direct[0]));
  const double rest[] = {0.2};
  const auto resumed = simulate_perturbed_hamiltonian(model, sp, mid, rest).back();
  CHECK(resumed.q == direct[1].q);
  CHECK(resumed.p == direct[1].p);
}

TEST_CASE("mean-field force on particles") {
  auto model = make_preset("harmonic");
  model.interaction = Interaction{InteractionKind::quadratic, 1.0, 1.0};
  ParticleEnsemble e = ParticleEnsemble::at_point(3, 0.0, 0.0, 1);
  e.q = {-1.0, 0.0, 4.0};
  const auto f = mean_field_force(model, e);
  // -(q_i - mean), mean = 1
  CHECK(f[0] == doctest::Approx(2.0));
  CHECK(f[1] == doctest::Approx(1.0));
  CHECK(f[2] == doctest::Approx(-3.0));
}
