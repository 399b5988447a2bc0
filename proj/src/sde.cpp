#include "hamcg/sde.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "hamcg/errors.hpp"
#include "hamcg/parallel.hpp"
#include "hamcg/rng.hpp"

namespace hamcg {

void ParticleEnsemble::validate() const {
  require(dim >= 1, "ensemble dimension must be >= 1");
  require(q.size() == p.size(), "ensemble q and p differ in length");
  require(q.size() % static_cast<std::size_t>(dim) == 0, "ensemble size not a multiple of dim");
  require(!q.empty(), "ensemble is empty");
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i]) || !std::isfinite(p[i])) fail(ErrorKind::UnstableStep, "non-finite particle state");
  }
}

ParticleEnsemble ParticleEnsemble::at_point(std::size_t n, double q0, double p0, std::uint64_t seed) {
  ParticleEnsemble e;
  e.q.assign(n, q0);
  e.p.assign(n, p0);
  e.seed = seed;
  return e;
}

double sde_step_bound(const HamiltonianModel& model, const SdeParams& params) {
  if (params.kind == SdeKind::vfp_langevin) {
    if (params.gamma <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * model.mass / (params.gamma * params.gamma);
  }
  return 0.1 * params.epsilon;
}

std::vector<double> mean_field_force(const HamiltonianModel& model, const ParticleEnsemble& ens) {
  std::vector<double> f(ens.q.size(), 0.0);
  if (!model.interaction) return f;
  const Interaction& psi = *model.interaction;
  const std::size_t n = ens.size();
  const int d = ens.dim;
  if (psi.is_quadratic()) {
    for (int a = 0; a < d; ++a) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += ens.q[i * d + a];
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) f[i * d + a] = -psi.strength * (ens.q[i * d + a] - mean);
    }
    return f;
  }
  parallel_for(0, n, [&](std::size_t i) {
    for (int a = 0; a < d; ++a) {
      double acc = 0.0;
      const double qi = ens.q[i * d + a];
      for (std::size_t j = 0; j < n; ++j) acc += psi.gradient(qi - ens.q[j * d + a]);
      f[i * d + a] = -acc / static_cast<double>(n);
    }
  });
  return f;
}

namespace {

void check_params(const HamiltonianModel& model, const SdeParams& params, const ParticleEnsemble& init,
                  std::span<const double> times) {
  model.validate();
  init.validate();
  require(init.dim == model.dim, "ensemble dimension differs from model dimension");
  require(params.dt > 0.0 && std::isfinite(params.dt), "dt must be positive");
  require(params.t_end >= init.time, "t_end precedes the ensemble time");
  const double bound = sde_step_bound(model, params);
  if (params.dt > bound * (1.0 + 1e-12)) {
    fail(ErrorKind::UnstableStep, "dt=" + std::to_string(params.dt) + " exceeds the step bound " + std::to_string(bound));
  }
  double prev = init.time;
  for (double t : times) {
    require(t >= prev - 1e-12, "snapshot times must be sorted and not precede the ensemble time");
    require(t <= params.t_end + 1e-12, "snapshot time beyond t_end");
    prev = t;
  }
}

std::uint64_t lane_id(int halving, int sub, int coord, int slot) {
  return (static_cast<std::uint64_t>(halving) << 40) | (static_cast<std::uint64_t>(sub) << 16) |
         (static_cast<std::uint64_t>(coord) << 2) | static_cast<std::uint64_t>(slot);
}

// One particle advanced over dt in `nsub` substeps. Returns false if any
// coordinate became non-finite.
template <class Substep>
bool advance_particle(std::size_t i, const ParticleEnsemble& ens, double* q, double* p, int nsub, int halving,
                      Substep&& substep) {
  const int d = ens.dim;
  for (int s = 0; s < nsub; ++s) {
    for (int a = 0; a < d; ++a) substep(i, a, s, halving, q[a], p[a]);
  }
  for (int a = 0; a < d; ++a) {
    if (!std::isfinite(q[a]) || !std::isfinite(p[a])) return false;
  }
  return true;
}

template <class MakeSubstep>
std::vector<ParticleEnsemble> drive(const HamiltonianModel& model, const SdeParams& params,
                                    const ParticleEnsemble& init, std::span<const double> times,
                                    MakeSubstep&& make_substep) {
  check_params(model, params, init, times);
  std::vector<ParticleEnsemble> out;
  out.reserve(times.size());
  ParticleEnsemble ens = init;
  const std::uint64_t step0 = init.step;
  const double t0 = init.time;
  const int d = ens.dim;
  const std::size_t n = ens.size();

  for (double target : times) {
    const auto target_step = step0 + static_cast<std::uint64_t>(std::llround((target - t0) / params.dt));
    while (ens.step < target_step) {
      const std::vector<double> mf = mean_field_force(model, ens);
      auto substep = make_substep(ens, mf);
      std::vector<char> failed(n, 0);
      parallel_for(0, n, [&](std::size_t i) {
        double q[8], p[8];
        for (int halving = 0; halving <= params.max_halvings; ++halving) {
          for (int a = 0; a < d; ++a) {
            q[a] = ens.q[i * d + a];
            p[a] = ens.p[i * d + a];
          }
          if (advance_particle(i, ens, q, p, 1 << halving, halving, substep)) {
            for (int a = 0; a < d; ++a) {
              ens.q[i * d + a] = q[a];
              ens.p[i * d + a] = p[a];
            }
            return;
          }
        }
        failed[i] = 1;
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (failed[i]) {
          fail(ErrorKind::UnstableStep, "particle " + std::to_string(i) + " non-finite at step " +
                                            std::to_string(ens.step) + " after " +
                                            std::to_string(params.max_halvings) + " halvings");
        }
      }
      ++ens.step;
      ens.time = t0 + static_cast<double>(ens.step - step0) * params.dt;
    }
    ens.time = t0 + static_cast<double>(ens.step - step0) * params.dt;
    out.push_back(ens);
  }
  return out;
}

}  // namespace

std::vector<ParticleEnsemble> simulate_vfp_particles(const HamiltonianModel& model, const SdeParams& params,
                                                     const ParticleEnsemble& init,
                                                     std::span<const double> snapshot_times) {
  require(params.kind == SdeKind::vfp_langevin, "simulate_vfp_particles needs kind vfp_langevin");
  require(params.gamma >= 0.0, "gamma must be >= 0");
  require(params.theta > 0.0, "theta must be positive");
  require(model.dim <= 8, "at most 8 dimensions");
  const double m = model.mass, g = params.gamma, th = params.theta;
  const double noise = params.noise ? 1.0 : 0.0;

  return drive(model, params, init, snapshot_times, [&](const ParticleEnsemble& ens, const std::vector<double>& mf) {
    const std::uint64_t seed = ens.seed, off = ens.stream_offset, step = ens.step;
    const int d = ens.dim;
    return [&, seed, off, step, d](std::size_t i, int a, int s, int halving, double& q, double& p) {
      const double h = params.dt / static_cast<double>(1 << halving);
      const double fmf = mf[i * d + a];
      auto xi = [&](int slot) { return noise * counter_normal(seed, off + i, step, lane_id(halving, s, a, slot)); };
      if (params.scheme == SdeScheme::euler_maruyama) {
        const double force = -model.dV(q) + fmf - g / m * p;
        q += h * p / m;
        p += h * force + std::sqrt(2.0 * g * th * h) * xi(0);
        return;
      }
      const double decay = std::exp(-g * 0.5 * h / m);
      const double amp = std::sqrt(th * m * (1.0 - decay * decay));
      p = p * decay + amp * xi(0);
      p += 0.5 * h * (-model.dV(q) + fmf);
      q += h * p / m;
      p += 0.5 * h * (-model.dV(q) + fmf);
      p = p * decay + amp * xi(1);
    };
  });
}

std::vector<ParticleEnsemble> simulate_perturbed_hamiltonian(const HamiltonianModel& model, const SdeParams& params,
                                                             const ParticleEnsemble& init,
                                                             std::span<const double> snapshot_times) {
  require(params.kind == SdeKind::perturbed_hamiltonian, "simulate_perturbed_hamiltonian needs kind perturbed_hamiltonian");
  require(model.dim == 1, "perturbed Hamiltonian runs need d = 1");
  require(params.epsilon > 0.0, "epsilon must be positive");
  const double m = model.mass, eps = params.epsilon;
  const double noise = params.noise ? 1.0 : 0.0;

  return drive(model, params, init, snapshot_times, [&](const ParticleEnsemble& ens, const std::vector<double>&) {
    const std::uint64_t seed = ens.seed, off = ens.stream_offset, step = ens.step;
    return [&, seed, off, step](std::size_t i, int a, int s, int halving, double& q, double& p) {
      const double h = params.dt / static_cast<double>(1 << halving);
      const double tau = h / eps;
      auto xi = [&](int slot) { return noise * counter_normal(seed, off + i, step, lane_id(halving, s, a, slot)); };
      if (params.scheme == SdeScheme::euler_maruyama) {
        const double dq = tau * p / m, dp = -tau * model.dV(q);
        q += dq;
        p += dp + std::sqrt(2.0 * h) * xi(0);
        return;
      }
      p += std::sqrt(h) * xi(0);
      p -= 0.5 * tau * model.dV(q);
      q += tau * p / m;
      p -= 0.5 * tau * model.dV(q);
      p += std::sqrt(h) * xi(1);
    };
  });
}

}  // namespace hamcg
