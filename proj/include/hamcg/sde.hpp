#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hamcg/model.hpp"

namespace hamcg {

/// N particles in d dimensions, particle-major: q[i*dim + a].
/// Particle i draws noise from stream `stream_offset + i` of `seed`, and
/// `step` counts integrator steps taken since the lineage started, so a
/// checkpoint restores the exact noise sequence.
struct ParticleEnsemble {
  int dim = 1;
  std::vector<double> q, p;
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_offset = 0;
  std::uint64_t step = 0;

  std::size_t size() const noexcept { return dim > 0 ? q.size() / static_cast<std::size_t>(dim) : 0; }
  void validate() const;
  static ParticleEnsemble at_point(std::size_t n, double q0, double p0, std::uint64_t seed);
};

enum class SdeKind { vfp_langevin, perturbed_hamiltonian };
enum class SdeScheme { splitting, euler_maruyama };

struct SdeParams {
  SdeKind kind = SdeKind::vfp_langevin;
  SdeScheme scheme = SdeScheme::splitting;
  double gamma = 1.0;    // friction (vfp)
  double theta = 1.0;    // temperature (vfp)
  double epsilon = 1.0;  // time-scale separation (perturbed)
  double dt = 1e-3;
  double t_end = 1.0;
  bool noise = true;
  int max_halvings = 8;
};

/// Largest admissible dt: 0.5 m / gamma^2 (vfp) or 0.1 eps (perturbed).
double sde_step_bound(const HamiltonianModel& model, const SdeParams& params);

/// Mean-field force -(grad psi * rho_n)(q_i) on every particle, coordinate-wise
/// for d > 1. Zero when the model has no interaction.
std::vector<double> mean_field_force(const HamiltonianModel& model, const ParticleEnsemble& ens);

/// Langevin particle system
///   dQ = P/m dt,  dP = -V'(Q) dt - (psi' * rho_n)(Q) dt - (gamma/m) P dt + sqrt(2 gamma theta) dW.
/// Default scheme is Strang splitting: exact OU half step, leapfrog with the
/// mean-field force frozen at the start of the step, exact OU half step.
/// Returns one ensemble per snapshot time (absolute times, >= init.time).
std::vector<ParticleEnsemble> simulate_vfp_particles(const HamiltonianModel& model, const SdeParams& params,
                                                     const ParticleEnsemble& init,
                                                     std::span<const double> snapshot_times);

/// Randomly perturbed Hamiltonian system, d = 1:
///   dX = (1/eps) J grad H dt + sqrt(2) (0,1) dW.
/// Splitting: noise half step, leapfrog over time dt/eps, noise half step.
std::vector<ParticleEnsemble> simulate_perturbed_hamiltonian(const HamiltonianModel& model, const SdeParams& params,
                                                             const ParticleEnsemble& init,
                                                             std::span<const double> snapshot_times);

}  // namespace hamcg
