#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hamcg/coeffs.hpp"
#include "hamcg/functionals.hpp"
#include "hamcg/graphpde.hpp"
#include "hamcg/reeb.hpp"
#include "hamcg/sde.hpp"
#include "hamcg/vfp.hpp"

namespace hamcg {

/// Shortest decimal form that round-trips (%.17g); every CSV writer uses it so
/// identical numbers always print identically.
std::string fmt(double v);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// {vertices:[{id,kind,h,location}], edges:[{k,h_lo,h_hi,incidence:[[vid,sign]],seed}]}
std::string graph_json(const ReebGraph& graph);

/// Label grid: magic "HCGLBL1\n", uint32 header length, JSON header
/// {q_lo,q_hi,p_lo,p_hi,nq,np}, then nq*np int32 labels (little-endian,
/// BoxDomain::index order).
void write_label_grid(const std::filesystem::path& path, const ReebGraph& graph);
std::vector<int> read_label_grid(const std::filesystem::path& path, BoxDomain& box);

/// Columns h,T,A,B,TA,TB for one edge.
std::string coefficient_csv(const EdgeCoefficients& edge);
/// Vertex limits per edge and Kirchhoff residuals per interior vertex.
std::string coefficient_table_json(const EdgeCoefficientTable& table);

/// Columns t,particle_id,q,p (one q and one p column per dimension).
std::string ensemble_csv(const std::vector<ParticleEnsemble>& snapshots);
std::string ensemble_checkpoint_json(const ParticleEnsemble& ens);
ParticleEnsemble ensemble_from_checkpoint(const std::string& json);

/// Columns t,edge,h_center,f,cell_mass.
std::string graph_trajectory_csv(const DiscreteGenerator& gen, const GraphTrajectory& traj);
/// Columns t,vertex,flux_residual.
std::string vertex_diagnostics_csv(const DiscreteGenerator& gen, const GraphTrajectory& traj);

/// Columns t,q,p,rho.
std::string phase_density_csv(const std::vector<PhaseDensity>& snapshots);
/// Columns t,q,sigma.
std::string position_density_csv(const std::vector<PositionDensity>& snapshots);
/// Columns gamma,L1,W1.
std::string overdamped_csv(const OverdampedReport& report);

/// {value, floor_estimate, defect, per_time_table:[{t0,t1,increment,defect}]}
std::string rate_report_json(const RateReport& report);
/// Columns t,free_energy,dissipation,lhs,rhs,h_moment,h_moment_bound.
std::string dissipation_csv(const DissipationReport& report);

struct Manifest {
  std::string scenario;
  std::string config_hash;  // FNV-1a of the canonical config JSON
  double wall_seconds = 0.0;
  int threads = 1;
  std::vector<std::string> artifacts;
};

std::string manifest_json(const Manifest& m);

}  // namespace hamcg
