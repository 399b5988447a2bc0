#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamcg/model.hpp"
#include "hamcg/sde.hpp"

namespace hamcg {

enum class VertexKind { exterior_min, interior_saddle, open_top };

struct ReebVertex {
  int id = 0;
  VertexKind kind = VertexKind::exterior_min;
  double h = 0.0;
  std::optional<std::pair<double, double>> location;
};

/// One family of level-set components. `incidence` holds (vertex id, sign)
/// with sign +1 when the vertex is the upper end of the edge.
struct ReebEdge {
  int k = 0;
  double h_lo = 0.0, h_hi = 0.0;
  int lower_vertex = -1, upper_vertex = -1;
  std::vector<std::pair<int, int>> incidence;
  double seed_q = 0.0, seed_p = 0.0;
};

struct ReebGraph {
  static constexpr int kAmbiguous = -1;  // cell straddles a saddle level
  static constexpr int kOutside = -2;    // cell centre above h_max

  HamiltonianModel model;
  BoxDomain box;
  double h_max = 0.0;
  std::vector<ReebVertex> vertices;
  std::vector<ReebEdge> edges;
  /// Edge index per cell, BoxDomain::index order, or one of the sentinels.
  std::vector<int> label_grid;
  /// |H - saddle value| below this makes classify_point refuse.
  double level_tolerance = 1e-9;

  std::vector<int> edges_at_vertex(int vid) const;
  std::vector<double> saddle_values() const;
  /// Edge above a saddle (the one whose lower end is the vertex).
  int edge_above(int vid) const;
};

struct ReebOptions {
  double level_tolerance = 1e-9;  // relative to max(1, |h|)
  int adjacency_depth = 4;        // BFS depth through ambiguous cells when stitching
};

/// Graph of level-set components of H for d = 1. The box grid is split into
/// bands between consecutive critical values, each band is flood-filled, and
/// components are stitched bottom-up across the levels. Vertex ids: minima
/// by q, then saddles by q, then the open top. Edge ids ordered by (h_lo, q).
ReebGraph build_reeb_graph(const HamiltonianModel& model, const BoxDomain& box, double h_max,
                           const ReebOptions& options = {});

/// Edge index of the level-set component through (q,p). Points on a minimum
/// resolve to that minimum's edge. Throws NearCriticalLevel near a saddle
/// value and OutsideGraph outside the box or above h_max.
int classify_point(const ReebGraph& graph, double q, double p);

/// Exact classification for d = 1 using only the critical points: the
/// component through (q,p) projects to the interval of {V <= h} between the
/// nearest higher saddles, identified by any minimum inside it.
int classify_point_exact(const ReebGraph& graph, double q, double p);

struct XiValue {
  double h;
  int k;
};
XiValue xi(const ReebGraph& graph, double q, double p);

inline double xi_gamma(double q, double p, double gamma) { return q + p / gamma; }

struct GraphHistogram {
  int bins_per_edge = 0;
  std::vector<std::vector<double>> bin_edges;  // per edge, bins_per_edge + 1 values
  std::vector<std::vector<double>> mass;       // per edge, normalised by N
  double spill = 0.0;                          // near a saddle level
  double dropped = 0.0;                        // outside the box or above h_max
  std::size_t total = 0;

  double classified_mass() const;
};

GraphHistogram empirical_pushforward(const ReebGraph& graph, const ParticleEnsemble& ens, int bins_per_edge);

}  // namespace hamcg
