#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "hamcg/coeffs.hpp"
#include "hamcg/reeb.hpp"

namespace hamcg {

/// Cell faces in h per edge, ascending, spanning the edge's h-range.
struct GraphMesh {
  std::vector<std::vector<double>> faces;

  std::size_t edge_count() const noexcept { return faces.size(); }
  int cells(int k) const noexcept { return static_cast<int>(faces[k].size()) - 1; }
  std::size_t offset(int k) const noexcept;
  std::size_t cell_count() const noexcept;
  double center(int k, int c) const noexcept { return 0.5 * (faces[k][c] + faces[k][c + 1]); }
};

GraphMesh uniform_mesh(const ReebGraph& graph, int cells_per_edge);
/// Faces at the histogram bin edges, each bin split into `sub` equal cells.
GraphMesh histogram_mesh(const GraphHistogram& hist, int sub);

/// TA(k, h) on an edge; vertex values are looked up with h exactly at h_lo / h_hi.
using TAFunction = std::function<double(int k, double h)>;

/// Flux-form discretisation of d/dt (T f) = (TA f')' on the graph with the
/// unknown f = density with respect to T dh. Cell weights W = integral of T
/// over the cell = m (TA(face_hi) - TA(face_lo)). At each interior vertex the
/// shared value f_O is eliminated: f_O = sum w_k f_k / sum w_k with
/// w_k = TA(O,k) / (distance from the adjacent cell centre to the vertex).
struct DiscreteGenerator {
  GraphMesh mesh;
  std::vector<double> weight;       // W per cell
  std::vector<double> face_ta;      // TA at every face, per edge, flattened by edge offset + edge index
  std::vector<int> face_offset;     // start of each edge's faces in face_ta
  Eigen::SparseMatrix<double> L;    // symmetric, zero row sums; mass rate = L f
  int top_edge = -1;                // edge ending at the truncation cap

  struct VertexLink {
    int vertex = -1;
    std::vector<std::size_t> cells;  // adjacent cell per incident edge
    std::vector<double> w;           // TA(O,k) / distance
    std::vector<int> sign;           // incidence sign of the edge at O
  };
  std::vector<VertexLink> vertex_links;

  /// Rate of change of each cell's mass.
  std::vector<double> mass_rate(const std::vector<double>& f) const;
  /// Face flux TA * (f_right - f_left) / (centre distance) on interior faces of edge k.
  std::vector<double> face_fluxes(const std::vector<double>& f, int k) const;
  /// Shared vertex value and discrete connection residual sum_k w_k (f_O - f_k).
  double vertex_value(const VertexLink& v, const std::vector<double>& f) const;
  double vertex_residual(const VertexLink& v, const std::vector<double>& f) const;
};

DiscreteGenerator assemble(const ReebGraph& graph, const GraphMesh& mesh, const TAFunction& ta, double mass);
/// Uses the table's TA interpolant; the saddle-end limits are first projected
/// so that sum of sign * TA(O,k) vanishes at every interior vertex.
DiscreteGenerator assemble(const ReebGraph& graph, const EdgeCoefficientTable& table, const GraphMesh& mesh);

struct GraphDensity {
  std::vector<double> f;  // per cell, flattened in mesh order
  double t = 0.0;

  double total_mass(const DiscreteGenerator& gen) const;
  double cell_mass(const DiscreteGenerator& gen, std::size_t c) const { return f[c] * gen.weight[c]; }
  double mean_h(const DiscreteGenerator& gen) const;
};

struct EvolveOptions {
  std::vector<double> snapshot_times;  // absolute; empty means only t_end
  int cap_cells = 5;
};

struct EvolveDiagnostics {
  double max_mass_drift_per_step = 0.0;
  double max_vertex_residual = 0.0;
  double max_cap_mass = 0.0;
  int negativity_events = 0;
  std::size_t steps = 0;
};

struct GraphTrajectory {
  std::vector<GraphDensity> snapshots;
  EvolveDiagnostics diagnostics;
};

/// Implicit Euler with a sparse LDL^T factorisation of W/dt - L. The matrix is
/// an M-matrix, so f stays nonnegative; negative values (round-off) are
/// clipped, mass renormalised and counted.
GraphTrajectory evolve(const DiscreteGenerator& gen, const GraphDensity& init, double t_end, double dt,
                       const EvolveOptions& options = {});

/// Cell masses from a histogram (overlap fractions in h), divided by W.
GraphDensity project_initial(const GraphHistogram& hist, const DiscreteGenerator& gen);
/// Weighted phase-space points (q, p, mass): classified onto the graph.
GraphDensity project_initial(const ReebGraph& graph, const std::vector<std::array<double, 3>>& points,
                             const DiscreteGenerator& gen);
/// Smooth density rho_hat(k, h) with respect to dh, integrated per cell by
/// 3-point Gauss quadrature.
GraphDensity project_initial(const std::function<double(int, double)>& rho_hat, const DiscreteGenerator& gen);

/// L1 distance between two graph densities as functions of h, where `fine`
/// lives on a mesh that refines `coarse`'s faces.
double graph_l1_distance(const DiscreteGenerator& coarse, const GraphDensity& a, const DiscreteGenerator& fine,
                         const GraphDensity& b);

}  // namespace hamcg
