#include "hamcg/graphpde.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "hamcg/errors.hpp"

namespace hamcg {

std::size_t GraphMesh::offset(int k) const noexcept {
  std::size_t off = 0;
  for (int e = 0; e < k; ++e) off += faces[e].size() - 1;
  return off;
}

std::size_t GraphMesh::cell_count() const noexcept { return offset(static_cast<int>(faces.size())); }

GraphMesh uniform_mesh(const ReebGraph& graph, int cells_per_edge) {
  require(cells_per_edge >= 2, "need at least two cells per edge");
  GraphMesh mesh;
  for (const auto& e : graph.edges) {
    std::vector<double> f(cells_per_edge + 1);
    for (int i = 0; i <= cells_per_edge; ++i) f[i] = e.h_lo + (e.h_hi - e.h_lo) * i / cells_per_edge;
    mesh.faces.push_back(std::move(f));
  }
  return mesh;
}

GraphMesh histogram_mesh(const GraphHistogram& hist, int sub) {
  require(sub >= 1, "sub-cells per bin must be >= 1");
  GraphMesh mesh;
  for (const auto& edges : hist.bin_edges) {
    std::vector<double> f;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      for (int s = 0; s < sub; ++s) f.push_back(edges[b] + (edges[b + 1] - edges[b]) * s / sub);
    }
    f.push_back(edges.back());
    mesh.faces.push_back(std::move(f));
  }
  return mesh;
}

DiscreteGenerator assemble(const ReebGraph& graph, const GraphMesh& mesh, const TAFunction& ta, double mass) {
  if (mesh.edge_count() != graph.edges.size()) {
    fail(ErrorKind::MeshTableMismatch, "mesh has " + std::to_string(mesh.edge_count()) + " edges, graph has " +
                                           std::to_string(graph.edges.size()));
  }
  DiscreteGenerator gen;
  gen.mesh = mesh;
  const std::size_t n = mesh.cell_count();
  gen.weight.resize(n);
  std::vector<Eigen::Triplet<double>> trip;

  for (const auto& e : graph.edges) {
    if (graph.vertices[e.upper_vertex].kind == VertexKind::open_top) gen.top_edge = e.k;
    const auto& f = mesh.faces[e.k];
    if (f.size() < 3) fail(ErrorKind::MeshTableMismatch, "edge " + std::to_string(e.k) + " has fewer than 2 cells");
    const double tol = 1e-9 * std::max(1.0, std::abs(e.h_hi));
    if (std::abs(f.front() - e.h_lo) > tol || std::abs(f.back() - e.h_hi) > tol) {
      fail(ErrorKind::MeshTableMismatch, "mesh faces of edge " + std::to_string(e.k) + " do not span its h-range");
    }
    gen.face_offset.push_back(static_cast<int>(gen.face_ta.size()));
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i > 0 && !(f[i] > f[i - 1])) fail(ErrorKind::MeshTableMismatch, "mesh faces must increase");
      const double v = ta(e.k, i == 0 ? e.h_lo : (i + 1 == f.size() ? e.h_hi : f[i]));
      if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::MeshTableMismatch, "TA must be finite and >= 0");
      gen.face_ta.push_back(v);
    }
    const std::size_t off = mesh.offset(e.k);
    const int nc = mesh.cells(e.k);
    const double* tf = &gen.face_ta[gen.face_offset.back()];
    for (int c = 0; c < nc; ++c) {
      gen.weight[off + c] = mass * (tf[c + 1] - tf[c]);
      if (!(gen.weight[off + c] > 0.0)) {
        fail(ErrorKind::MeshTableMismatch, "TA not increasing across cell " + std::to_string(c) + " of edge " +
                                               std::to_string(e.k));
      }
    }
    for (int c = 0; c + 1 < nc; ++c) {
      const double d = mesh.center(e.k, c + 1) - mesh.center(e.k, c);
      const double w = tf[c + 1] / d;
      const std::size_t a = off + c, b = off + c + 1;
      trip.emplace_back(a, a, -w);
      trip.emplace_back(b, b, -w);
      trip.emplace_back(a, b, w);
      trip.emplace_back(b, a, w);
    }
  }

  for (const auto& v : graph.vertices) {
    if (v.kind != VertexKind::interior_saddle) continue;
    DiscreteGenerator::VertexLink link;
    link.vertex = v.id;
    for (const auto& e : graph.edges) {
      for (const auto& [vid, sign] : e.incidence) {
        if (vid != v.id) continue;
        const int nc = mesh.cells(e.k);
        const int c = sign > 0 ? nc - 1 : 0;
        const double dist = std::abs(mesh.center(e.k, c) - v.h);
        const double t = gen.face_ta[gen.face_offset[e.k] + (sign > 0 ? nc : 0)];
        link.cells.push_back(mesh.offset(e.k) + c);
        link.w.push_back(t / dist);
        link.sign.push_back(sign);
      }
    }
    double total = 0.0;
    for (double w : link.w) total += w;
    if (total > 0.0) {
      // cell i gains w_i (f_O - f_i), f_O = sum_j w_j f_j / total
      for (std::size_t i = 0; i < link.cells.size(); ++i) {
        trip.emplace_back(link.cells[i], link.cells[i], -link.w[i]);
        for (std::size_t j = 0; j < link.cells.size(); ++j) {
          trip.emplace_back(link.cells[i], link.cells[j], link.w[i] * link.w[j] / total);
        }
      }
    }
    gen.vertex_links.push_back(std::move(link));
  }
  gen.L.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  gen.L.setFromTriplets(trip.begin(), trip.end());
  gen.L.makeCompressed();
  return gen;
}

DiscreteGenerator assemble(const ReebGraph& graph, const EdgeCoefficientTable& table, const GraphMesh& mesh) {
  if (table.edges.size() != graph.edges.size()) {
    fail(ErrorKind::MeshTableMismatch, "table and graph disagree on the edge count");
  }
  if (mesh.edge_count() != graph.edges.size()) {
    fail(ErrorKind::MeshTableMismatch, "mesh and graph disagree on the edge count");
  }
  std::vector<double> lo(graph.edges.size()), hi(graph.edges.size());
  for (const auto& ec : table.edges) {
    lo[ec.k] = ec.TA_lo;
    hi[ec.k] = ec.TA_hi;
  }
  for (const auto& v : graph.vertices) {
    if (v.kind != VertexKind::interior_saddle) continue;
    double r = 0.0;
    int count = 0;
    for (const auto& e : graph.edges) {
      for (const auto& [vid, sign] : e.incidence) {
        if (vid == v.id) {
          r += sign * (sign > 0 ? hi[e.k] : lo[e.k]);
          ++count;
        }
      }
    }
    for (const auto& e : graph.edges) {
      for (const auto& [vid, sign] : e.incidence) {
        if (vid != v.id) continue;
        (sign > 0 ? hi[e.k] : lo[e.k]) -= sign * r / count;
      }
    }
  }
  for (const auto& e : graph.edges) {
    const auto& f = mesh.faces.at(e.k);
    const auto& ec = table.edges[e.k];
    if (f.front() < ec.h_lo - 1e-12 || f.back() > ec.h_hi + 1e-12) {
      fail(ErrorKind::MeshTableMismatch, "mesh extends beyond the table on edge " + std::to_string(e.k));
    }
  }
  const TAFunction ta = [&](int k, double h) {
    const ReebEdge& e = graph.edges[k];
    if (h == e.h_lo) return lo[k];
    if (h == e.h_hi) return hi[k];
    return table.TA_at(k, h);
  };
  return assemble(graph, mesh, ta, table.mass);
}

std::vector<double> DiscreteGenerator::mass_rate(const std::vector<double>& f) const {
  require(f.size() == weight.size(), "density size does not match the mesh");
  const Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::VectorXd y = L * x;
  return {y.data(), y.data() + y.size()};
}

std::vector<double> DiscreteGenerator::face_fluxes(const std::vector<double>& f, int k) const {
  const std::size_t off = mesh.offset(k);
  const int nc = mesh.cells(k);
  std::vector<double> out(nc > 0 ? nc - 1 : 0);
  for (int c = 0; c + 1 < nc; ++c) {
    const double d = mesh.center(k, c + 1) - mesh.center(k, c);
    out[c] = face_ta[face_offset[k] + c + 1] * (f[off + c + 1] - f[off + c]) / d;
  }
  return out;
}

double DiscreteGenerator::vertex_value(const VertexLink& v, const std::vector<double>& f) const {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < v.cells.size(); ++i) {
    num += v.w[i] * f[v.cells[i]];
    den += v.w[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

double DiscreteGenerator::vertex_residual(const VertexLink& v, const std::vector<double>& f) const {
  const double fo = vertex_value(v, f);
  double r = 0.0;
  for (std::size_t i = 0; i < v.cells.size(); ++i) r += v.w[i] * (fo - f[v.cells[i]]);
  return r;
}

double GraphDensity::total_mass(const DiscreteGenerator& gen) const {
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) s += f[c] * gen.weight[c];
  return s;
}

double GraphDensity::mean_h(const DiscreteGenerator& gen) const {
  double s = 0.0, m = 0.0;
  for (std::size_t k = 0; k < gen.mesh.edge_count(); ++k) {
    const std::size_t off = gen.mesh.offset(static_cast<int>(k));
    for (int c = 0; c < gen.mesh.cells(static_cast<int>(k)); ++c) {
      const double w = f[off + c] * gen.weight[off + c];
      s += w * gen.mesh.center(static_cast<int>(k), c);
      m += w;
    }
  }
  return m > 0.0 ? s / m : 0.0;
}

GraphTrajectory evolve(const DiscreteGenerator& gen, const GraphDensity& init, double t_end, double dt,
                       const EvolveOptions& options) {
  require(dt > 0.0, "dt must be positive");
  require(t_end >= init.t, "t_end precedes the initial time");
  const std::size_t n = gen.weight.size();
  require(init.f.size() == n, "initial density does not match the mesh");

  Eigen::SparseMatrix<double> M = -gen.L;
  for (std::size_t c = 0; c < n; ++c) M.coeffRef(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += gen.weight[c] / dt;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(M);
  if (solver.info() != Eigen::Success) fail(ErrorKind::SolveFailure, "LDL^T factorisation failed");

  std::vector<double> times = options.snapshot_times;
  if (times.empty()) times.push_back(t_end);
  GraphTrajectory traj;
  GraphDensity cur = init;
  const std::size_t total_steps = static_cast<std::size_t>(std::llround((t_end - init.t) / dt));
  std::size_t step = 0;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));

  auto cap_mass = [&](const GraphDensity& g) {
    if (gen.top_edge < 0) return 0.0;
    const int nc = gen.mesh.cells(gen.top_edge);
    const std::size_t off = gen.mesh.offset(gen.top_edge);
    double s = 0.0;
    for (int c = std::max(0, nc - options.cap_cells); c < nc; ++c) s += g.cell_mass(gen, off + c);
    return s;
  };

  for (double target : times) {
    require(target >= cur.t - 1e-12 && target <= t_end + 1e-12, "snapshot times must be sorted within [t0, t_end]");
    const std::size_t target_step = static_cast<std::size_t>(std::llround((target - init.t) / dt));
    while (step < std::min(target_step, total_steps)) {
      const double before = cur.total_mass(gen);
      for (std::size_t c = 0; c < n; ++c) rhs[static_cast<Eigen::Index>(c)] = gen.weight[c] / dt * cur.f[c];
      const Eigen::VectorXd x = solver.solve(rhs);
      if (solver.info() != Eigen::Success || !x.allFinite()) fail(ErrorKind::SolveFailure, "implicit step failed");
      bool negative = false;
      for (std::size_t c = 0; c < n; ++c) {
        cur.f[c] = x[static_cast<Eigen::Index>(c)];
        if (cur.f[c] < 0.0) {
          negative = true;
          cur.f[c] = 0.0;
        }
      }
      if (negative) {
        ++traj.diagnostics.negativity_events;
        const double after = cur.total_mass(gen);
        if (after > 0.0) {
          for (double& v : cur.f) v *= before / after;
        }
      }
      const double after = cur.total_mass(gen);
      traj.diagnostics.max_mass_drift_per_step =
          std::max(traj.diagnostics.max_mass_drift_per_step, std::abs(after - before));
      for (const auto& link : gen.vertex_links) {
        traj.diagnostics.max_vertex_residual =
            std::max(traj.diagnostics.max_vertex_residual, std::abs(gen.vertex_residual(link, cur.f)));
      }
      traj.diagnostics.max_cap_mass = std::max(traj.diagnostics.max_cap_mass, cap_mass(cur));
      ++step;
      cur.t = init.t + static_cast<double>(step) * dt;
    }
    cur.t = init.t + static_cast<double>(step) * dt;
    traj.snapshots.push_back(cur);
  }
  traj.diagnostics.steps = step;
  return traj;
}

GraphDensity project_initial(const GraphHistogram& hist, const DiscreteGenerator& gen) {
  const GraphMesh& mesh = gen.mesh;
  if (hist.mass.size() != mesh.edge_count()) fail(ErrorKind::MeshTableMismatch, "histogram and mesh edge counts differ");
  GraphDensity out;
  out.f.assign(mesh.cell_count(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < hist.mass.size(); ++k) {
    const auto& be = hist.bin_edges[k];
    const auto& faces = mesh.faces[k];
    const std::size_t off = mesh.offset(static_cast<int>(k));
    for (std::size_t b = 0; b < hist.mass[k].size(); ++b) {
      const double m = hist.mass[k][b];
      if (m == 0.0) continue;
      total += m;
      const double lo = be[b], hi = be[b + 1];
      for (std::size_t c = 0; c + 1 < faces.size(); ++c) {
        const double overlap = std::min(hi, faces[c + 1]) - std::max(lo, faces[c]);
        if (overlap > 0.0) out.f[off + c] += m * overlap / (hi - lo);
      }
    }
  }
  if (!(total > 0.0)) fail(ErrorKind::EmptySource, "histogram carries no classified mass");
  for (std::size_t c = 0; c < out.f.size(); ++c) out.f[c] /= total * gen.weight[c];
  return out;
}

GraphDensity project_initial(const ReebGraph& graph, const std::vector<std::array<double, 3>>& points,
                             const DiscreteGenerator& gen) {
  const GraphMesh& mesh = gen.mesh;
  GraphDensity out;
  out.f.assign(mesh.cell_count(), 0.0);
  double total = 0.0;
  for (const auto& [q, p, m] : points) {
    if (m <= 0.0) continue;
    int k;
    try {
      k = classify_point(graph, q, p);
    } catch (const Error&) {
      continue;
    }
    const double h = graph.model.H(q, p);
    const auto& faces = mesh.faces[k];
    const int c = std::clamp(static_cast<int>(std::upper_bound(faces.begin(), faces.end(), h) - faces.begin()) - 1, 0,
                             mesh.cells(k) - 1);
    out.f[mesh.offset(k) + c] += m;
    total += m;
  }
  if (!(total > 0.0)) fail(ErrorKind::EmptySource, "no mass could be placed on the graph");
  for (std::size_t c = 0; c < out.f.size(); ++c) out.f[c] /= total * gen.weight[c];
  return out;
}

GraphDensity project_initial(const std::function<double(int, double)>& rho_hat, const DiscreteGenerator& gen) {
  const GraphMesh& mesh = gen.mesh;
  GraphDensity out;
  out.f.assign(mesh.cell_count(), 0.0);
  const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double total = 0.0;
  for (std::size_t k = 0; k < mesh.edge_count(); ++k) {
    const std::size_t off = mesh.offset(static_cast<int>(k));
    for (int c = 0; c < mesh.cells(static_cast<int>(k)); ++c) {
      const double a = mesh.faces[k][c], b = mesh.faces[k][c + 1];
      double m = 0.0;
      for (int g = 0; g < 3; ++g) m += gw[g] * rho_hat(static_cast<int>(k), 0.5 * (a + b) + 0.5 * (b - a) * gx[g]);
      m *= 0.5 * (b - a);
      out.f[off + c] = std::max(0.0, m);
      total += out.f[off + c];
    }
  }
  if (!(total > 0.0)) fail(ErrorKind::EmptySource, "initial density has no mass");
  for (std::size_t c = 0; c < out.f.size(); ++c) out.f[c] /= total * gen.weight[c];
  return out;
}

double graph_l1_distance(const DiscreteGenerator& ga, const GraphDensity& a, const DiscreteGenerator& gb,
                         const GraphDensity& b) {
  require(ga.mesh.edge_count() == gb.mesh.edge_count(), "meshes differ in edge count");
  double total = 0.0;
  for (std::size_t k = 0; k < ga.mesh.edge_count(); ++k) {
    const auto& fa = ga.mesh.faces[k];
    const auto& fb = gb.mesh.faces[k];
    const std::size_t oa = ga.mesh.offset(static_cast<int>(k)), ob = gb.mesh.offset(static_cast<int>(k));
    std::size_t i = 0, j = 0;
    double x = std::max(fa.front(), fb.front());
    while (i + 1 < fa.size() && j + 1 < fb.size()) {
      const double next = std::min(fa[i + 1], fb[j + 1]);
      if (next > x) {
        const double da = a.f[oa + i] * ga.weight[oa + i] / (fa[i + 1] - fa[i]);
        const double db = b.f[ob + j] * gb.weight[ob + j] / (fb[j + 1] - fb[j]);
        total += std::abs(da - db) * (next - x);
        x = next;
      }
      if (fa[i + 1] <= next) ++i;
      if (fb[j + 1] <= next) ++j;
    }
  }
  return total;
}

}  // namespace hamcg
