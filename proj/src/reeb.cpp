#include "hamcg/reeb.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <string>

#include "hamcg/errors.hpp"
#include "hamcg/parallel.hpp"

namespace hamcg {

std::vector<int> ReebGraph::edges_at_vertex(int vid) const {
  std::vector<int> out;
  for (const auto& e : edges) {
    for (const auto& [v, s] : e.incidence) {
      if (v == vid) out.push_back(e.k);
    }
  }
  return out;
}

std::vector<double> ReebGraph::saddle_values() const {
  std::vector<double> out;
  for (const auto& v : vertices) {
    if (v.kind == VertexKind::interior_saddle) out.push_back(v.h);
  }
  return out;
}

int ReebGraph::edge_above(int vid) const {
  for (const auto& e : edges) {
    if (e.lower_vertex == vid) return e.k;
  }
  return -1;
}

namespace {

struct Pending {
  double h_lo = 0.0, h_hi = 0.0;
  int lower_cp = -1, upper_cp = -1;  // indices into the critical point list; -1 upper = open top
  bool closed = false;
};

bool near(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

void check_box(const HamiltonianModel& model, const BoxDomain& box, double h_max) {
  const int n = 4 * std::max(box.nq, box.np);
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double q = box.q_lo + (box.q_hi - box.q_lo) * i / n;
    const double p = box.p_lo + (box.p_hi - box.p_lo) * i / n;
    lowest = std::min({lowest, model.H(q, box.p_lo), model.H(q, box.p_hi), model.H(box.q_lo, p),
                       model.H(box.q_hi, p)});
  }
  if (lowest <= h_max) {
    fail(ErrorKind::BoxTooSmall, "H reaches " + std::to_string(lowest) + " <= h_max=" + std::to_string(h_max) +
                                     " on the box boundary");
  }
}

}  // namespace

ReebGraph build_reeb_graph(const HamiltonianModel& model, const BoxDomain& box, double h_max,
                           const ReebOptions& options) {
  model.validate();
  box.validate();
  require(model.dim == 1, "Reeb graph construction requires d = 1");
  const std::vector<CriticalPoint> crit = find_critical_points(model, box);
  require(!crit.empty(), "no critical points inside the box");
  for (const auto& c : crit) {
    if (c.degenerate) {
      fail(ErrorKind::DegenerateCritical, "critical point at q=" + std::to_string(c.q) + " has V''=" +
                                              std::to_string(c.curvature));
    }
    require(c.value < h_max, "critical value " + std::to_string(c.value) + " is not below h_max");
  }
  check_box(model, box, h_max);

  // Bands are delimited by saddle values only: crossing a minimum's level
  // changes nothing for the other components, and thin bands there would
  // fragment under discretisation.
  const double tol = options.level_tolerance;
  std::vector<double> saddle_vals;
  for (const auto& c : crit) {
    if (c.kind == CriticalKind::saddle) saddle_vals.push_back(c.value);
  }
  std::sort(saddle_vals.begin(), saddle_vals.end());

  const int nq = box.nq, np = box.np;
  const std::size_t ncell = box.cell_count();
  std::vector<int> band(ncell, -1);
  std::vector<char> ambiguous(ncell, 0);
  std::vector<double> hc(ncell);
  const double dq = box.dq(), dp = box.dp();

  parallel_for(0, static_cast<std::size_t>(np), [&](std::size_t jp) {
    for (int iq = 0; iq < nq; ++iq) {
      const std::size_t c = box.index(iq, static_cast<int>(jp));
      const double q0 = box.q_center(iq), p0 = box.p_center(static_cast<int>(jp));
      const double h = model.H(q0, p0);
      hc[c] = h;
      double lo = h, hi = h;
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
          const double v = model.H(q0 + 0.5 * a * dq, p0 + 0.5 * b * dp);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      if (lo > h_max) continue;
      const double margin = 0.25 * (hi - lo);
      for (double s : saddle_vals) {
        if (lo - margin <= s && s <= hi + margin) ambiguous[c] = 1;
      }
      if (h > h_max) {
        if (!ambiguous[c]) continue;
      }
      band[c] = static_cast<int>(std::lower_bound(saddle_vals.begin(), saddle_vals.end(), h) - saddle_vals.begin());
    }
  });

  auto usable = [&](std::size_t c) { return band[c] >= 0 && !ambiguous[c] && hc[c] <= h_max; };

  // Flood fill each band (4-connectivity) over non-ambiguous cells.
  std::vector<int> comp(ncell, -1);
  std::vector<int> comp_band;
  std::vector<std::vector<std::size_t>> comp_cells;
  auto neighbours = [&](std::size_t c, auto&& visit) {
    const int iq = static_cast<int>(c % nq), jp = static_cast<int>(c / nq);
    if (iq > 0) visit(c - 1);
    if (iq + 1 < nq) visit(c + 1);
    if (jp > 0) visit(c - nq);
    if (jp + 1 < np) visit(c + nq);
  };
  for (std::size_t c0 = 0; c0 < ncell; ++c0) {
    if (!usable(c0) || comp[c0] >= 0) continue;
    const int id = static_cast<int>(comp_cells.size());
    comp_cells.emplace_back();
    comp_band.push_back(band[c0]);
    std::deque<std::size_t> queue{c0};
    comp[c0] = id;
    while (!queue.empty()) {
      const std::size_t c = queue.front();
      queue.pop_front();
      comp_cells[id].push_back(c);
      neighbours(c, [&](std::size_t n) {
        if (usable(n) && comp[n] < 0 && band[n] == band[c0]) {
          comp[n] = id;
          queue.push_back(n);
        }
      });
    }
  }

  // Stitch bands bottom-up.
  const int ncomp = static_cast<int>(comp_cells.size());
  std::vector<int> comp_edge(ncomp, -1);
  std::vector<Pending> pending;
  std::vector<char> cp_used(crit.size(), 0);
  std::vector<int> claimed_by(ncomp, -1);
  std::vector<int> stamp(ncell, -1);
  const int nbands = static_cast<int>(saddle_vals.size()) + 1;

  auto critical_at = [&](double level, CriticalKind kind) {
    std::vector<int> out;
    for (std::size_t i = 0; i < crit.size(); ++i) {
      if (crit[i].kind == kind && near(crit[i].value, level, tol)) out.push_back(static_cast<int>(i));
    }
    return out;
  };

  for (int b = 0; b < nbands; ++b) {
    for (int id = 0; id < ncomp; ++id) {
      if (comp_band[id] != b) continue;
      std::set<int> below;
      if (b > 0) {
        std::deque<std::pair<std::size_t, int>> queue;
        for (std::size_t c : comp_cells[id]) {
          queue.emplace_back(c, 0);
          stamp[c] = id;
        }
        while (!queue.empty()) {
          const auto [c, depth] = queue.front();
          queue.pop_front();
          neighbours(c, [&](std::size_t n) {
            if (usable(n)) {
              if (band[n] == b - 1) below.insert(comp[n]);
            } else if (ambiguous[n] && stamp[n] != id && depth < options.adjacency_depth) {
              stamp[n] = id;
              queue.emplace_back(n, depth + 1);
            }
          });
        }
      }
      for (int lower : below) {
        if (claimed_by[lower] >= 0) {
          fail(ErrorKind::GridTooCoarse, "band component split across two upper components; refine the grid");
        }
        claimed_by[lower] = id;
      }
      if (below.empty()) {
        // a disk around the one minimum it contains
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < crit.size(); ++i) {
          if (crit[i].kind != CriticalKind::minimum || cp_used[i]) continue;
          for (std::size_t c : comp_cells[id]) {
            const double d = std::hypot(box.q_center(static_cast<int>(c % nq)) - crit[i].q,
                                        box.p_center(static_cast<int>(c / nq)) - crit[i].p);
            if (d < best_d) {
              best_d = d;
              best = static_cast<int>(i);
            }
          }
        }
        if (best < 0 || best_d > 2.0 * std::hypot(dq, dp)) {
          fail(ErrorKind::GridTooCoarse, "band component " + std::to_string(b) +
                                             " has no predecessor and no minimum; refine the grid");
        }
        cp_used[best] = 1;
        comp_edge[id] = static_cast<int>(pending.size());
        pending.push_back({crit[best].value, h_max, best, -1, false});
      } else if (below.size() == 1) {
        comp_edge[id] = comp_edge[*below.begin()];
      } else if (below.size() == 2) {
        const auto sad = critical_at(saddle_vals[b - 1], CriticalKind::saddle);
        if (sad.size() != 1 || cp_used[sad[0]]) {
          fail(ErrorKind::GridTooCoarse, "merge of two components without a matching saddle at h=" +
                                             std::to_string(saddle_vals[b - 1]));
        }
        const int s = sad[0];
        cp_used[s] = 1;
        for (int lower : below) {
          Pending& e = pending[comp_edge[lower]];
          if (e.closed) fail(ErrorKind::GridTooCoarse, "edge closed twice");
          e.closed = true;
          e.h_hi = crit[s].value;
          e.upper_cp = s;
        }
        comp_edge[id] = static_cast<int>(pending.size());
        pending.push_back({crit[s].value, h_max, s, -1, false});
      } else {
        fail(ErrorKind::GridTooCoarse, std::to_string(below.size()) + " components meet at h=" +
                                           std::to_string(saddle_vals[b - 1]) + "; refine the grid");
      }
    }
  }
  for (std::size_t i = 0; i < crit.size(); ++i) {
    if (!cp_used[i]) {
      fail(ErrorKind::GridTooCoarse, "critical point at q=" + std::to_string(crit[i].q) +
                                         " not resolved by the grid; refine it");
    }
  }
  int open = 0;
  for (const auto& e : pending) open += e.closed ? 0 : 1;
  if (open != 1) fail(ErrorKind::GridTooCoarse, std::to_string(open) + " edges reach h_max, expected 1");

  ReebGraph g;
  g.model = model;
  g.box = box;
  g.h_max = h_max;
  g.level_tolerance = tol;

  std::vector<int> mins, sads;
  for (std::size_t i = 0; i < crit.size(); ++i) {
    (crit[i].kind == CriticalKind::minimum ? mins : sads).push_back(static_cast<int>(i));
  }
  auto by_q = [&](int a, int b) { return crit[a].q < crit[b].q; };
  std::sort(mins.begin(), mins.end(), by_q);
  std::sort(sads.begin(), sads.end(), by_q);
  std::vector<int> vid_of(crit.size(), -1);
  for (int i : mins) {
    vid_of[i] = static_cast<int>(g.vertices.size());
    g.vertices.push_back({vid_of[i], VertexKind::exterior_min, crit[i].value, std::make_pair(crit[i].q, 0.0)});
  }
  for (int i : sads) {
    vid_of[i] = static_cast<int>(g.vertices.size());
    g.vertices.push_back({vid_of[i], VertexKind::interior_saddle, crit[i].value, std::make_pair(crit[i].q, 0.0)});
  }
  const int top = static_cast<int>(g.vertices.size());
  g.vertices.push_back({top, VertexKind::open_top, h_max, std::nullopt});

  std::vector<int> order(pending.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pending[a].h_lo != pending[b].h_lo) return pending[a].h_lo < pending[b].h_lo;
    return crit[pending[a].lower_cp].q < crit[pending[b].lower_cp].q;
  });
  std::vector<int> new_index(pending.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Pending& pe = pending[order[k]];
    new_index[order[k]] = static_cast<int>(k);
    ReebEdge e;
    e.k = static_cast<int>(k);
    e.h_lo = pe.h_lo;
    e.h_hi = pe.closed ? pe.h_hi : h_max;
    e.lower_vertex = vid_of[pe.lower_cp];
    e.upper_vertex = pe.closed ? vid_of[pe.upper_cp] : top;
    e.incidence = {{e.lower_vertex, -1}, {e.upper_vertex, +1}};
    g.edges.push_back(e);
  }

  g.label_grid.assign(ncell, ReebGraph::kOutside);
  for (std::size_t c = 0; c < ncell; ++c) {
    if (hc[c] > h_max && !ambiguous[c]) continue;
    if (ambiguous[c] || band[c] < 0) {
      g.label_grid[c] = hc[c] > h_max ? ReebGraph::kOutside : ReebGraph::kAmbiguous;
      continue;
    }
    g.label_grid[c] = comp[c] >= 0 ? new_index[comp_edge[comp[c]]] : ReebGraph::kAmbiguous;
  }

  std::vector<double> best(g.edges.size(), std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < ncell; ++c) {
    const int k = g.label_grid[c];
    if (k < 0) continue;
    const double mid = 0.5 * (g.edges[k].h_lo + g.edges[k].h_hi);
    const double d = std::abs(hc[c] - mid);
    if (d < best[k]) {
      best[k] = d;
      g.edges[k].seed_q = box.q_center(static_cast<int>(c % nq));
      g.edges[k].seed_p = box.p_center(static_cast<int>(c / nq));
    }
  }

  for (const auto& v : g.vertices) {
    const auto deg = g.edges_at_vertex(v.id).size();
    const std::size_t want = v.kind == VertexKind::interior_saddle ? 3 : 1;
    if (deg != want) {
      fail(ErrorKind::GridTooCoarse, "vertex " + std::to_string(v.id) + " has degree " + std::to_string(deg));
    }
  }
  return g;
}

namespace {

void check_level(const ReebGraph& graph, double q, double p, double h) {
  if (!graph.box.contains(q, p) || h > graph.h_max + graph.level_tolerance * std::max(1.0, std::abs(graph.h_max))) {
    fail(ErrorKind::OutsideGraph, "point (" + std::to_string(q) + ", " + std::to_string(p) + ") outside the graph");
  }
  for (const auto& v : graph.vertices) {
    if (v.kind != VertexKind::interior_saddle) continue;
    if (std::abs(h - v.h) < graph.level_tolerance * std::max(1.0, std::abs(v.h))) {
      fail(ErrorKind::NearCriticalLevel, "H=" + std::to_string(h) + " is at the saddle level " + std::to_string(v.h));
    }
  }
}

}  // namespace

int classify_point_exact(const ReebGraph& graph, double q, double p) {
  const double h = graph.model.H(q, p);
  check_level(graph, q, p, h);
  double a = -std::numeric_limits<double>::infinity(), b = std::numeric_limits<double>::infinity();
  for (const auto& v : graph.vertices) {
    if (v.kind != VertexKind::interior_saddle || v.h <= h) continue;
    const double s = v.location->first;
    if (s < q) a = std::max(a, s);
    else b = std::min(b, s);
  }
  int leaf = -1;
  for (const auto& v : graph.vertices) {
    if (v.kind == VertexKind::exterior_min && v.location->first > a && v.location->first < b) {
      leaf = v.id;
      break;
    }
  }
  if (leaf < 0) fail(ErrorKind::OutsideGraph, "no minimum below the component through q=" + std::to_string(q));
  int k = graph.edge_above(leaf);
  while (k >= 0 && h > graph.edges[k].h_hi) {
    const int up = graph.edges[k].upper_vertex;
    if (graph.vertices[up].kind == VertexKind::open_top) break;
    k = graph.edge_above(up);
  }
  if (k < 0) fail(ErrorKind::OutsideGraph, "component not found in the graph");
  return k;
}

int classify_point(const ReebGraph& graph, double q, double p) {
  const double h = graph.model.H(q, p);
  check_level(graph, q, p, h);
  const BoxDomain& box = graph.box;
  const int iq = std::clamp(static_cast<int>((q - box.q_lo) / box.dq()), 0, box.nq - 1);
  const int jp = std::clamp(static_cast<int>((p - box.p_lo) / box.dp()), 0, box.np - 1);
  const int k = graph.label_grid.empty() ? -1 : graph.label_grid[box.index(iq, jp)];
  if (k >= 0) {
    const ReebEdge& e = graph.edges[k];
    const bool at_min = graph.vertices[e.lower_vertex].kind == VertexKind::exterior_min;
    if ((h > e.h_lo || (at_min && h >= e.h_lo - 1e-12)) && h <= e.h_hi) return k;
  }
  return classify_point_exact(graph, q, p);
}

XiValue xi(const ReebGraph& graph, double q, double p) { return {graph.model.H(q, p), classify_point(graph, q, p)}; }

double GraphHistogram::classified_mass() const {
  double s = 0.0;
  for (const auto& m : mass) {
    for (double x : m) s += x;
  }
  return s;
}

GraphHistogram empirical_pushforward(const ReebGraph& graph, const ParticleEnsemble& ens, int bins_per_edge) {
  require(bins_per_edge >= 1, "bins_per_edge must be >= 1");
  require(ens.dim == 1, "push-forward to the graph needs d = 1");
  GraphHistogram hist;
  hist.bins_per_edge = bins_per_edge;
  hist.total = ens.size();
  for (const auto& e : graph.edges) {
    std::vector<double> edges(bins_per_edge + 1);
    for (int i = 0; i <= bins_per_edge; ++i) edges[i] = e.h_lo + (e.h_hi - e.h_lo) * i / bins_per_edge;
    hist.bin_edges.push_back(std::move(edges));
    hist.mass.emplace_back(bins_per_edge, 0.0);
  }
  const std::size_t n = ens.size();
  // -1 spill, -2 dropped, otherwise k * bins + bin
  std::vector<long> slot(n);
  parallel_for(0, n, [&](std::size_t i) {
    try {
      const double q = ens.q[i], p = ens.p[i];
      const int k = classify_point(graph, q, p);
      const ReebEdge& e = graph.edges[k];
      const double h = graph.model.H(q, p);
      const int bin = std::clamp(static_cast<int>((h - e.h_lo) / (e.h_hi - e.h_lo) * bins_per_edge), 0,
                                 bins_per_edge - 1);
      slot[i] = static_cast<long>(k) * bins_per_edge + bin;
    } catch (const Error& err) {
      slot[i] = err.kind() == ErrorKind::NearCriticalLevel ? -1 : -2;
    }
  });
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (slot[i] == -1) hist.spill += w;
    else if (slot[i] == -2) hist.dropped += w;
    else hist.mass[slot[i] / bins_per_edge][slot[i] % bins_per_edge] += w;
  }
  return hist;
}

}  // namespace hamcg
