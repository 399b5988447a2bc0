#include "hamcg/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>

#include "hamcg/errors.hpp"
#include "hamcg/parallel.hpp"

namespace hamcg {

ContourGrid::ContourGrid(const HamiltonianModel& model, const BoxDomain& box, int resolution)
    : model_(model), box_(box), n_(resolution) {
  require(resolution >= 8, "contour resolution must be >= 8");
  box.validate();
  const int n = n_;
  node_h_.resize(static_cast<std::size_t>(n + 1) * (n + 1));
  parallel_for(0, static_cast<std::size_t>(n + 1), [&](std::size_t j) {
    const double p = box_.p_lo + (box_.p_hi - box_.p_lo) * static_cast<double>(j) / n;
    for (int i = 0; i <= n; ++i) {
      const double q = box_.q_lo + (box_.q_hi - box_.q_lo) * i / n;
      node_h_[j * (n + 1) + i] = model_.H(q, p);
    }
  });
}

std::vector<LevelCurve> ContourGrid::extract(double h, double tolerance) const {
  const int n = n_;
  const int w = n + 1;
  const double sq = (box_.q_hi - box_.q_lo) / n, sp = (box_.p_hi - box_.p_lo) / n;
  auto node_q = [&](int i) { return box_.q_lo + sq * i; };
  auto node_p = [&](int j) { return box_.p_lo + sp * j; };
  auto inside = [&](int i, int j) { return node_h_[static_cast<std::size_t>(j) * w + i] < h; };
  // edge ids: 2*(node index) for the edge to (i+1,j), +1 for the edge to (i,j+1)
  auto hedge = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * w + i); };
  auto vedge = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * w + i) + 1; };

  std::unordered_map<std::int64_t, std::array<std::int64_t, 2>> link;
  std::vector<std::int64_t> order;
  auto connect_one = [&](std::int64_t a, std::int64_t b) {
    auto [it, fresh] = link.try_emplace(a, std::array<std::int64_t, 2>{-1, -1});
    if (fresh) order.push_back(a);
    auto& slots = it->second;
    (slots[0] < 0 ? slots[0] : slots[1]) = b;
  };
  auto connect = [&](std::int64_t a, std::int64_t b) {
    connect_one(a, b);
    connect_one(b, a);
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int c = (inside(i, j) ? 1 : 0) | (inside(i + 1, j) ? 2 : 0) | (inside(i + 1, j + 1) ? 4 : 0) |
                    (inside(i, j + 1) ? 8 : 0);
      if (c == 0 || c == 15) continue;
      const std::int64_t e0 = hedge(i, j), e1 = vedge(i + 1, j), e2 = hedge(i, j + 1), e3 = vedge(i, j);
      if (c == 5 || c == 10) {
        const bool centre_in = model_.H(node_q(i) + 0.5 * sq, node_p(j) + 0.5 * sp) < h;
        if ((c == 5) == centre_in) {
          connect(e0, e1);
          connect(e2, e3);
        } else {
          connect(e3, e0);
          connect(e1, e2);
        }
        continue;
      }
      std::int64_t cut[2];
      int m = 0;
      if (((c >> 0) ^ (c >> 1)) & 1) cut[m++] = e0;
      if (((c >> 1) ^ (c >> 2)) & 1) cut[m++] = e1;
      if (((c >> 2) ^ (c >> 3)) & 1) cut[m++] = e2;
      if (((c >> 3) ^ (c >> 0)) & 1) cut[m++] = e3;
      connect(cut[0], cut[1]);
    }
  }

  auto crossing = [&](std::int64_t id) -> std::array<double, 2> {
    const std::int64_t node = id / 2;
    const int i = static_cast<int>(node % w), j = static_cast<int>(node / w);
    double q0 = node_q(i), p0 = node_p(j);
    double q1 = (id & 1) ? q0 : node_q(i + 1), p1 = (id & 1) ? node_p(j + 1) : p0;
    double f0 = model_.H(q0, p0) - h;
    // bisection on the segment parameter
    double a = 0.0, b = 1.0;
    const double len = std::hypot(q1 - q0, p1 - p0);
    while ((b - a) * len > tolerance) {
      const double t = 0.5 * (a + b);
      const double f = model_.H(q0 + t * (q1 - q0), p0 + t * (p1 - p0)) - h;
      if ((f < 0.0) == (f0 < 0.0)) {
        a = t;
        f0 = f;
      } else {
        b = t;
      }
    }
    const double t = 0.5 * (a + b);
    return {q0 + t * (q1 - q0), p0 + t * (p1 - p0)};
  };

  std::vector<LevelCurve> curves;
  std::unordered_map<std::int64_t, char> seen;
  auto walk = [&](std::int64_t start, std::int64_t prev, std::vector<std::int64_t>& path) {
    std::int64_t cur = start;
    while (true) {
      path.push_back(cur);
      seen[cur] = 1;
      const auto& s = link.at(cur);
      std::int64_t next = s[0] == prev ? s[1] : s[0];
      if (s[0] == prev && s[1] == prev) next = -1;
      if (next < 0) return false;
      if (next == start) return true;
      if (seen.count(next)) return false;
      prev = cur;
      cur = next;
    }
  };

  for (std::int64_t start : order) {
    if (seen.count(start)) continue;
    std::vector<std::int64_t> path;
    LevelCurve curve;
    curve.h = h;
    curve.closed = walk(start, -1, path);
    if (!curve.closed) {
      // open at the box border: walk back the other way and splice
      std::vector<std::int64_t> back;
      const auto& s = link.at(start);
      const std::int64_t other = s[0] == path[1 % path.size()] ? s[1] : s[0];
      if (other >= 0 && !seen.count(other)) {
        walk(other, start, back);
        std::reverse(back.begin(), back.end());
        back.insert(back.end(), path.begin(), path.end());
        path.swap(back);
      }
    }
    curve.points.resize(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) curve.points[i] = crossing(path[i]);
    curves.push_back(std::move(curve));
  }
  return curves;
}

namespace {

void check_saddle_distance(const ReebGraph& graph, double h, double exclusion) {
  for (double s : graph.saddle_values()) {
    if (std::abs(h - s) < exclusion * std::max(1.0, std::abs(s))) {
      fail(ErrorKind::TooCloseToSaddle, "h=" + std::to_string(h) + " within the exclusion zone of saddle level " +
                                            std::to_string(s));
    }
  }
}

}  // namespace

LevelCurve extract_level_curve(const ReebGraph& graph, const ContourGrid& grid, double h, int k,
                               const CurveOptions& options) {
  require(k >= 0 && k < static_cast<int>(graph.edges.size()), "edge index out of range");
  const ReebEdge& e = graph.edges[k];
  require(h > e.h_lo && h <= e.h_hi, "h outside the edge range");
  check_saddle_distance(graph, h, options.saddle_exclusion);
  for (auto& c : grid.extract(h, options.bisection_tolerance)) {
    if (!c.closed || c.points.size() < 3) continue;
    int kc = -1;
    try {
      kc = classify_point(graph, c.points[0][0], c.points[0][1]);
    } catch (const Error&) {
      continue;
    }
    if (kc == k) {
      c.k = k;
      return c;
    }
  }
  fail(ErrorKind::ComponentNotFound, "no closed component of H=" + std::to_string(h) + " on edge " +
                                         std::to_string(k));
}

LevelCurve extract_level_curve(const ReebGraph& graph, double h, int k, const CurveOptions& options) {
  const ContourGrid grid(graph.model, graph.box, options.resolution);
  return extract_level_curve(graph, grid, h, k, options);
}

std::vector<LevelCurve> extract_level_curves(const HamiltonianModel& model, const BoxDomain& box, double h,
                                             int resolution) {
  return ContourGrid(model, box, resolution).extract(h);
}

CurveIntegrals integrate_curve(const HamiltonianModel& model, const LevelCurve& curve) {
  require(curve.closed, "line integrals need a closed curve");
  const std::size_t n = curve.points.size();
  require(n >= 3, "curve has fewer than three points");
  CurveIntegrals out;
  const double lap = model.laplacian_p_H();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = curve.points[i];
    const auto& b = curve.points[(i + 1) % n];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    const double q = 0.5 * (a[0] + b[0]), p = 0.5 * (a[1] + b[1]);
    const double g = model.grad_norm(q, p);
    if (!(g > 1e-14)) {
      fail(ErrorKind::VanishingGradient, "|grad H| vanishes on the curve near (" + std::to_string(q) + ", " +
                                             std::to_string(p) + ")");
    }
    const double v = model.dH_dp(p);
    out.T += len / g;
    out.TA += len * v * v / g;
    out.TB += len * lap / g;
  }
  return out;
}

double compute_T(const HamiltonianModel& model, const LevelCurve& curve) { return integrate_curve(model, curve).T; }
double compute_TA(const HamiltonianModel& model, const LevelCurve& curve) { return integrate_curve(model, curve).TA; }
double compute_TB(const HamiltonianModel& model, const LevelCurve& curve) { return integrate_curve(model, curve).TB; }

namespace {

std::vector<char> subtree_mask(const ReebGraph& graph, int k) {
  std::vector<char> mask(graph.edges.size(), 0);
  for (const auto& e : graph.edges) {
    int cur = e.k;
    while (cur >= 0) {
      if (cur == k) {
        mask[e.k] = 1;
        break;
      }
      const int up = graph.edges[cur].upper_vertex;
      if (graph.vertices[up].kind == VertexKind::open_top) break;
      cur = graph.edge_above(up);
    }
  }
  return mask;
}

}  // namespace

double area_TA(const ReebGraph& graph, int k, double h, int sub) {
  require(k >= 0 && k < static_cast<int>(graph.edges.size()), "edge index out of range");
  require(sub >= 1, "subsampling must be >= 1");
  const auto mask = subtree_mask(graph, k);
  const BoxDomain& box = graph.box;
  const HamiltonianModel& model = graph.model;
  std::vector<double> row(box.np, 0.0);
  parallel_for(0, static_cast<std::size_t>(box.np), [&](std::size_t jp) {
    double count = 0.0;
    for (int iq = 0; iq < box.nq; ++iq) {
      const int label = graph.label_grid[box.index(iq, static_cast<int>(jp))];
      if (label >= 0 && !mask[label]) continue;
      for (int a = 0; a < sub; ++a) {
        for (int b = 0; b < sub; ++b) {
          const double q = box.q_lo + (iq + (a + 0.5) / sub) * box.dq();
          const double p = box.p_lo + (static_cast<double>(jp) + (b + 0.5) / sub) * box.dp();
          if (model.H(q, p) > h) continue;
          if (label >= 0) {
            count += 1.0;
            continue;
          }
          try {
            if (mask[classify_point_exact(graph, q, p)]) count += 1.0;
          } catch (const Error&) {
            // on a saddle level: measure zero
          }
        }
      }
    }
    row[jp] = count;
  });
  double total = 0.0;
  for (double r : row) total += r;
  return total * box.cell_volume() / (sub * sub) * model.laplacian_p_H();
}

std::vector<double> edge_samples(const ReebGraph& graph, int k, int count, double delta_min, double delta_sad) {
  require(count >= 8, "need at least 8 samples per edge");
  const ReebEdge& e = graph.edges[k];
  const bool lo_min = graph.vertices[e.lower_vertex].kind == VertexKind::exterior_min;
  const bool hi_top = graph.vertices[e.upper_vertex].kind == VertexKind::open_top;
  const double d_lo = lo_min ? delta_min * std::max(1.0, std::abs(e.h_lo)) : delta_sad * std::max(1.0, std::abs(e.h_lo));
  const double d_hi = hi_top ? 0.0 : delta_sad * std::max(1.0, std::abs(e.h_hi));
  const double width = e.h_hi - e.h_lo;
  require(width > 2.0 * (d_lo + d_hi), "edge " + std::to_string(k) + " is narrower than its exclusion zones");
  const double mid = e.h_lo + 0.5 * width;
  const int half = count / 2;
  std::vector<double> out;
  auto log_run = [&](double end, double dist0, double sign, int m) {
    const double span = 0.5 * width;
    for (int i = 0; i < m; ++i) out.push_back(end + sign * dist0 * std::pow(span / dist0, static_cast<double>(i) / m));
  };
  log_run(e.h_lo, d_lo, +1.0, half);
  const int rest = count - half;
  if (hi_top) {
    for (int i = 0; i < rest; ++i) out.push_back(mid + (e.h_hi - mid) * i / (rest - 1));
  } else {
    out.push_back(mid);
    log_run(e.h_hi, d_hi, -1.0, rest - 1);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> centered_derivative(const std::vector<double>& h, const std::vector<double>& y) {
  require(h.size() == y.size() && h.size() >= 3, "derivative needs >= 3 aligned samples");
  std::vector<double> d(h.size() - 2);
  for (std::size_t i = 1; i + 1 < h.size(); ++i) {
    const double a = h[i] - h[i - 1], b = h[i + 1] - h[i];
    d[i - 1] = (-b / (a * (a + b))) * y[i - 1] + ((b - a) / (a * b)) * y[i] + (a / (b * (a + b))) * y[i + 1];
  }
  return d;
}

namespace {

double quadratic_extrapolate(double x0, double x1, double y1, double x2, double y2, double x3, double y3) {
  const double l1 = (x0 - x2) * (x0 - x3) / ((x1 - x2) * (x1 - x3));
  const double l2 = (x0 - x1) * (x0 - x3) / ((x2 - x1) * (x2 - x3));
  const double l3 = (x0 - x1) * (x0 - x2) / ((x3 - x1) * (x3 - x2));
  return l1 * y1 + l2 * y2 + l3 * y3;
}

}  // namespace

EdgeCoefficientTable tabulate_coefficients(const ReebGraph& graph, const TableOptions& options) {
  EdgeCoefficientTable table;
  table.mass = graph.model.mass;
  table.delta_sad = options.curve.saddle_exclusion;
  table.delta_min = options.min_offset;
  const ContourGrid grid(graph.model, graph.box, options.curve.resolution);

  struct Job {
    int k;
    std::size_t i;
  };
  std::vector<Job> jobs;
  table.edges.resize(graph.edges.size());
  for (const auto& e : graph.edges) {
    EdgeCoefficients& ec = table.edges[e.k];
    ec.k = e.k;
    ec.h_lo = e.h_lo;
    ec.h_hi = e.h_hi;
    ec.h = edge_samples(graph, e.k, options.samples_per_edge, options.min_offset, options.curve.saddle_exclusion);
    const std::size_t n = ec.h.size();
    ec.T.resize(n);
    ec.A.resize(n);
    ec.B.resize(n);
    ec.TA.resize(n);
    ec.TB.resize(n);
    for (std::size_t i = 0; i < n; ++i) jobs.push_back({e.k, i});
  }

  parallel_for(0, jobs.size(), [&](std::size_t j) {
    EdgeCoefficients& ec = table.edges[jobs[j].k];
    const std::size_t i = jobs[j].i;
    const LevelCurve c = extract_level_curve(graph, grid, ec.h[i], ec.k, options.curve);
    const CurveIntegrals v = integrate_curve(graph.model, c);
    ec.T[i] = v.T;
    ec.TA[i] = v.TA;
    ec.TB[i] = v.TB;
    ec.A[i] = v.TA / v.T;
    ec.B[i] = v.TB / v.T;
  });

  const double inf = std::numeric_limits<double>::infinity();
  for (auto& ec : table.edges) {
    const ReebEdge& e = graph.edges[ec.k];
    const std::size_t n = ec.h.size();
    const bool lo_min = graph.vertices[e.lower_vertex].kind == VertexKind::exterior_min;
    const bool hi_top = graph.vertices[e.upper_vertex].kind == VertexKind::open_top;
    if (lo_min) {
      ec.TA_lo = 0.0;
      ec.T_lo = quadratic_extrapolate(e.h_lo, ec.h[0], ec.T[0], ec.h[1], ec.T[1], ec.h[2], ec.T[2]);
    } else {
      ec.TA_lo = quadratic_extrapolate(e.h_lo, ec.h[0], ec.TA[0], ec.h[1], ec.TA[1], ec.h[2], ec.TA[2]);
      ec.T_lo = inf;
    }
    if (hi_top) {
      ec.TA_hi = ec.TA[n - 1];
      ec.T_hi = ec.T[n - 1];
    } else {
      ec.TA_hi = quadratic_extrapolate(e.h_hi, ec.h[n - 1], ec.TA[n - 1], ec.h[n - 2], ec.TA[n - 2], ec.h[n - 3],
                                       ec.TA[n - 3]);
      ec.T_hi = inf;
    }
    ec.A_lo = std::isfinite(ec.T_lo) ? ec.TA_lo / ec.T_lo : 0.0;
    ec.A_hi = std::isfinite(ec.T_hi) ? ec.TA_hi / ec.T_hi : 0.0;
  }

  for (const auto& v : graph.vertices) {
    if (v.kind != VertexKind::interior_saddle) continue;
    KirchhoffResidual r;
    r.vertex = v.id;
    double biggest = 0.0;
    for (const auto& e : graph.edges) {
      for (const auto& [vid, sign] : e.incidence) {
        if (vid != v.id) continue;
        const double ta = sign > 0 ? table.edges[e.k].TA_hi : table.edges[e.k].TA_lo;
        r.residual += sign * ta;
        biggest = std::max(biggest, std::abs(ta));
      }
    }
    r.relative = biggest > 0.0 ? std::abs(r.residual) / biggest : 0.0;
    table.kirchhoff.push_back(r);
  }
  return table;
}

namespace {

const EdgeCoefficients& edge_of(const EdgeCoefficientTable& t, int k) {
  require(k >= 0 && k < static_cast<int>(t.edges.size()), "edge index out of range");
  return t.edges[k];
}

}  // namespace

double EdgeCoefficientTable::TA_at(int k, double h) const {
  const EdgeCoefficients& ec = edge_of(*this, k);
  const auto& x = ec.h;
  if (h <= x.front()) {
    const double t = (h - ec.h_lo) / (x.front() - ec.h_lo);
    return ec.TA_lo + std::clamp(t, 0.0, 1.0) * (ec.TA.front() - ec.TA_lo);
  }
  if (h >= x.back()) {
    if (ec.h_hi <= x.back()) return ec.TA.back();
    const double t = (h - x.back()) / (ec.h_hi - x.back());
    return ec.TA.back() + std::clamp(t, 0.0, 1.0) * (ec.TA_hi - ec.TA.back());
  }
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), h) - x.begin()) - 1;
  const double w = x[i + 1] - x[i];
  const double s = (h - x[i]) / w;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
  return h00 * ec.TA[i] + h10 * w * ec.TB[i] + h01 * ec.TA[i + 1] + h11 * w * ec.TB[i + 1];
}

double EdgeCoefficientTable::T_at(int k, double h) const {
  const EdgeCoefficients& ec = edge_of(*this, k);
  const auto& x = ec.h;
  if (h <= x.front()) return ec.T.front();
  if (h >= x.back()) return ec.T.back();
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), h) - x.begin()) - 1;
  const double s = (h - x[i]) / (x[i + 1] - x[i]);
  return (1 - s) * ec.T[i] + s * ec.T[i + 1];
}

}  // namespace hamcg
