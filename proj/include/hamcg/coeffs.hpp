#pragma once

#include <array>
#include <vector>

#include "hamcg/model.hpp"
#include "hamcg/reeb.hpp"

namespace hamcg {

struct LevelCurve {
  int k = -1;
  double h = 0.0;
  std::vector<std::array<double, 2>> points;  // (q, p); closed curves do not repeat the first point
  bool closed = false;
};

/// H sampled on the nodes of a regular grid over a box; marching squares
/// runs against it for any number of levels.
class ContourGrid {
 public:
  ContourGrid(const HamiltonianModel& model, const BoxDomain& box, int resolution);

  /// All connected components of {H = h} on the grid, crossings refined by
  /// bisection on H along cell edges.
  std::vector<LevelCurve> extract(double h, double tolerance = 1e-10) const;

  const HamiltonianModel& model() const noexcept { return model_; }
  const BoxDomain& box() const noexcept { return box_; }
  int resolution() const noexcept { return n_; }

 private:
  HamiltonianModel model_;
  BoxDomain box_;
  int n_;
  std::vector<double> node_h_;
};

struct CurveOptions {
  int resolution = 1024;
  double bisection_tolerance = 1e-10;
  /// Saddle exclusion half-width, relative to max(1, |saddle value|).
  double saddle_exclusion = 1e-3;
};

/// Component of {H = h} belonging to edge k. Throws TooCloseToSaddle inside
/// the exclusion zone and ComponentNotFound if no loop classifies to k.
LevelCurve extract_level_curve(const ReebGraph& graph, double h, int k, const CurveOptions& options = {});
LevelCurve extract_level_curve(const ReebGraph& graph, const ContourGrid& grid, double h, int k,
                               const CurveOptions& options = {});

/// Graph-free variant: every component of {H = h} on the box grid.
std::vector<LevelCurve> extract_level_curves(const HamiltonianModel& model, const BoxDomain& box, double h,
                                             int resolution = 1024);

struct CurveIntegrals {
  double T = 0.0;   // closed integral of 1/|grad H|
  double TA = 0.0;  // closed integral of (dH/dp)^2/|grad H|
  double TB = 0.0;  // closed integral of Laplacian_p H/|grad H|
};

/// Composite midpoint rule over the polyline. Throws VanishingGradient.
CurveIntegrals integrate_curve(const HamiltonianModel& model, const LevelCurve& curve);
double compute_T(const HamiltonianModel& model, const LevelCurve& curve);
double compute_TA(const HamiltonianModel& model, const LevelCurve& curve);
double compute_TB(const HamiltonianModel& model, const LevelCurve& curve);

/// TA by the divergence theorem: Laplacian_p H integrated over the part of
/// {H <= h} enclosed by edge k's component, on the graph's label grid with
/// `sub` x `sub` subsamples per cell.
double area_TA(const ReebGraph& graph, int k, double h, int sub = 4);

struct EdgeCoefficients {
  int k = -1;
  double h_lo = 0.0, h_hi = 0.0;
  std::vector<double> h, T, A, B, TA, TB;
  /// Vertex limits at h_lo and h_hi. T is +inf at saddle ends; TA is 0 at
  /// minimum ends and extrapolated (3-point) at saddle ends.
  double TA_lo = 0.0, TA_hi = 0.0;
  double T_lo = 0.0, T_hi = 0.0;
  double A_lo = 0.0, A_hi = 0.0;
};

struct KirchhoffResidual {
  int vertex = -1;
  double residual = 0.0;  // sum over incident edges of sign * TA(O, k)
  double relative = 0.0;  // residual / largest term
};

struct EdgeCoefficientTable {
  double mass = 1.0;
  double delta_sad = 0.0;
  double delta_min = 0.0;
  std::vector<EdgeCoefficients> edges;
  std::vector<KirchhoffResidual> kirchhoff;

  /// Cubic Hermite interpolant of TA (slopes TB = (TA)'), linear on the end
  /// intervals, with the vertex limits at h_lo and h_hi.
  double TA_at(int k, double h) const;
  /// Linear interpolation of T inside the sampled range, clamped outside.
  double T_at(int k, double h) const;
};

struct TableOptions {
  int samples_per_edge = 64;
  CurveOptions curve;
  /// Closest approach to a minimum end, relative to max(1, |h|).
  double min_offset = 1e-3;
};

EdgeCoefficientTable tabulate_coefficients(const ReebGraph& graph, const TableOptions& options = {});

/// h-samples for one edge: log-spaced away from minimum and saddle ends,
/// uniform toward the cap.
std::vector<double> edge_samples(const ReebGraph& graph, int k, int count, double delta_min, double delta_sad);

/// Derivative of tabulated values by the nonuniform three-point formula at
/// interior samples (size n - 2, aligned with h[1..n-2]).
std::vector<double> centered_derivative(const std::vector<double>& h, const std::vector<double>& y);

}  // namespace hamcg
