#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hamcg {

/// Polynomial in one variable, c[0] + c[1] q + c[2] q^2 + ...
/// Potentials are stored this way so value, gradient and Hessian are exact.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);

  /// Polynomial whose derivative is `scale * prod (q - r_i)`, shifted so that
  /// its smallest local minimum over the roots has value zero.
  static Polynomial from_derivative_roots(std::span<const double> roots, double scale);

  double value(double q) const noexcept;
  double derivative(double q) const noexcept;
  double second_derivative(double q) const noexcept;

  Polynomial derivative() const;
  Polynomial antiderivative() const;
  int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coefficients() const noexcept { return c_; }

 private:
  std::vector<double> c_{0.0};
};

enum class InteractionKind { quadratic, gaussian };

/// Symmetric pair potential psi(x), applied coordinate-wise when d > 1.
///   quadratic: psi(x) = strength * x^2 / 2
///   gaussian:  psi(x) = strength * exp(-x^2 / (2 width^2))
struct Interaction {
  InteractionKind kind = InteractionKind::quadratic;
  double strength = 1.0;
  double width = 1.0;

  double value(double x) const noexcept;
  double gradient(double x) const noexcept;
  double hessian(double x) const noexcept;
  bool is_quadratic() const noexcept { return kind == InteractionKind::quadratic; }
};

/// H(q,p) = |p|^2 / 2m + V(q), with optional mean-field interaction psi.
/// For d > 1 the potential is coordinate-separable: V(q) = sum_i P(q_i).
struct HamiltonianModel {
  std::string name = "custom";
  double mass = 1.0;
  int dim = 1;
  Polynomial potential;
  std::optional<Interaction> interaction;

  void validate() const;

  double V(double q) const noexcept { return potential.value(q); }
  double dV(double q) const noexcept { return potential.derivative(q); }
  double d2V(double q) const noexcept { return potential.second_derivative(q); }

  double H(double q, double p) const noexcept { return 0.5 * p * p / mass + potential.value(q); }
  double H(std::span<const double> q, std::span<const double> p) const;
  double dH_dq(double q) const noexcept { return potential.derivative(q); }
  double dH_dp(double p) const noexcept { return p / mass; }
  double grad_norm(double q, double p) const noexcept;
  /// Laplacian in the momentum variables, d/m for every (q,p).
  double laplacian_p_H() const noexcept { return static_cast<double>(dim) / mass; }
};

/// Axis-aligned box in (q,p) with a cell grid; every phase-space grid in the
/// toolkit is a BoxDomain.
struct BoxDomain {
  double q_lo = -1.0, q_hi = 1.0;
  double p_lo = -1.0, p_hi = 1.0;
  int nq = 64, np = 64;

  void validate() const;
  double dq() const noexcept { return (q_hi - q_lo) / nq; }
  double dp() const noexcept { return (p_hi - p_lo) / np; }
  double q_center(int i) const noexcept { return q_lo + (i + 0.5) * dq(); }
  double p_center(int j) const noexcept { return p_lo + (j + 0.5) * dp(); }
  double cell_volume() const noexcept { return dq() * dp(); }
  std::size_t cell_count() const noexcept { return static_cast<std::size_t>(nq) * np; }
  /// Row-major cell index: rows run over p, columns over q.
  std::size_t index(int iq, int jp) const noexcept { return static_cast<std::size_t>(jp) * nq + iq; }
  bool contains(double q, double p) const noexcept {
    return q >= q_lo && q <= q_hi && p >= p_lo && p <= p_hi;
  }
};

using PresetParams = std::map<std::string, double>;

/// Named presets: "harmonic" (stiffness k: V = k q^2/2), "double_well"
/// (depth a, location b: V = a (q^2-b^2)^2/4), "quartic" (c: V = c q^4/4),
/// "triple_well" (scale s: asymmetric three-well sextic). Unknown parameter
/// names are rejected. Common keys: "mass", "dim".
HamiltonianModel make_preset(const std::string& name, const PresetParams& params = {});
std::vector<std::string> preset_names();

enum class CriticalKind { minimum, saddle };

struct CriticalPoint {
  double q = 0.0;
  double p = 0.0;
  double value = 0.0;
  CriticalKind kind = CriticalKind::minimum;
  double curvature = 0.0;  // V''(q)
  bool degenerate = false;
};

struct CriticalOptions {
  int scan_points = 8193;
  double bisection_tolerance = 1e-10;
  double degeneracy_tolerance = 1e-8;
  /// Relative tolerance under which two saddle values count as equal.
  double saddle_value_tolerance = 1e-8;
};

/// Critical points of H inside `box` (d = 1): p = 0 and V'(q) = 0. Roots are
/// bracketed on a uniform scan of the box's q-range and bisected. Throws
/// SaddleValueCollision when two saddle values coincide; degenerate points are
/// returned flagged, classified by the sign change of V'.
std::vector<CriticalPoint> find_critical_points(const HamiltonianModel& model, const BoxDomain& box,
                                                const CriticalOptions& options = {});

struct GrowthReport {
  double growth_constant = 0.0;   // max |V'|^2 / (1 + V) over the samples
  double min_potential = 0.0;
  bool potential_nonnegative = true;
  double interaction_asymmetry = 0.0;  // max |psi(x) - psi(-x)|
};

/// Sampled check of the structural growth and symmetry conditions on V and psi.
/// Reported, never enforced: the conditions are asymptotic.
GrowthReport check_growth_conditions(const HamiltonianModel& model, const BoxDomain& box, int samples = 2049);

/// Mean-field force (grad psi * rho)(q) for a weighted point set in d = 1:
/// sum_j w_j psi'(q - x_j). Weights must sum to one within 1e-8. Throws
/// MissingInteraction if the model has no psi.
double conv_force(const HamiltonianModel& model, std::span<const double> nodes,
                  std::span<const double> weights, double q);

}  // namespace hamcg
