#include "hamcg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hamcg/errors.hpp"

namespace hamcg {

Polynomial::Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {
  if (c_.empty()) c_.push_back(0.0);
  while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
}

double Polynomial::value(double q) const noexcept {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * q + *it;
  return acc;
}

double Polynomial::derivative(double q) const noexcept {
  double acc = 0.0;
  for (std::size_t k = c_.size(); k-- > 1;) acc = acc * q + static_cast<double>(k) * c_[k];
  return acc;
}

double Polynomial::second_derivative(double q) const noexcept {
  double acc = 0.0;
  for (std::size_t k = c_.size(); k-- > 2;) acc = acc * q + static_cast<double>(k * (k - 1)) * c_[k];
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial({0.0});
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::antiderivative() const {
  std::vector<double> a(c_.size() + 1, 0.0);
  for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / static_cast<double>(k + 1);
  return Polynomial(std::move(a));
}

Polynomial Polynomial::from_derivative_roots(std::span<const double> roots, double scale) {
  std::vector<double> d{scale};
  for (double r : roots) {
    std::vector<double> next(d.size() + 1, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      next[k + 1] += d[k];
      next[k] -= r * d[k];
    }
    d = std::move(next);
  }
  Polynomial v = Polynomial(std::move(d)).antiderivative();
  double lowest = std::numeric_limits<double>::infinity();
  for (double r : roots) {
    if (v.second_derivative(r) > 0.0) lowest = std::min(lowest, v.value(r));
  }
  if (std::isfinite(lowest)) {
    std::vector<double> c = v.coefficients();
    c[0] -= lowest;
    v = Polynomial(std::move(c));
  }
  return v;
}

double Interaction::value(double x) const noexcept {
  switch (kind) {
    case InteractionKind::quadratic: return 0.5 * strength * x * x;
    case InteractionKind::gaussian: return strength * std::exp(-x * x / (2.0 * width * width));
  }
  return 0.0;
}

double Interaction::gradient(double x) const noexcept {
  switch (kind) {
    case InteractionKind::quadratic: return strength * x;
    case InteractionKind::gaussian: {
      const double w2 = width * width;
      return -strength * x / w2 * std::exp(-x * x / (2.0 * w2));
    }
  }
  return 0.0;
}

double Interaction::hessian(double x) const noexcept {
  switch (kind) {
    case InteractionKind::quadratic: return strength;
    case InteractionKind::gaussian: {
      const double w2 = width * width;
      return strength * (x * x / w2 - 1.0) / w2 * std::exp(-x * x / (2.0 * w2));
    }
  }
  return 0.0;
}

void HamiltonianModel::validate() const {
  require(mass > 0.0 && std::isfinite(mass), "mass must be positive");
  require(dim >= 1, "dimension must be >= 1");
  if (interaction && interaction->kind == InteractionKind::gaussian) {
    require(interaction->width > 0.0, "gaussian interaction width must be positive");
  }
}

double HamiltonianModel::H(std::span<const double> q, std::span<const double> p) const {
  require(q.size() == p.size(), "position and momentum dimension mismatch");
  double kinetic = 0.0, pot = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    kinetic += p[i] * p[i];
    pot += potential.value(q[i]);
  }
  return 0.5 * kinetic / mass + pot;
}

double HamiltonianModel::grad_norm(double q, double p) const noexcept {
  return std::hypot(potential.derivative(q), p / mass);
}

void BoxDomain::validate() const {
  require(q_lo < q_hi && p_lo < p_hi, "box lower corner must be below upper corner");
  require(nq >= 8 && np >= 8, "box resolution must be at least 8 per axis");
}

namespace {

double take(PresetParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  double v = it->second;
  params.erase(it);
  return v;
}

}  // namespace

std::vector<std::string> preset_names() { return {"harmonic", "double_well", "quartic", "triple_well"}; }

HamiltonianModel make_preset(const std::string& name, const PresetParams& params_in) {
  PresetParams params = params_in;
  HamiltonianModel model;
  model.name = name;
  model.mass = take(params, "mass", 1.0);
  model.dim = static_cast<int>(take(params, "dim", 1.0));

  if (name == "harmonic") {
    const double k = take(params, "stiffness", 1.0);
    model.potential = Polynomial({0.0, 0.0, 0.5 * k});
  } else if (name == "double_well") {
    const double a = take(params, "depth", 1.0);
    const double b = take(params, "location", 1.0);
    const double b2 = b * b;
    model.potential = Polynomial({0.25 * a * b2 * b2, 0.0, -0.5 * a * b2, 0.0, 0.25 * a});
  } else if (name == "quartic") {
    const double c = take(params, "c", 1.0);
    model.potential = Polynomial({0.0, 0.0, 0.0, 0.0, 0.25 * c});
  } else if (name == "triple_well") {
    // minima at -1.8, 0, 2.4 (values ~0.43, 0.47, 0); saddles at -1, 1.3 (~0.74, ~1.10)
    const double s = take(params, "scale", 0.25);
    const double roots[] = {-1.8, -1.0, 0.0, 1.3, 2.4};
    model.potential = Polynomial::from_derivative_roots(roots, s);
  } else {
    fail(ErrorKind::InvalidArgument, "unknown potential preset '" + name + "'");
  }
  if (!params.empty()) {
    fail(ErrorKind::InvalidArgument, "unknown parameter '" + params.begin()->first + "' for preset " + name);
  }
  model.validate();
  return model;
}

std::vector<CriticalPoint> find_critical_points(const HamiltonianModel& model, const BoxDomain& box,
                                                const CriticalOptions& options) {
  require(model.dim == 1, "critical point search requires d = 1");
  require(options.scan_points >= 3, "scan_points must be >= 3");
  box.validate();

  const int n = options.scan_points;
  const double h = (box.q_hi - box.q_lo) / (n - 1);
  auto node = [&](int i) { return box.q_lo + i * h; };

  std::vector<double> roots;
  double prev_q = node(0);
  double prev_d = model.dV(prev_q);
  if (prev_d == 0.0) roots.push_back(prev_q);
  for (int i = 1; i < n; ++i) {
    const double q = node(i);
    const double d = model.dV(q);
    if (d == 0.0) {
      roots.push_back(q);
    } else if (prev_d != 0.0 && (prev_d < 0.0) != (d < 0.0)) {
      double a = prev_q, b = q, fa = prev_d;
      while (b - a > options.bisection_tolerance) {
        const double mid = 0.5 * (a + b);
        const double fm = model.dV(mid);
        if (fm == 0.0) { a = b = mid; break; }
        if ((fm < 0.0) == (fa < 0.0)) { a = mid; fa = fm; } else { b = mid; }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_q = q;
    prev_d = d;
  }

  std::vector<CriticalPoint> out;
  const double probe = std::max(h, 1e-6);
  for (double q : roots) {
    CriticalPoint cp;
    cp.q = q;
    cp.value = model.V(q);
    cp.curvature = model.d2V(q);
    cp.degenerate = std::abs(cp.curvature) < options.degeneracy_tolerance;
    if (!cp.degenerate) {
      cp.kind = cp.curvature > 0.0 ? CriticalKind::minimum : CriticalKind::saddle;
    } else {
      const double left = model.dV(q - probe), right = model.dV(q + probe);
      if (left < 0.0 && right > 0.0) cp.kind = CriticalKind::minimum;
      else if (left > 0.0 && right < 0.0) cp.kind = CriticalKind::saddle;
      else continue;  // inflection: not an extremum of V, no level-set topology change
    }
    out.push_back(cp);
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].kind != CriticalKind::saddle) continue;
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      if (out[j].kind != CriticalKind::saddle) continue;
      const double scale = std::max({1.0, std::abs(out[i].value), std::abs(out[j].value)});
      if (std::abs(out[i].value - out[j].value) <= options.saddle_value_tolerance * scale) {
        fail(ErrorKind::SaddleValueCollision, "saddles at q=" + std::to_string(out[i].q) + " and q=" +
                                                  std::to_string(out[j].q) + " share the value " +
                                                  std::to_string(out[i].value));
      }
    }
  }
  return out;
}

GrowthReport check_growth_conditions(const HamiltonianModel& model, const BoxDomain& box, int samples) {
  require(samples >= 2, "need at least two samples");
  GrowthReport r;
  r.min_potential = std::numeric_limits<double>::infinity();
  const double h = (box.q_hi - box.q_lo) / (samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double q = box.q_lo + i * h;
    const double v = model.V(q);
    const double g = model.dV(q);
    r.min_potential = std::min(r.min_potential, v);
    if (1.0 + v > 0.0) r.growth_constant = std::max(r.growth_constant, g * g / (1.0 + v));
    else r.growth_constant = std::numeric_limits<double>::infinity();
    if (model.interaction) {
      const double x = q - 0.5 * (box.q_lo + box.q_hi);
      r.interaction_asymmetry =
          std::max(r.interaction_asymmetry, std::abs(model.interaction->value(x) - model.interaction->value(-x)));
    }
  }
  r.potential_nonnegative = r.min_potential >= 0.0;
  return r;
}

double conv_force(const HamiltonianModel& model, std::span<const double> nodes, std::span<const double> weights,
                  double q) {
  if (!model.interaction) fail(ErrorKind::MissingInteraction, "model has no interaction potential");
  require(nodes.size() == weights.size(), "nodes and weights differ in length");
  double mass = 0.0, force = 0.0;
  if (model.interaction->is_quadratic()) {
    double mean = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      mass += weights[j];
      mean += weights[j] * nodes[j];
    }
    force = model.interaction->strength * (mass * q - mean);
  } else {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      mass += weights[j];
      force += weights[j] * model.interaction->gradient(q - nodes[j]);
    }
  }
  require(std::abs(mass - 1.0) <= 1e-8, "convolution measure must have unit mass");
  return force;
}

}  // namespace hamcg
