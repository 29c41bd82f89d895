#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gclab {

/// A TV-type bound clamped to [0,1]; `clamped` flags a vacuous value so
/// callers can tell a real bound from a saturated one.
struct BoundValue {
  double value = 0.0;
  bool clamped = false;
  operator double() const { return value; }
};

/// d_TV <= sqrt(KL/2).
inline BoundValue pinsker_tv(double kl) {
  if (kl < 0.0) throw std::invalid_argument("pinsker_tv: KL must be >= 0");
  const double v = std::sqrt(0.5 * kl);
  return {std::min(v, 1.0), v > 1.0};
}

/// d_TV <= 1 - exp(-KL)/2.
inline BoundValue tv_exp_bound(double kl) {
  if (kl < 0.0) throw std::invalid_argument("tv_exp_bound: KL must be >= 0");
  return {1.0 - 0.5 * std::exp(-kl), false};
}

/// nu(A) >= mu(A)/N - (KL + log 2)/(N log N), clamped at 0.
inline double measure_lower_bound(double mu_A, double kl, double N) {
  if (mu_A < 0.0 || mu_A > 1.0) throw std::invalid_argument("measure_lower_bound: mu(A) in [0,1]");
  if (kl < 0.0) throw std::invalid_argument("measure_lower_bound: KL must be >= 0");
  if (!(N > 1.0)) throw std::invalid_argument("measure_lower_bound: N must be > 1");
  const double v = mu_A / N - (kl + std::log(2.0)) / (N * std::log(N));
  return std::max(v, 0.0);
}

/// KL(controlled path law || driving-noise law) <= expected cost / 2.
inline double kl_girsanov(double expected_cost) {
  if (expected_cost < 0.0) throw std::invalid_argument("kl_girsanov: cost must be >= 0");
  return 0.5 * expected_cost;
}

/// d_TV <= 2^{(1-delta)/(1+delta)} M_delta^{1/(1+delta)}.
inline BoundValue tv_delta_upper(double m_delta, double delta) {
  if (m_delta < 0.0) throw std::invalid_argument("tv_delta_upper: M_delta must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("tv_delta_upper: delta must be in (0,1)");
  if (m_delta == 0.0) return {0.0, false};
  const double v =
      std::pow(2.0, (1.0 - delta) / (1.0 + delta)) * std::pow(m_delta, 1.0 / (1.0 + delta));
  return {std::min(v, 1.0), v > 1.0};
}

/// d_TV <= 1 - (1/6) min(1/8, exp(-(2^{2-delta} M_delta)^{1/delta})),
/// always strictly below 1.
inline double tv_delta_floor(double m_delta, double delta) {
  if (m_delta < 0.0) throw std::invalid_argument("tv_delta_floor: M_delta must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("tv_delta_floor: delta must be in (0,1)");
  const double inner = std::pow(std::pow(2.0, 2.0 - delta) * m_delta, 1.0 / delta);
  const double v = 1.0 - (1.0 / 6.0) * std::min(1.0 / 8.0, std::exp(-inner));
  // strictly below 1 even when the exponential underflows
  return std::min(v, std::nextafter(1.0, 0.0));
}

/// mu_W(A) >= (1/N)(mu_xi(A) - 2^{1-delta} M_delta / (log N)^delta - log2/log N),
/// clamped at 0.
inline double wiener_lower_bound(double mu_xi_A, double m_delta, double delta, double N) {
  if (mu_xi_A < 0.0 || mu_xi_A > 1.0)
    throw std::invalid_argument("wiener_lower_bound: mu_xi(A) in [0,1]");
  if (m_delta < 0.0) throw std::invalid_argument("wiener_lower_bound: M_delta must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("wiener_lower_bound: delta must be in (0,1)");
  if (!(N > 1.0)) throw std::invalid_argument("wiener_lower_bound: N must be > 1");
  const double lg = std::log(N);
  const double v =
      (mu_xi_A - std::pow(2.0, 1.0 - delta) * m_delta / std::pow(lg, delta) - std::log(2.0) / lg) /
      N;
  return std::max(v, 0.0);
}

/// Concave rate function family for the subexponential calculus:
/// linear phi(u) = gamma u, or power phi(u) = u^p with p in (0,1).
struct PhiSpec {
  enum class Kind { Linear, Power };
  Kind kind = Kind::Linear;
  double gamma = 1.0;  // linear slope, > 0
  double p = 0.5;      // power exponent, in (0,1)

  void validate() const {
    if (kind == Kind::Linear && !(gamma > 0.0))
      throw std::invalid_argument("phi: linear slope must be > 0");
    if (kind == Kind::Power && (!(p > 0.0) || !(p < 1.0)))
      throw std::invalid_argument("phi: power exponent must be in (0,1)");
  }

  double value(double u) const {
    return kind == Kind::Linear ? gamma * u : std::pow(u, p);
  }

  static PhiSpec linear(double gamma) { return {Kind::Linear, gamma, 0.5}; }
  static PhiSpec power(double p) { return {Kind::Power, 1.0, p}; }
};

/// H_phi(x) = int_1^x du/phi(u), closed form per family.
inline double h_phi(double x, const PhiSpec& phi) {
  phi.validate();
  if (!(x >= 1.0)) throw std::invalid_argument("h_phi: x must be >= 1");
  if (phi.kind == PhiSpec::Kind::Linear) return std::log(x) / phi.gamma;
  return (std::pow(x, 1.0 - phi.p) - 1.0) / (1.0 - phi.p);
}

/// Inverse of H_phi on [0, infinity).
inline double h_phi_inverse(double t, const PhiSpec& phi) {
  phi.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("h_phi_inverse: t must be >= 0");
  if (phi.kind == PhiSpec::Kind::Linear) return std::exp(phi.gamma * t);
  return std::pow(1.0 + (1.0 - phi.p) * t, 1.0 / (1.0 - phi.p));
}

/// Right-hand side of the convergence-rate bound
/// C1 (1 + phi(V(x))^delta) / phi(H_phi^{-1}(C2 t))^delta.
inline double rate_curve(double V_x, double delta, double C1, double C2, double t,
                         const PhiSpec& phi) {
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("rate_curve: delta in (0,1)");
  if (!(C1 > 0.0) || !(C2 > 0.0)) throw std::invalid_argument("rate_curve: constants must be > 0");
  if (V_x < 0.0 || t < 0.0) throw std::invalid_argument("rate_curve: V and t must be >= 0");
  const double numer = C1 * (1.0 + std::pow(phi.value(V_x), delta));
  const double denom = std::pow(phi.value(h_phi_inverse(C2 * t, phi)), delta);
  return numer / denom;
}

}  // namespace gclab
