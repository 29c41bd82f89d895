#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gclab {

/// Trajectory norm exceeded the blow-up threshold; carries the simulation
/// time at which the state became unusable.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(double time, const std::string& what)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// No feasible point in a certificate search; names the binding constraint.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& constraint)
      : std::runtime_error("infeasible: " + constraint), constraint_(constraint) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

/// Kahan compensated accumulator for long low-increment sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }
  void reset() { s_ = 0.0; c_ = 0.0; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

/// Ordinary least squares line through (x_i, y_i).
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("linear_fit: need at least two matching points");
  const double n = static_cast<double>(xs.size());
  KahanSum sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx.add(xs[i]);
    sy.add(ys[i]);
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  KahanSum sxx, sxy, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  if (sxx.value() == 0.0)
    throw std::invalid_argument("linear_fit: degenerate abscissa");
  LinearFit fit;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  if (syy.value() > 0.0) {
    const double ss_res = syy.value() - fit.slope * sxy.value();
    fit.r_squared = 1.0 - ss_res / syy.value();
  }
  return fit;
}

struct MeanStdErr {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

inline MeanStdErr mean_std_error(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std_error: empty sample");
  MeanStdErr out;
  out.n = xs.size();
  KahanSum s;
  for (double x : xs) s.add(x);
  out.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    KahanSum ss;
    for (double x : xs) {
      const double d = x - out.mean;
      ss.add(d * d);
    }
    const double var = ss.value() / static_cast<double>(xs.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(xs.size()));
  }
  return out;
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Total variation between N(m1, s^2) and N(m2, s^2).
inline double gaussian_tv(double m1, double m2, double sigma) {
  return 2.0 * normal_cdf(std::abs(m1 - m2) / (2.0 * sigma)) - 1.0;
}

inline bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace gclab
