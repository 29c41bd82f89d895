#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

/// Capped symmetrized premetric min(N theta(x,y), N theta(y,x), 1).
inline double d_N_eval(double theta_xy, double theta_yx, double N) {
  if (theta_xy < 0.0 || theta_yx < 0.0) throw std::invalid_argument("d_N: negative premetric value");
  if (!(N > 0.0)) throw std::invalid_argument("d_N: N must be > 0");
  return std::min({N * theta_xy, N * theta_yx, 1.0});
}

/// theta_alpha(x,y) = q(x,y)^alpha exp(alpha upsilon U(x)).
inline double theta_alpha_eval(double q_xy, double U_x, double alpha, double upsilon) {
  if (q_xy < 0.0) throw std::invalid_argument("theta_alpha: q must be >= 0");
  if (U_x < 0.0) throw std::invalid_argument("theta_alpha: U must be >= 0");
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("theta_alpha: alpha must be in (0,1]");
  if (upsilon < 0.0) throw std::invalid_argument("theta_alpha: upsilon must be >= 0");
  if (q_xy == 0.0) return 0.0;
  return std::pow(q_xy, alpha) * std::exp(alpha * upsilon * U_x);
}

/// Built-in premetric families: the squared-norm premetric q(x,y) and the
/// exponentially weighted theta(x,y) = exp(Q U(x)) q(x,y)^alpha. The weighted
/// family may be asymmetric; both evaluate to 0 exactly on the diagonal.
struct PremetricSpec {
  enum class Kind { SquaredNorm, ExpWeighted };
  Kind kind = Kind::SquaredNorm;
  double alpha = 1.0;  // in (0,1]
  double Q = 0.0;      // >= 0
  double N = 1.0;      // cap scale, > 0

  void validate() const {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("premetric: alpha must be in (0,1]");
    if (Q < 0.0) throw std::invalid_argument("premetric: Q must be >= 0");
    if (!(N > 0.0)) throw std::invalid_argument("premetric: N must be > 0");
  }

  double eval(double q_xy, double U_x) const {
    if (q_xy < 0.0) throw std::invalid_argument("premetric: q must be >= 0");
    if (kind == Kind::SquaredNorm) return q_xy;
    if (q_xy == 0.0) return 0.0;
    return std::exp(Q * U_x) * std::pow(q_xy, alpha);
  }
};

struct BudgetResult {
  bool accepted = false;
  double value = 0.0;
  std::string reason;
};

/// Contraction factor r(t) + L(t)/N when r(t) <= 1/3 and N >= 2 L(t);
/// the accepted factor never exceeds 5/6.
inline BudgetResult contraction_budget(double r_t, double L_t, double N) {
  if (r_t < 0.0 || L_t < 0.0) throw std::invalid_argument("contraction_budget: negative input");
  if (!(N > 0.0)) throw std::invalid_argument("contraction_budget: N must be > 0");
  if (r_t > 1.0 / 3.0) return {false, 0.0, "r(t) > 1/3"};
  if (N < 2.0 * L_t) return {false, 0.0, "N < 2 L(t)"};
  return {true, r_t + L_t / N, ""};
}

/// Smallness budget from the independent-coupling argument: 1 - delta^2/2,
/// where delta is the hitting probability of the small-diameter set and
/// eps is tied to the cap scale by eps = 1/(2N).
inline double smallness_budget_b1(double delta_hit, double N, double eps) {
  if (!(delta_hit > 0.0) || delta_hit > 1.0)
    throw std::invalid_argument("smallness_b1: delta_hit must be in (0,1]");
  if (!(N > 0.0)) throw std::invalid_argument("smallness_b1: N must be > 0");
  if (std::abs(2.0 * N * eps - 1.0) > 1e-9)
    throw std::invalid_argument("smallness_b1: eps must equal 1/(2N)");
  return 1.0 - 0.5 * delta_hit * delta_hit;
}

/// Smallness budget from the generalized-coupling argument: 1 - eps/2 when
/// N R(t) <= eps/2, otherwise rejected.
inline BudgetResult smallness_budget_b2(double N, double R_t, double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw std::invalid_argument("smallness_b2: eps must be in (0,1)");
  if (!(N > 0.0) || R_t < 0.0) throw std::invalid_argument("smallness_b2: bad N or R(t)");
  if (N * R_t > eps / 2.0) return {false, 0.0, "N R(t) > eps/2"};
  return {true, 1.0 - eps / 2.0, ""};
}

/// Half-L1 distance between normalized histograms of two 1-D projected
/// samples; a lower-bound estimator of the total variation of the
/// projections in the large-sample limit.
inline double tv_histogram(std::span<const double> a, std::span<const double> b, int bins) {
  if (bins < 2) throw std::invalid_argument("tv_histogram: bins must be >= 2");
  if (a.empty() || b.empty()) throw std::invalid_argument("tv_histogram: empty samples");
  double lo = a[0], hi = a[0];
  for (double x : a) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (double x : b) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(hi > lo)) return 0.0;  // all mass in one point
  const double width = (hi - lo) / bins;
  std::vector<double> ha(static_cast<std::size_t>(bins), 0.0), hb(ha);
  auto bin_of = [&](double x) {
    int i = static_cast<int>((x - lo) / width);
    return std::clamp(i, 0, bins - 1);
  };
  const double wa = 1.0 / static_cast<double>(a.size());
  const double wb = 1.0 / static_cast<double>(b.size());
  for (double x : a) ha[static_cast<std::size_t>(bin_of(x))] += wa;
  for (double x : b) hb[static_cast<std::size_t>(bin_of(x))] += wb;
  KahanSum l1;
  for (int i = 0; i < bins; ++i)
    l1.add(std::abs(ha[static_cast<std::size_t>(i)] - hb[static_cast<std::size_t>(i)]));
  return 0.5 * l1.value();
}

template <class State, class Proj>
double tv_histogram(std::span<const State> a, std::span<const State> b, Proj&& proj, int bins) {
  std::vector<double> pa(a.size()), pb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] = proj(a[i]);
  for (std::size_t i = 0; i < b.size(); ++i) pb[i] = proj(b[i]);
  return tv_histogram(std::span<const double>(pa), std::span<const double>(pb), bins);
}

}  // namespace gclab
