#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

/// Constants of the dissipativity/energy hypotheses:
/// q(X_t,Y_t) <= q(x,y) exp(-zeta t + kappa int S),
/// U(X_t) + mu int S <= U(x) + b t + M_t, d<M> <= b1 S dt + b2 dt.
struct HConstants {
  double zeta = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
  double b = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;

  void validate() const {
    if (!(zeta > 0.0)) throw std::invalid_argument("h-constants: zeta must be > 0");
    if (!(mu > 0.0)) throw std::invalid_argument("h-constants: mu must be > 0");
    if (kappa < 0.0 || b < 0.0 || b1 < 0.0 || b2 < 0.0)
      throw std::invalid_argument("h-constants: kappa, b, b1, b2 must be >= 0");
  }
};

/// Feasibility gate zeta > kappa b / mu.
inline bool check_condtheta(const HConstants& h) {
  h.validate();
  return h.zeta > h.kappa * h.b / h.mu;
}

/// Derived exponential-rate certificate for a choice of the auxiliary gamma:
///   upsilon = kappa/(mu - gamma b1),
///   chi     = zeta - kappa (b + gamma b2)/(mu - gamma b1) > 0,
///   alpha0  = min(gamma/upsilon, 1/2),  lambda = alpha0 chi,  Q = alpha0 upsilon.
struct Certificate {
  double gamma = 0.0;
  double upsilon = 0.0;
  double chi = 0.0;
  double alpha0 = 0.0;
  double lambda = 0.0;
  double Q = 0.0;
};

inline Certificate certificate_at(const HConstants& h, double gamma) {
  h.validate();
  if (!(gamma > 0.0)) throw std::invalid_argument("certificate: gamma must be > 0");
  if (h.b1 > 0.0 && !(gamma < h.mu / h.b1))
    throw std::invalid_argument("certificate: gamma must be < mu/b1");
  Certificate c;
  c.gamma = gamma;
  const double denom = h.mu - gamma * h.b1;
  c.upsilon = h.kappa / denom;
  c.chi = h.zeta - h.kappa * (h.b + gamma * h.b2) / denom;
  c.alpha0 = c.upsilon > 0.0 ? std::min(gamma / c.upsilon, 0.5) : 0.5;
  c.lambda = c.alpha0 * c.chi;
  c.Q = c.alpha0 * c.upsilon;
  return c;
}

/// Among grid points with chi > 0, returns the certificate maximizing
/// lambda = alpha0 chi; ties resolve toward smaller gamma.
inline Certificate derive_certificate(const HConstants& h, std::span<const double> gamma_grid) {
  h.validate();
  if (!check_condtheta(h)) throw InfeasibleError("zeta <= kappa*b/mu");
  if (gamma_grid.empty()) throw std::invalid_argument("certificate: empty gamma grid");
  bool found = false;
  Certificate best;
  for (double g : gamma_grid) {
    const Certificate c = certificate_at(h, g);  // validates the grid range
    if (!(c.chi > 0.0)) continue;
    if (!found || c.lambda > best.lambda || (c.lambda == best.lambda && c.gamma < best.gamma)) {
      best = c;
      found = true;
    }
  }
  if (!found) throw InfeasibleError("no gamma on grid with chi > 0");
  return best;
}

/// Canonical search grid: 64 geometric points inside the admissible range.
inline std::vector<double> default_gamma_grid(const HConstants& h) {
  h.validate();
  double upper;
  if (h.b1 > 0.0) {
    upper = (h.mu / h.b1) * (1.0 - 1e-6);
  } else if (h.b2 > 0.0 && h.kappa > 0.0) {
    upper = std::max(1e-3, (h.zeta * h.mu / h.kappa - h.b) / h.b2) * (1.0 - 1e-6);
  } else {
    upper = std::max(1.0, h.kappa > 0.0 ? h.kappa / h.mu : 1.0);
  }
  const double lower = 1e-4 * std::min(1.0, upper);
  std::vector<double> grid(64);
  const double ratio = std::log(upper / lower) / 63.0;
  for (int i = 0; i < 64; ++i) grid[static_cast<std::size_t>(i)] = lower * std::exp(ratio * i);
  return grid;
}

/// H-constants of the 2D stochastic Navier-Stokes instance:
/// zeta = nu lambda_{N+1}, kappa = 4/nu, mu = nu,
/// b = |A^{-1/2} f|_H^2 / nu + |sigma|_H^2, b1 = 4 |sigma|_H^2 (Poincare
/// constant 1 on the torus), b2 = 0.
inline HConstants nse_h_constants(double nu, double f_norm_Ahalf, double sigma_norm2,
                                  double lambda_Np1) {
  if (!(nu > 0.0)) throw std::invalid_argument("nse constants: nu must be > 0");
  if (f_norm_Ahalf < 0.0 || sigma_norm2 < 0.0 || !(lambda_Np1 > 0.0))
    throw std::invalid_argument("nse constants: bad norms or eigenvalue");
  HConstants h;
  h.zeta = nu * lambda_Np1;
  h.kappa = 4.0 / nu;
  h.mu = nu;
  h.b = f_norm_Ahalf * f_norm_Ahalf / nu + sigma_norm2;
  h.b1 = 4.0 * sigma_norm2;
  h.b2 = 0.0;
  return h;
}

/// Spectral-gap threshold lambda_{N+1} > 4 nu^{-4} |A^{-1/2} f|^2 + 4 nu^{-3} |sigma|^2.
inline bool check_nse_threshold(double nu, double f_norm_Ahalf, double sigma_norm2,
                                double lambda_Np1) {
  if (!(nu > 0.0)) throw std::invalid_argument("nse threshold: nu must be > 0");
  return lambda_Np1 > 4.0 * std::pow(nu, -4.0) * f_norm_Ahalf * f_norm_Ahalf +
                          4.0 * std::pow(nu, -3.0) * sigma_norm2;
}

}  // namespace gclab
