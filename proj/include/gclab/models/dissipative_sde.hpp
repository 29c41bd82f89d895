#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

enum class SdeNonlinearity { Zero, CubicSaturating, Rotation };

/// Galerkin-truncated dissipative SDE in R^n:
///   dX = -diag(lambda) X dt + B(X) dt + Sigma dW,
/// with lambda_i > 0 ascending and B from a named Lipschitz family.
struct DissipativeSdeSpec {
  std::vector<double> eigenvalues;
  SdeNonlinearity nonlinearity = SdeNonlinearity::Zero;
  double nonlin_scale = 0.0;
  Eigen::MatrixXd sigma;  // n x m, constant (additive noise)
  double lipschitz_bound = 0.0;

  int dim() const { return static_cast<int>(eigenvalues.size()); }

  void validate() const {
    if (eigenvalues.empty()) throw std::invalid_argument("sde: empty spectrum");
    double prev = 0.0;
    for (double l : eigenvalues) {
      if (!(l > 0.0)) throw std::invalid_argument("sde: eigenvalues must be > 0");
      if (l < prev) throw std::invalid_argument("sde: eigenvalues must be ascending");
      prev = l;
    }
    if (sigma.rows() != dim()) throw std::invalid_argument("sde: sigma row count != dimension");
    if (sigma.cols() < 1) throw std::invalid_argument("sde: sigma needs at least one column");
    if (lipschitz_bound < 0.0) throw std::invalid_argument("sde: negative Lipschitz bound");
  }

  static DissipativeSdeSpec ou(double rate, double noise = 1.0) {
    DissipativeSdeSpec s;
    s.eigenvalues = {rate};
    s.sigma = Eigen::MatrixXd::Constant(1, 1, noise);
    return s;
  }
};

class DissipativeSdeModel {
 public:
  using State = Eigen::VectorXd;
  using Control = double;  // coupling gain

  /// x is the first marginal; diff = x - y is carried explicitly so shared
  /// additive noise cancels in the difference to the last bit.
  struct PairState {
    State x;
    State diff;
  };

  explicit DissipativeSdeModel(DissipativeSdeSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    lambda_ = Eigen::Map<const Eigen::VectorXd>(spec_.eigenvalues.data(), spec_.dim());
    solver_.compute(spec_.sigma);
    range_proj_ = spec_.sigma * solver_.pseudoInverse();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(spec_.sigma);
    const auto& sv = svd.singularValues();
    double smin = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-12 * sv[0]) smin = sv[i];
    pinv_norm2_ = smin > 0.0 ? 1.0 / (smin * smin) : 0.0;
  }

  const DissipativeSdeSpec& spec() const { return spec_; }
  int noise_dimension() const { return static_cast<int>(spec_.sigma.cols()); }

  State nonlinearity(const State& x) const {
    const int n = spec_.dim();
    State b = State::Zero(n);
    switch (spec_.nonlinearity) {
      case SdeNonlinearity::Zero:
        break;
      case SdeNonlinearity::CubicSaturating:
        for (int i = 0; i < n; ++i) {
          const double v = x[i];
          b[i] = -spec_.nonlin_scale * v * v * v / (1.0 + v * v);
        }
        break;
      case SdeNonlinearity::Rotation:
        for (int i = 0; i + 1 < n; i += 2) {
          b[i] = -spec_.nonlin_scale * x[i + 1];
          b[i + 1] = spec_.nonlin_scale * x[i];
        }
        break;
    }
    return b;
  }

  /// One step: exact half-steps on the diagonal linear part around a Heun
  /// stage for the nonlinearity, then the additive noise.
  void step(State& x, std::span<const double> dW, double dt) const {
    check_dims(x, dW);
    const Eigen::VectorXd half = (-0.5 * dt * lambda_.array()).exp();
    State x1 = half.cwiseProduct(x);
    const State k1 = nonlinearity(x1);
    const State k2 = nonlinearity(x1 + dt * k1);
    State x2 = x1 + 0.5 * dt * (k1 + k2);
    x = half.cwiseProduct(x2) + spec_.sigma * Eigen::Map<const Eigen::VectorXd>(dW.data(),
                                                                                 dW.size());
  }

  PairState make_pair(const State& x0, const State& y0) const {
    if (x0.size() != spec_.dim() || y0.size() != spec_.dim())
      throw std::invalid_argument("sde: state dimension mismatch");
    return {x0, x0 - y0};
  }

  void pair_step(PairState& p, std::span<const double> dW, const Control& gain, double dt,
                 bool with_control) const {
    check_dims(p.x, dW);
    const double g = with_control ? gain : 0.0;
    const Eigen::VectorXd half = (-0.5 * dt * lambda_.array()).exp();

    State x1 = half.cwiseProduct(p.x);
    State d1 = half.cwiseProduct(p.diff);
    const State bx1 = nonlinearity(x1);
    const State k1d = bx1 - nonlinearity(x1 - d1) - g * (range_proj_ * d1);
    State xp = x1 + dt * bx1;
    State dp = d1 + dt * k1d;
    const State bxp = nonlinearity(xp);
    const State k2d = bxp - nonlinearity(xp - dp) - g * (range_proj_ * dp);
    State x2 = x1 + 0.5 * dt * (bx1 + bxp);
    State d2 = d1 + 0.5 * dt * (k1d + k2d);

    p.x = half.cwiseProduct(x2) +
          spec_.sigma * Eigen::Map<const Eigen::VectorXd>(dW.data(), dW.size());
    p.diff = half.cwiseProduct(d2);
  }

  /// Control drift in noise space: beta = gain * Sigma^+ (x - y).
  std::vector<double> control_drift(const PairState& p, const Control& gain) const {
    Eigen::VectorXd beta = gain * solver_.solve(p.diff);
    return {beta.data(), beta.data() + beta.size()};
  }

  double q(const PairState& p) const { return p.diff.squaredNorm(); }
  double U(const PairState& p) const { return p.x.squaredNorm(); }
  double S(const PairState& p) const { return lambda_.cwiseProduct(p.x).dot(p.x); }
  double lyapunov(const State& x) const { return x.squaredNorm(); }

  double pair_norm(const PairState& p) const {
    return std::max(p.x.lpNorm<Eigen::Infinity>(), p.diff.lpNorm<Eigen::Infinity>());
  }
  bool pair_finite(const PairState& p) const {
    return p.x.allFinite() && p.diff.allFinite();
  }
  double state_norm(const State& x) const { return x.lpNorm<Eigen::Infinity>(); }
  bool state_finite(const State& x) const { return x.allFinite(); }

  /// c with |beta|^2 <= c q(x,y) for the reimbursement check.
  double reimbursement_constant(const Control& gain) const { return gain * gain * pinv_norm2_; }

 private:
  void check_dims(const State& x, std::span<const double> dW) const {
    if (x.size() != spec_.dim()) throw std::invalid_argument("sde: state dimension mismatch");
    if (static_cast<Eigen::Index>(dW.size()) != spec_.sigma.cols())
      throw std::invalid_argument("sde: increment dimension mismatch");
  }

  DissipativeSdeSpec spec_;
  Eigen::VectorXd lambda_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver_;
  Eigen::MatrixXd range_proj_;
  double pinv_norm2_ = 0.0;
};

}  // namespace gclab
