#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

/// Discretized path on the delay window [-r, 0]: r/dt + 1 points of an
/// n-dimensional trajectory, newest last. Ring-buffered so a step is O(1).
class Segment {
 public:
  Segment(int dim, double dt, int window_steps, const Eigen::VectorXd& fill)
      : dim_(dim), dt_(dt), values_(static_cast<std::size_t>(dim) * (window_steps + 1)) {
    if (dim < 1 || window_steps < 1 || !(dt > 0.0))
      throw std::invalid_argument("segment: bad dimensions");
    if (fill.size() != dim) throw std::invalid_argument("segment: fill dimension mismatch");
    length_ = window_steps + 1;
    for (int p = 0; p < length_; ++p)
      for (int c = 0; c < dim_; ++c) values_[flat(p, c)] = fill[c];
  }

  int dim() const { return dim_; }
  int length() const { return length_; }
  double dt() const { return dt_; }

  /// Value `steps_back` grid points before the endpoint (0 = endpoint x(t)).
  Eigen::VectorXd at_back(int steps_back) const {
    if (steps_back < 0 || steps_back >= length_)
      throw std::invalid_argument("segment: offset outside window");
    Eigen::VectorXd v(dim_);
    const int p = (head_ + length_ - 1 - steps_back) % length_;
    for (int c = 0; c < dim_; ++c) v[c] = values_[flat(p, c)];
    return v;
  }

  Eigen::VectorXd endpoint() const { return at_back(0); }

  void push(const Eigen::VectorXd& v) {
    if (v.size() != dim_) throw std::invalid_argument("segment: push dimension mismatch");
    for (int c = 0; c < dim_; ++c) values_[flat(head_, c)] = v[c];
    head_ = (head_ + 1) % length_;
  }

  /// sup over the window of the Euclidean norm.
  double sup_norm() const {
    double m = 0.0;
    for (int p = 0; p < length_; ++p) {
      double n2 = 0.0;
      for (int c = 0; c < dim_; ++c) {
        const double v = values_[flat(p, c)];
        n2 += v * v;
      }
      m = std::max(m, n2);
    }
    return std::sqrt(m);
  }

  double sup_norm_diff(const Segment& other) const {
    if (other.dim_ != dim_ || other.length_ != length_)
      throw std::invalid_argument("segment: grid mismatch");
    double m = 0.0;
    for (int s = 0; s < length_; ++s) {
      const Eigen::VectorXd d = at_back(s) - other.at_back(s);
      m = std::max(m, d.squaredNorm());
    }
    return std::sqrt(m);
  }

  bool finite() const { return all_finite(values_); }

 private:
  std::size_t flat(int p, int c) const {
    return static_cast<std::size_t>(p) * dim_ + static_cast<std::size_t>(c);
  }

  int dim_;
  double dt_;
  int length_ = 0;
  int head_ = 0;  // oldest slot; endpoint is head-1 mod length
  std::vector<double> values_;
};

/// Functional SDE dX = f(X_t) dt + g(X_t) dW with delay window r; the
/// diffusion must admit a bounded right inverse.
struct SfdeSpec {
  double delay = 1.0;
  int dim = 1;
  int noise_dim = 1;
  std::function<Eigen::VectorXd(const Segment&)> drift;
  std::function<Eigen::MatrixXd(const Segment&)> diffusion;
  double g_inverse_bound = 1.0;  // declared sup of |g^{-1}|

  void validate() const {
    if (!(delay > 0.0)) throw std::invalid_argument("sfde: delay must be > 0");
    if (dim < 1 || noise_dim < dim) throw std::invalid_argument("sfde: need noise_dim >= dim");
    if (!drift || !diffusion) throw std::invalid_argument("sfde: drift/diffusion unset");
    if (!(g_inverse_bound > 0.0) || !std::isfinite(g_inverse_bound))
      throw std::invalid_argument("sfde: right-inverse bound must be finite and > 0");
  }
};

/// Linear delay drift a0 x(t) + a1 x(t-r) with constant scalar diffusion.
inline SfdeSpec linear_delay_sfde(double a0, double a1, double delay, double noise_amp) {
  if (!(noise_amp > 0.0)) throw std::invalid_argument("sfde: noise amplitude must be > 0");
  SfdeSpec s;
  s.delay = delay;
  s.dim = 1;
  s.noise_dim = 1;
  s.drift = [a0, a1](const Segment& seg) {
    Eigen::VectorXd v(1);
    v[0] = a0 * seg.endpoint()[0] + a1 * seg.at_back(seg.length() - 1)[0];
    return v;
  };
  s.diffusion = [noise_amp](const Segment&) {
    return Eigen::MatrixXd::Constant(1, 1, noise_amp);
  };
  s.g_inverse_bound = 1.0 / noise_amp;
  return s;
}

enum class SfdeLyapunov { SupSquared, EndpointSquared };

class SfdeModel {
 public:
  using State = Segment;
  using Control = double;  // coupling gain

  struct PairState {
    Segment x;
    Segment y;
  };

  SfdeModel(SfdeSpec spec, double dt) : spec_(std::move(spec)), dt_(dt) {
    spec_.validate();
    const double steps = spec_.delay / dt;
    window_steps_ = static_cast<int>(std::llround(steps));
    if (window_steps_ < 1 || std::abs(steps - window_steps_) > 1e-9)
      throw std::invalid_argument("sfde: delay must be an integer multiple of dt");
  }

  const SfdeSpec& spec() const { return spec_; }
  int noise_dimension() const { return spec_.noise_dim; }
  double dt() const { return dt_; }
  int window_steps() const { return window_steps_; }

  Segment constant_segment(const Eigen::VectorXd& v) const {
    return Segment(spec_.dim, dt_, window_steps_, v);
  }
  Segment constant_segment(double v) const {
    return constant_segment(Eigen::VectorXd::Constant(spec_.dim, v));
  }

  /// Euler-Maruyama on the endpoint plus segment shift.
  void step(State& x, std::span<const double> dW, double dt) const {
    check(x, dW, dt);
    const Eigen::VectorXd xe = x.endpoint();
    const Eigen::VectorXd drift = spec_.drift(x);
    const Eigen::MatrixXd g = spec_.diffusion(x);
    x.push(xe + dt * drift + g * Eigen::Map<const Eigen::VectorXd>(dW.data(), dW.size()));
  }

  PairState make_pair(const State& x0, const State& y0) const {
    if (x0.dim() != spec_.dim || y0.dim() != spec_.dim || x0.length() != window_steps_ + 1 ||
        y0.length() != window_steps_ + 1)
      throw std::invalid_argument("sfde: segment grid mismatch");
    return {x0, y0};
  }

  /// beta = gain g(Y_t)^{-1} (X(t) - Y(t)); throws if g is rank deficient.
  Eigen::VectorXd control_beta(const PairState& p, double gain) const {
    const Eigen::MatrixXd g = spec_.diffusion(p.y);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(g);
    if (cod.rank() < spec_.dim)
      throw std::invalid_argument("sfde: diffusion has no right inverse at Y");
    return gain * cod.solve(p.x.endpoint() - p.y.endpoint());
  }

  std::vector<double> control_drift(const PairState& p, const Control& gain) const {
    Eigen::VectorXd beta = control_beta(p, gain);
    return {beta.data(), beta.data() + beta.size()};
  }

  void pair_step(PairState& p, std::span<const double> dW, const Control& gain, double dt,
                 bool with_control) const {
    check(p.x, dW, dt);
    const Eigen::Map<const Eigen::VectorXd> inc(dW.data(), dW.size());
    Eigen::VectorXd noise_y = inc;
    if (with_control) noise_y += dt * control_beta(p, gain);

    const Eigen::VectorXd xe = p.x.endpoint();
    const Eigen::VectorXd ye = p.y.endpoint();
    const Eigen::VectorXd fx = spec_.drift(p.x);
    const Eigen::VectorXd fy = spec_.drift(p.y);
    const Eigen::MatrixXd gx = spec_.diffusion(p.x);
    const Eigen::MatrixXd gy = spec_.diffusion(p.y);
    p.x.push(xe + dt * fx + gx * inc);
    p.y.push(ye + dt * fy + gy * noise_y);
  }

  double q(const PairState& p) const { return p.x.sup_norm_diff(p.y); }
  double U(const PairState& p) const {
    const double s = p.x.sup_norm();
    return s * s;
  }
  double S(const PairState&) const { return 0.0; }

  double lyapunov(const State& x, SfdeLyapunov kind = SfdeLyapunov::EndpointSquared) const {
    if (kind == SfdeLyapunov::SupSquared) {
      const double s = x.sup_norm();
      return s * s;
    }
    return x.endpoint().squaredNorm();
  }

  double pair_norm(const PairState& p) const { return std::max(p.x.sup_norm(), p.y.sup_norm()); }
  bool pair_finite(const PairState& p) const { return p.x.finite() && p.y.finite(); }
  double state_norm(const State& x) const { return x.sup_norm(); }
  bool state_finite(const State& x) const { return x.finite(); }

  double reimbursement_constant(const Control& gain) const {
    // |beta| <= gain |g^{-1}| |X(t)-Y(t)| and q is the sup-norm difference
    return gain * gain * spec_.g_inverse_bound * spec_.g_inverse_bound;
  }

 private:
  void check(const State& x, std::span<const double> dW, double dt) const {
    if (static_cast<int>(dW.size()) != spec_.noise_dim)
      throw std::invalid_argument("sfde: increment dimension mismatch");
    if (std::abs(dt - dt_) > 1e-12 * dt_)
      throw std::invalid_argument("sfde: step size differs from the segment grid");
    if (x.dim() != spec_.dim) throw std::invalid_argument("sfde: state dimension mismatch");
  }

  SfdeSpec spec_;
  double dt_;
  int window_steps_ = 0;
};

}  // namespace gclab
