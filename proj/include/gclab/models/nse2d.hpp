#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gclab/spectral.hpp"

namespace gclab {

/// Unit-H-norm real vorticity mode: cos(k.x) for phase 0, sin(k.x) for
/// phase 1, scaled so the induced velocity has |u|_H = 1.
inline SpectralField vorticity_mode(int k_max, const WaveVector& k, int phase) {
  SpectralField f(k_max);
  const double c = std::sqrt(2.0) * std::sqrt(static_cast<double>(k.norm2()));
  if (phase == 0)
    f.set_mode_pair(k, {0.5 * c, 0.0});
  else
    f.set_mode_pair(k, {0.0, -0.5 * c});
  return f;
}

/// Noise directions spanning every mode with |k|^2 <= radius2: one cosine and
/// one sine direction per conjugate pair, each scaled to velocity H-norm
/// `amplitude`.
inline std::vector<SpectralField> spanning_noise_directions(int k_max, int radius2,
                                                            double amplitude) {
  std::vector<SpectralField> dirs;
  const auto& modes = detail::mode_table(k_max).modes;
  for (const auto& k : modes) {
    if (k.norm2() > radius2) break;
    if (!(k.kx > 0 || (k.kx == 0 && k.ky > 0))) continue;  // one per conjugate pair
    for (int phase : {0, 1}) {
      SpectralField f = vorticity_mode(k_max, k, phase);
      f *= amplitude;
      dirs.push_back(std::move(f));
    }
  }
  return dirs;
}

/// 2D stochastic Navier-Stokes on the torus in vorticity form:
///   d w = (-nu A w - (u . grad) w + f) dt + sum_k sigma_k dW^k,
/// with the coupling control acting on the first N Stokes modes.
struct Nse2dSpec {
  double nu = 1.0;
  int k_max = 16;
  SpectralField forcing;                        // vorticity representation; may be zero
  std::vector<SpectralField> noise_directions;  // vorticity representation
  int forced_mode_count = 0;                    // N: modes covered by the noise span

  void validate() const {
    if (!(nu >= 0.0)) throw std::invalid_argument("nse: nu must be >= 0");
    if (k_max < 1) throw std::invalid_argument("nse: cutoff must be >= 1");
    if (forcing.k_max() != 0 && forcing.k_max() != k_max)
      throw std::invalid_argument("nse: forcing cutoff mismatch");
    for (const auto& s : noise_directions) {
      if (s.k_max() != k_max) throw std::invalid_argument("nse: noise direction cutoff mismatch");
      if (!s.is_hermitian(1e-12))
        throw std::invalid_argument("nse: noise directions must be real fields");
    }
    const auto& modes = detail::mode_table(k_max).modes;
    if (forced_mode_count < 0 || forced_mode_count >= static_cast<int>(modes.size()))
      throw std::invalid_argument("nse: forced mode count out of range");
    // the projector must map real fields to real fields
    const auto& tab = detail::mode_table(k_max);
    for (int i = 0; i < forced_mode_count; ++i)
      if (tab.conj_index[static_cast<std::size_t>(i)] >= forced_mode_count)
        throw std::invalid_argument("nse: forced mode set not closed under conjugation");
  }

  double sigma_norm2_h() const {
    KahanSum s;
    for (const auto& d : noise_directions) {
      const double h = norms(d).h_norm;
      s.add(h * h);
    }
    return s.value();
  }

  double f_norm_Ahalf() const {
    if (forcing.k_max() == 0) return 0.0;
    KahanSum s;
    const auto& modes = forcing.table().modes;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const double n2 = static_cast<double>(modes[i].norm2());
      s.add(std::norm(forcing.coeffs()[i]) / (n2 * n2));
    }
    return std::sqrt(s.value());
  }

  double lambda_Np1() const { return eigenvalue_after(k_max, forced_mode_count); }
};

class Nse2dModel {
 public:
  using State = SpectralField;
  struct Control {};  // the coupling drift is fixed by the spec

  /// x is the first marginal; diff = x - y carried explicitly (the noise is
  /// additive, so the difference evolves deterministically).
  struct PairState {
    SpectralField x;
    SpectralField diff;
  };

  explicit Nse2dModel(Nse2dSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const int N = spec_.forced_mode_count;
    const int m = static_cast<int>(spec_.noise_directions.size());
    if (N > 0 && m == 0)
      throw std::invalid_argument("nse: forced modes declared but no noise directions");
    if (N == 0 || m == 0) return;
    // H-orthonormal real coordinates of the forced subspace: (Re, Im)/|k|
    // per retained mode.
    sigma_on_forced_.resize(2 * N, m);
    const auto& modes = detail::mode_table(spec_.k_max).modes;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < N; ++i) {
        const double invk = 1.0 / std::sqrt(static_cast<double>(modes[static_cast<std::size_t>(i)].norm2()));
        const auto c = spec_.noise_directions[static_cast<std::size_t>(j)].coeffs()[static_cast<std::size_t>(i)];
        sigma_on_forced_(2 * i, j) = c.real() * invk;
        sigma_on_forced_(2 * i + 1, j) = c.imag() * invk;
      }
    solver_.compute(sigma_on_forced_);
    if (N > 0 && solver_.rank() < N)
      throw std::invalid_argument("nse: noise directions do not span the forced modes (range condition)");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma_on_forced_);
    const auto& sv = svd.singularValues();
    double smin = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-12 * sv[0]) smin = sv[i];
    sigma_pinv_norm2_ = smin > 0.0 ? 1.0 / (smin * smin) : 0.0;
  }

  const Nse2dSpec& spec() const { return spec_; }
  int noise_dimension() const { return static_cast<int>(spec_.noise_directions.size()); }
  double control_gain() const { return 0.5 * spec_.nu * spec_.lambda_Np1(); }

  void step(State& w, std::span<const double> dW, double dt) const {
    if (w.k_max() != spec_.k_max) throw std::invalid_argument("nse: state cutoff mismatch");
    decay_half(w, dt);
    heun_single(w, dt);
    decay_half(w, dt);
    add_noise(w, dW);
  }

  PairState make_pair(const State& x0, const State& y0) const {
    if (x0.k_max() != spec_.k_max || y0.k_max() != spec_.k_max)
      throw std::invalid_argument("nse: state cutoff mismatch");
    return {x0, x0 - y0};
  }

  void pair_step(PairState& p, std::span<const double> dW, const Control&, double dt,
                 bool with_control) const {
    decay_half(p.x, dt);
    decay_half(p.diff, dt);

    SpectralField nx1 = nonlinear_term(p.x);
    SpectralField k1x = nx1;
    add_forcing(k1x);
    SpectralField k1d = nx1 - nonlinear_term(p.x - p.diff);
    if (with_control) subtract_control(k1d, p.diff);

    SpectralField xp = p.x;
    xp += dt * k1x;
    SpectralField dp = p.diff;
    dp += dt * k1d;

    SpectralField nxp = nonlinear_term(xp);
    SpectralField k2x = nxp;
    add_forcing(k2x);
    SpectralField k2d = nxp - nonlinear_term(xp - dp);
    if (with_control) subtract_control(k2d, dp);

    p.x += (0.5 * dt) * (k1x + k2x);
    p.diff += (0.5 * dt) * (k1d + k2d);
    decay_half(p.x, dt);
    decay_half(p.diff, dt);
    add_noise(p.x, dW);
  }

  /// beta solving sigma beta = (nu lambda_{N+1}/2) P_N (x - y) on the forced
  /// modes, by least squares.
  std::vector<double> control_drift(const PairState& p, const Control& = {}) const {
    const int N = spec_.forced_mode_count;
    Eigen::VectorXd target(2 * N);
    const auto& modes = detail::mode_table(spec_.k_max).modes;
    const double gain = control_gain();
    for (int i = 0; i < N; ++i) {
      const double invk = 1.0 / std::sqrt(static_cast<double>(modes[static_cast<std::size_t>(i)].norm2()));
      const auto c = p.diff.coeffs()[static_cast<std::size_t>(i)];
      target[2 * i] = gain * c.real() * invk;
      target[2 * i + 1] = gain * c.imag() * invk;
    }
    Eigen::VectorXd beta = solver_.solve(target);
    return {beta.data(), beta.data() + beta.size()};
  }

  /// Residual |sigma beta - target|_H of the control solve, for validation.
  double control_residual(const PairState& p) const {
    const std::vector<double> beta = control_drift(p);
    const int N = spec_.forced_mode_count;
    Eigen::VectorXd target(2 * N);
    const auto& modes = detail::mode_table(spec_.k_max).modes;
    const double gain = control_gain();
    for (int i = 0; i < N; ++i) {
      const double invk = 1.0 / std::sqrt(static_cast<double>(modes[static_cast<std::size_t>(i)].norm2()));
      const auto c = p.diff.coeffs()[static_cast<std::size_t>(i)];
      target[2 * i] = gain * c.real() * invk;
      target[2 * i + 1] = gain * c.imag() * invk;
    }
    return (sigma_on_forced_ * Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                                                 static_cast<Eigen::Index>(beta.size())) -
            target)
        .norm();
  }

  double q(const PairState& p) const {
    const double h = norms(p.diff).h_norm;
    return h * h;
  }
  double U(const PairState& p) const {
    const double h = norms(p.x).h_norm;
    return h * h;
  }
  double S(const PairState& p) const {
    const double v = norms(p.x).v_norm;
    return v * v;
  }
  double lyapunov(const State& w) const {
    const double h = norms(w).h_norm;
    return h * h;
  }

  double pair_norm(const PairState& p) const {
    return std::max(norms(p.x).v_norm, norms(p.diff).v_norm);
  }
  bool pair_finite(const PairState& p) const { return p.x.finite() && p.diff.finite(); }
  double state_norm(const State& w) const { return norms(w).v_norm; }
  bool state_finite(const State& w) const { return w.finite(); }

  double reimbursement_constant(const Control& = {}) const {
    const double g = control_gain();
    return g * g * sigma_pinv_norm2_;
  }

 private:
  void decay_half(SpectralField& f, double dt) const {
    const auto& modes = f.table().modes;
    for (std::size_t i = 0; i < f.mode_count(); ++i)
      f.coeffs()[i] *= std::exp(-0.5 * spec_.nu * static_cast<double>(modes[i].norm2()) * dt);
  }

  void heun_single(SpectralField& w, double dt) const {
    SpectralField k1 = nonlinear_term(w);
    add_forcing(k1);
    SpectralField wp = w;
    wp += dt * k1;
    SpectralField k2 = nonlinear_term(wp);
    add_forcing(k2);
    w += (0.5 * dt) * (k1 + k2);
  }

  void add_forcing(SpectralField& rhs) const {
    if (spec_.forcing.k_max() != 0) rhs += spec_.forcing;
  }

  void subtract_control(SpectralField& rhs, const SpectralField& diff) const {
    const double gain = control_gain();
    for (int i = 0; i < spec_.forced_mode_count; ++i)
      rhs.coeffs()[static_cast<std::size_t>(i)] -= gain * diff.coeffs()[static_cast<std::size_t>(i)];
  }

  void add_noise(SpectralField& w, std::span<const double> dW) const {
    if (dW.size() != spec_.noise_directions.size())
      throw std::invalid_argument("nse: increment dimension mismatch");
    for (std::size_t j = 0; j < dW.size(); ++j) {
      const auto& dir = spec_.noise_directions[j];
      for (std::size_t i = 0; i < w.mode_count(); ++i)
        w.coeffs()[i] += dW[j] * dir.coeffs()[i];
    }
  }

  Nse2dSpec spec_;
  Eigen::MatrixXd sigma_on_forced_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver_;
  double sigma_pinv_norm2_ = 0.0;
};

/// (U, S) = (|u|_H^2, |u|_V^2) of the velocity induced by a vorticity state.
inline std::pair<double, double> energy_terms_nse(const SpectralField& w) {
  const auto n = norms(w);
  return {n.h_norm * n.h_norm, n.v_norm * n.v_norm};
}

}  // namespace gclab
