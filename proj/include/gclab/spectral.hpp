#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gclab/fft.hpp"
#include "gclab/util.hpp"

namespace gclab {

/// Integer lattice wavevector of a zero-mean field; (0,0) is never retained.
struct WaveVector {
  int kx = 0;
  int ky = 0;
  int norm2() const { return kx * kx + ky * ky; }
  friend bool operator==(const WaveVector& a, const WaveVector& b) {
    return a.kx == b.kx && a.ky == b.ky;
  }
};

namespace detail {

/// Retained-mode enumeration for a cutoff: all k != 0 with |k|^2 <= K^2,
/// ordered by (|k|^2, kx, ky). The order doubles as the Stokes eigenvalue
/// order on the torus (lambda_k = |k|^2, ties lexicographic).
struct ModeTable {
  int k_max = 0;
  std::vector<WaveVector> modes;
  std::vector<int> lookup;  // (kx+K)*(2K+1)+(ky+K) -> mode index or -1
  std::vector<int> conj_index;

  explicit ModeTable(int k) : k_max(k) {
    if (k < 1) throw std::invalid_argument("spectral: cutoff K_max must be >= 1 (empty spectrum)");
    for (int kx = -k; kx <= k; ++kx)
      for (int ky = -k; ky <= k; ++ky) {
        if (kx == 0 && ky == 0) continue;
        if (kx * kx + ky * ky > k * k) continue;
        modes.push_back({kx, ky});
      }
    std::sort(modes.begin(), modes.end(), [](const WaveVector& a, const WaveVector& b) {
      if (a.norm2() != b.norm2()) return a.norm2() < b.norm2();
      if (a.kx != b.kx) return a.kx < b.kx;
      return a.ky < b.ky;
    });
    const int side = 2 * k + 1;
    lookup.assign(static_cast<std::size_t>(side) * side, -1);
    for (std::size_t i = 0; i < modes.size(); ++i)
      lookup[static_cast<std::size_t>(modes[i].kx + k) * side + (modes[i].ky + k)] =
          static_cast<int>(i);
    conj_index.resize(modes.size());
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const int j = index_of({-modes[i].kx, -modes[i].ky});
      conj_index[i] = j;
    }
  }

  int index_of(const WaveVector& k) const {
    if (std::abs(k.kx) > k_max || std::abs(k.ky) > k_max) return -1;
    const int side = 2 * k_max + 1;
    return lookup[static_cast<std::size_t>(k.kx + k_max) * side + (k.ky + k_max)];
  }
};

inline const ModeTable& mode_table(int k_max) {
  static std::mutex mu;
  static std::unordered_map<int, std::unique_ptr<ModeTable>> tables;
  std::lock_guard<std::mutex> lock(mu);
  auto it = tables.find(k_max);
  if (it == tables.end())
    it = tables.emplace(k_max, std::make_unique<ModeTable>(k_max)).first;
  return *it->second;
}

}  // namespace detail

/// Truncated Fourier coefficients of a real scalar field on the 2-torus,
/// stored in the canonical mode order for its cutoff. Used throughout in the
/// vorticity representation: h_norm/v_norm are the norms of the induced
/// velocity (h^2 = sum |c|^2/|k|^2, v^2 = sum |c|^2).
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int k_max)
      : k_max_(k_max), coeffs_(detail::mode_table(k_max).modes.size(), {0.0, 0.0}) {}

  int k_max() const { return k_max_; }
  std::size_t mode_count() const { return coeffs_.size(); }
  const std::vector<std::complex<double>>& coeffs() const { return coeffs_; }
  std::vector<std::complex<double>>& coeffs() { return coeffs_; }
  const detail::ModeTable& table() const { return detail::mode_table(k_max_); }

  std::complex<double> coeff(const WaveVector& k) const {
    const int i = table().index_of(k);
    return i < 0 ? std::complex<double>{0.0, 0.0} : coeffs_[static_cast<std::size_t>(i)];
  }

  /// Sets c(k) = amp and c(-k) = conj(amp) so the physical field stays real.
  void set_mode_pair(const WaveVector& k, std::complex<double> amp) {
    const int i = table().index_of(k);
    if (i < 0) throw std::invalid_argument("spectral: mode outside cutoff");
    coeffs_[static_cast<std::size_t>(i)] = amp;
    coeffs_[static_cast<std::size_t>(table().conj_index[static_cast<std::size_t>(i)])] =
        std::conj(amp);
  }

  /// Projects onto the Hermitian-symmetric subspace (real physical fields).
  void hermitianize() {
    const auto& tab = table();
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      const std::size_t j = static_cast<std::size_t>(tab.conj_index[i]);
      if (j < i) continue;
      const std::complex<double> avg = 0.5 * (coeffs_[i] + std::conj(coeffs_[j]));
      coeffs_[i] = avg;
      coeffs_[j] = std::conj(avg);
    }
  }

  bool is_hermitian(double tol = 1e-12) const {
    const auto& tab = table();
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      const std::size_t j = static_cast<std::size_t>(tab.conj_index[i]);
      if (std::abs(coeffs_[i] - std::conj(coeffs_[j])) > tol) return false;
    }
    return true;
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

  bool finite() const {
    for (const auto& c : coeffs_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }

 private:
  void require_same(const SpectralField& o) const {
    if (k_max_ != o.k_max_) throw std::invalid_argument("spectral: cutoff mismatch");
  }

  int k_max_ = 0;
  std::vector<std::complex<double>> coeffs_;
};

/// Projector onto the first `count` modes in the canonical eigenvalue order.
struct ModeProjector {
  int count = 0;
};

/// Eigenvalues of the Stokes operator on the torus, ascending with the
/// canonical tie-break. The first eigenvalue is always 1.
inline std::vector<std::pair<double, WaveVector>> stokes_eigenvalues(int k_max) {
  const auto& tab = detail::mode_table(k_max);  // throws on k_max < 1
  std::vector<std::pair<double, WaveVector>> out;
  out.reserve(tab.modes.size());
  for (const auto& k : tab.modes) out.emplace_back(static_cast<double>(k.norm2()), k);
  return out;
}

/// Number of retained modes with |k|^2 <= radius2.
inline int mode_count_within(int k_max, int radius2) {
  const auto& tab = detail::mode_table(k_max);
  int n = 0;
  while (n < static_cast<int>(tab.modes.size()) &&
         tab.modes[static_cast<std::size_t>(n)].norm2() <= radius2)
    ++n;
  return n;
}

/// lambda_{N+1} for a projector keeping the first N modes.
inline double eigenvalue_after(int k_max, int n_modes) {
  const auto& tab = detail::mode_table(k_max);
  if (n_modes < 0 || n_modes >= static_cast<int>(tab.modes.size()))
    throw std::invalid_argument("spectral: no eigenvalue beyond the retained set");
  return static_cast<double>(tab.modes[static_cast<std::size_t>(n_modes)].norm2());
}

struct FieldNorms {
  double h_norm = 0.0;
  double v_norm = 0.0;
};

/// H- and V-norms of the velocity induced by a vorticity field.
inline FieldNorms norms(const SpectralField& f) {
  KahanSum h2, v2;
  const auto& modes = f.table().modes;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double a2 = std::norm(f.coeffs()[i]);
    v2.add(a2);
    h2.add(a2 / static_cast<double>(modes[i].norm2()));
  }
  return {std::sqrt(h2.value()), std::sqrt(v2.value())};
}

/// Plain l2 norm of the stored coefficients.
inline double l2_norm(const SpectralField& f) {
  KahanSum s;
  for (const auto& c : f.coeffs()) s.add(std::norm(c));
  return std::sqrt(s.value());
}

namespace detail {

/// Clears the low `drop` significand bits so later products with small
/// integers stay exact.
inline double truncate_significand(double x, int drop) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  bits &= ~((std::uint64_t{1} << drop) - 1);
  std::memcpy(&x, &bits, sizeof(x));
  return x;
}

inline int int_bit_width(int v) {
  int b = 0;
  while (v > 0) {
    ++b;
    v >>= 1;
  }
  return b;
}

}  // namespace detail

/// Velocity components u = (ux, uy) recovered from vorticity,
/// u_hat = i k^perp w_hat / |k|^2 with k^perp = (-ky, kx). The shared mode
/// scalar is rounded so that both wavevector products are exact, which makes
/// kx ux + ky uy cancel to exactly zero in any evaluation order.
inline std::pair<SpectralField, SpectralField> biot_savart(const SpectralField& omega) {
  SpectralField ux(omega.k_max()), uy(omega.k_max());
  const auto& modes = omega.table().modes;
  const int drop = 2 * detail::int_bit_width(omega.k_max());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(modes[i].norm2());
    const std::complex<double> w = omega.coeffs()[i];
    const std::complex<double> s(detail::truncate_significand(w.real() * inv, drop),
                                 detail::truncate_significand(w.imag() * inv, drop));
    const std::complex<double> t(-s.imag(), s.real());  // i * s, exact
    ux.coeffs()[i] = -static_cast<double>(modes[i].ky) * t;
    uy.coeffs()[i] = static_cast<double>(modes[i].kx) * t;
  }
  return {std::move(ux), std::move(uy)};
}

/// Coefficients outside the first proj.count modes are zeroed.
inline SpectralField project_low_modes(const SpectralField& f, const ModeProjector& proj) {
  if (proj.count < 0 || proj.count > static_cast<int>(f.mode_count()))
    throw std::invalid_argument("spectral: projector exceeds field cutoff");
  SpectralField out = f;
  for (std::size_t i = static_cast<std::size_t>(proj.count); i < out.mode_count(); ++i)
    out.coeffs()[i] = {0.0, 0.0};
  return out;
}

namespace detail {

/// Grid size for alias-free quadratic products of disk-truncated fields.
inline std::size_t dealias_grid(int k_max) {
  return fft::next_pow2(static_cast<std::size_t>(3 * k_max + 1));
}

inline std::size_t grid_pos(int k, std::size_t n) {
  return k >= 0 ? static_cast<std::size_t>(k) : n - static_cast<std::size_t>(-k);
}

}  // namespace detail

/// Vorticity-form advection term -(u . grad) omega, evaluated
/// pseudo-spectrally on a padded grid so retained-mode products are exact
/// (equivalently, fully dealiased). Output is Hermitian and zero-mean.
inline SpectralField nonlinear_term(const SpectralField& omega) {
  const int K = omega.k_max();
  const std::size_t n = detail::dealias_grid(K);
  const auto& modes = omega.table().modes;
  const std::complex<double> I(0.0, 1.0);

  // Pack (ux, uy) into one complex grid and (d omega/dx, d omega/dy) into
  // another; real/imag parts separate after the inverse transform because
  // each spectrum is Hermitian.
  std::vector<std::complex<double>> vel(n * n, {0.0, 0.0});
  std::vector<std::complex<double>> grad(n * n, {0.0, 0.0});
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& k = modes[i];
    const std::complex<double> w = omega.coeffs()[i];
    if (w == std::complex<double>(0.0, 0.0)) continue;
    const double inv = 1.0 / static_cast<double>(k.norm2());
    const std::complex<double> ux = I * (-static_cast<double>(k.ky)) * w * inv;
    const std::complex<double> uy = I * (static_cast<double>(k.kx)) * w * inv;
    const std::complex<double> wx = I * static_cast<double>(k.kx) * w;
    const std::complex<double> wy = I * static_cast<double>(k.ky) * w;
    const std::size_t pos = detail::grid_pos(k.kx, n) * n + detail::grid_pos(k.ky, n);
    vel[pos] = ux + I * uy;
    grad[pos] = wx + I * wy;
  }
  fft::transform_2d(vel, n, true);
  fft::transform_2d(grad, n, true);

  std::vector<std::complex<double>> prod(n * n);
  for (std::size_t j = 0; j < n * n; ++j) {
    const double ux = vel[j].real(), uy = vel[j].imag();
    const double wx = grad[j].real(), wy = grad[j].imag();
    prod[j] = {ux * wx + uy * wy, 0.0};
  }
  fft::transform_2d(prod, n, false);

  SpectralField out(K);
  const double scale = -static_cast<double>(n) * static_cast<double>(n);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& k = modes[i];
    const std::size_t pos = detail::grid_pos(k.kx, n) * n + detail::grid_pos(k.ky, n);
    out.coeffs()[i] = scale * prod[pos];
  }
  out.hermitianize();
  return out;
}

/// <a, b>_H of the induced velocities (vorticity representation).
inline double h_inner(const SpectralField& a, const SpectralField& b) {
  if (a.k_max() != b.k_max()) throw std::invalid_argument("spectral: cutoff mismatch");
  KahanSum s;
  const auto& modes = a.table().modes;
  for (std::size_t i = 0; i < modes.size(); ++i)
    s.add((a.coeffs()[i] * std::conj(b.coeffs()[i])).real() /
          static_cast<double>(modes[i].norm2()));
  return s.value();
}

/// Plain l2 inner product of coefficients (enstrophy pairing).
inline double l2_inner(const SpectralField& a, const SpectralField& b) {
  if (a.k_max() != b.k_max()) throw std::invalid_argument("spectral: cutoff mismatch");
  KahanSum s;
  for (std::size_t i = 0; i < a.mode_count(); ++i)
    s.add((a.coeffs()[i] * std::conj(b.coeffs()[i])).real());
  return s.value();
}

}  // namespace gclab
