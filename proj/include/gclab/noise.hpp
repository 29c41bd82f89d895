#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gclab/util.hpp"

namespace gclab {

namespace philox {

// Philox-4x32-10 counter-based generator (Salmon et al. reference constants).
struct Block {
  std::array<std::uint32_t, 4> v;
};

namespace detail {
inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace detail

inline Block generate(std::uint64_t key, std::array<std::uint32_t, 4> ctr) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      k0 += W0;
      k1 += W1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::mulhilo(M0, ctr[0], hi0, lo0);
    detail::mulhilo(M1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
  }
  return {ctr};
}

/// Uniform in (0,1), never exactly 0 or 1.
inline double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace philox

/// Stateless reproducible stream of Brownian increments: the increment at a
/// given (master_seed, stream_index, step) is a pure function of its indices,
/// so concurrent trajectory workers share nothing. Marginals are N(0, dt I_m).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_index, int dimension, double dt)
      : master_seed_(master_seed), stream_index_(stream_index), dimension_(dimension), dt_(dt) {
    if (dimension < 1) throw std::invalid_argument("noise: dimension must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("noise: dt must be > 0");
    key_ = philox::splitmix64(master_seed ^ (stream_index * 0x9E3779B97F4A7C15ull));
  }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }
  int dimension() const { return dimension_; }
  double dt() const { return dt_; }

  NoiseStream with_stream(std::uint64_t stream_index) const {
    return NoiseStream(master_seed_, stream_index, dimension_, dt_);
  }
  NoiseStream with_dt(double dt) const {
    return NoiseStream(master_seed_, stream_index_, dimension_, dt);
  }

  /// Standard normal draws for one step (before the sqrt(dt) scaling).
  void fill_normals(std::uint64_t step, std::span<double> out) const {
    const std::size_t m = out.size();
    for (std::size_t block = 0; 2 * block < m; ++block) {
      const auto b = philox::generate(
          key_, {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                 static_cast<std::uint32_t>(block), 0x67636c62u});
      const std::uint64_t u0 =
          static_cast<std::uint64_t>(b.v[0]) | (static_cast<std::uint64_t>(b.v[1]) << 32);
      const std::uint64_t u1 =
          static_cast<std::uint64_t>(b.v[2]) | (static_cast<std::uint64_t>(b.v[3]) << 32);
      const double r = std::sqrt(-2.0 * std::log(philox::to_unit(u0)));
      const double phi = 2.0 * 3.141592653589793238462643383279502884 * philox::to_unit(u1);
      out[2 * block] = r * std::cos(phi);
      if (2 * block + 1 < m) out[2 * block + 1] = r * std::sin(phi);
    }
  }

  void fill_increment(std::uint64_t step, std::span<double> out) const {
    fill_normals(step, out);
    const double s = std::sqrt(dt_);
    for (double& x : out) x *= s;
  }

  std::vector<double> increment(std::uint64_t step) const {
    std::vector<double> out(static_cast<std::size_t>(dimension_));
    fill_increment(step, out);
    return out;
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  int dimension_;
  double dt_;
  std::uint64_t key_;
};

/// Running record of a controlled path's change-of-measure data:
/// cost = int |beta|^2 ds and ito_sum = int beta . dW, both left-point
/// discretized and accumulated in compensated arithmetic. The Girsanov
/// exponent is log_weight = -ito_sum - cost/2.
class GirsanovLedger {
 public:
  void update(std::span<const double> beta, std::span<const double> dW, double dt) {
    if (beta.size() != dW.size()) throw std::invalid_argument("ledger: dimension mismatch");
    if (!(dt > 0.0)) throw std::invalid_argument("ledger: dt must be > 0");
    double b2 = 0.0, bdw = 0.0;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      b2 += beta[i] * beta[i];
      bdw += beta[i] * dW[i];
    }
    cost_.add(b2 * dt);
    ito_.add(bdw);
    t_ += dt;
  }

  double cost() const { return cost_.value(); }
  double ito_sum() const { return ito_.value(); }
  double time() const { return t_; }
  double log_weight() const { return -ito_.value() - 0.5 * cost_.value(); }

 private:
  KahanSum cost_;
  KahanSum ito_;
  double t_ = 0.0;
};

/// KL(law of controlled path || law of driving noise) <= mean(cost)/2,
/// estimated over an ensemble of final ledger costs.
inline MeanStdErr ledger_kl_bound(std::span<const double> costs) {
  MeanStdErr m = mean_std_error(costs);
  return {0.5 * m.mean, 0.5 * m.std_error, m.n};
}

inline double ledger_kl_bound(const GirsanovLedger& ledger) { return 0.5 * ledger.cost(); }

/// Monte-Carlo estimate of M_delta = E[ cost^delta ], delta in (0,1).
inline MeanStdErr ledger_m_delta(std::span<const double> costs, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("ledger: delta must be in (0,1)");
  if (costs.empty()) throw std::invalid_argument("ledger: empty ensemble");
  std::vector<double> powered(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) powered[i] = std::pow(costs[i], delta);
  return mean_std_error(powered);
}

}  // namespace gclab
