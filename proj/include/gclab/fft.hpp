#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace gclab::fft {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// In-place iterative radix-2 transform. Forward is unnormalized; the
/// inverse divides by n, so inverse(forward(a)) == a up to roundoff.
inline void transform(std::complex<double>* a, std::size_t n, bool inverse) {
  if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * 3.141592653589793238462643383279502884 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) a[i] *= inv;
  }
}

inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  transform(a.data(), a.size(), inverse);
}

/// Row-major n-by-n 2D transform (rows then columns).
inline void transform_2d(std::vector<std::complex<double>>& a, std::size_t n, bool inverse) {
  if (a.size() != n * n) throw std::invalid_argument("fft: grid size mismatch");
  for (std::size_t r = 0; r < n; ++r) transform(a.data() + r * n, n, inverse);
  std::vector<std::complex<double>> col(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) col[r] = a[r * n + c];
    transform(col.data(), n, inverse);
    for (std::size_t r = 0; r < n; ++r) a[r * n + c] = col[r];
  }
}

}  // namespace gclab::fft
