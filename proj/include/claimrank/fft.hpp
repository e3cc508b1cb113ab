#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "claimrank/error.hpp"

namespace claimrank::dsp {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey; callers fall back to the O(n^2) DFT for
// non-power-of-two sizes (short analysis windows only).
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> step(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

inline std::vector<std::complex<double>> dft_naive(
    const std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 2.0 : -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sign * M_PI * static_cast<double>(k) *
                         static_cast<double>(t) / static_cast<double>(n);
      acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

inline void transform(std::vector<std::complex<double>>& a, bool inverse) {
  if (is_pow2(a.size())) {
    fft_radix2(a, inverse);
  } else {
    a = dft_naive(a, inverse);
  }
}

// Real input -> n/2+1 non-redundant bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
  transform(a, false);
  a.resize(x.size() / 2 + 1);
  return a;
}

// n/2+1 bins -> n real samples (hermitian extension).
inline std::vector<double> irfft(const std::vector<std::complex<double>>& bins,
                                 std::size_t n) {
  if (bins.size() != n / 2 + 1) throw ShapeError("irfft: bin count mismatch");
  std::vector<std::complex<double>> a(n);
  for (std::size_t i = 0; i < bins.size(); ++i) a[i] = bins[i];
  for (std::size_t i = bins.size(); i < n; ++i) a[i] = std::conj(a[n - i]);
  transform(a, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

// Periodic Hann: w[n] = 0.5 - 0.5 cos(2 pi n / N). Satisfies the constant
// overlap-add condition at hop = N/4 that the inverse STFT relies on.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace claimrank::dsp
