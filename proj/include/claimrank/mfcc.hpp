#pragma once

#include <cmath>
#include <vector>

#include "claimrank/audio.hpp"
#include "claimrank/fft.hpp"
#include "claimrank/matrix.hpp"

namespace claimrank::audio {

struct MfccConfig {
  double win_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 26;
  int n_coeffs = 13;
  double preemphasis = 0.97;

  void validate() const {
    if (win_ms <= 0.0 || hop_ms <= 0.0) throw ConfigError("mfcc: non-positive window/hop");
    if (hop_ms > win_ms) throw ConfigError("mfcc: hop longer than window");
    if (n_mels <= 0 || n_coeffs <= 0) throw ConfigError("mfcc: non-positive sizes");
    if (n_coeffs > n_mels) throw ConfigError("mfcc: n_coeffs > n_mels");
    if (preemphasis < 0.0 || preemphasis >= 1.0)
      throw ConfigError("mfcc: preemphasis outside [0,1)");
  }
};

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular HTK-mel filters over [0, sr/2] evaluated at FFT bin centres.
// Returns n_mels x n_bins weights.
inline Matrix<double> mel_filterbank(int n_mels, std::size_t n_fft, int sample_rate) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> hz_points(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < hz_points.size(); ++i)
    hz_points[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(n_mels + 1));
  Matrix<double> fb(static_cast<std::size_t>(n_mels), n_bins, 0.0);
  for (int m = 0; m < n_mels; ++m) {
    const double left = hz_points[static_cast<std::size_t>(m)];
    const double centre = hz_points[static_cast<std::size_t>(m) + 1];
    const double right = hz_points[static_cast<std::size_t>(m) + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double weight = 0.0;
      if (f > left && f < centre) weight = (f - left) / (centre - left);
      else if (f == centre) weight = 1.0;
      else if (f > centre && f < right) weight = (right - f) / (right - centre);
      fb(static_cast<std::size_t>(m), k) = weight;
    }
  }
  return fb;
}

// Orthonormal DCT-II basis, n_coeffs x n_mels.
inline Matrix<double> dct2_basis(int n_coeffs, int n_mels) {
  Matrix<double> basis(static_cast<std::size_t>(n_coeffs),
                       static_cast<std::size_t>(n_mels));
  const double m = static_cast<double>(n_mels);
  for (int k = 0; k < n_coeffs; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / m);
    for (int i = 0; i < n_mels; ++i)
      basis(static_cast<std::size_t>(k), static_cast<std::size_t>(i)) =
          scale * std::cos(M_PI * k * (2.0 * i + 1.0) / (2.0 * m));
  }
  return basis;
}

}  // namespace detail

// MFCC: pre-emphasis, Hann-windowed power spectrum (FFT size = next power
// of two >= window length, window zero-padded), HTK mel filterbank, log with
// floor 1e-10, orthonormal DCT-II keeping the first n_coeffs coefficients.
// Returns frames x n_coeffs.
inline Matrix<double> mfcc(const Waveform& w, const MfccConfig& cfg) {
  cfg.validate();
  const auto win = static_cast<std::size_t>(
      std::llround(cfg.win_ms * w.sample_rate / 1000.0));
  const auto hop = static_cast<std::size_t>(
      std::llround(cfg.hop_ms * w.sample_rate / 1000.0));
  if (w.samples.size() < win)
    throw ValidationError("mfcc: input shorter than the analysis window (" +
                          std::to_string(w.samples.size()) + " < " +
                          std::to_string(win) + " samples)");

  std::vector<double> emphasized(w.samples.size());
  emphasized[0] = w.samples[0];
  for (std::size_t i = 1; i < w.samples.size(); ++i)
    emphasized[i] = w.samples[i] - cfg.preemphasis * w.samples[i - 1];

  const std::size_t n_fft = dsp::next_pow2(win);
  const auto window = dsp::hann_window(win);
  const auto fb = detail::mel_filterbank(cfg.n_mels, n_fft, w.sample_rate);
  const auto dct = detail::dct2_basis(cfg.n_coeffs, cfg.n_mels);

  const std::size_t n_frames = (emphasized.size() - win) / hop + 1;
  Matrix<double> out(n_frames, static_cast<std::size_t>(cfg.n_coeffs));
  std::vector<double> frame(n_fft, 0.0);
  std::vector<double> log_mel(static_cast<std::size_t>(cfg.n_mels));
  constexpr double kLogFloor = 1e-10;
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = 0; i < win; ++i)
      frame[i] = emphasized[f * hop + i] * window[i];
    const auto bins = dsp::rfft(frame);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = 0; k < bins.size(); ++k)
        energy += std::norm(bins[k]) * fb(static_cast<std::size_t>(m), k);
      log_mel[static_cast<std::size_t>(m)] = std::log(std::max(energy, kLogFloor));
    }
    for (int k = 0; k < cfg.n_coeffs; ++k) {
      double acc = 0.0;
      for (int m = 0; m < cfg.n_mels; ++m)
        acc += dct(static_cast<std::size_t>(k), static_cast<std::size_t>(m)) *
               log_mel[static_cast<std::size_t>(m)];
      out(f, static_cast<std::size_t>(k)) = acc;
    }
  }
  return out;
}

// Per-coefficient mean and population standard deviation over frames,
// concatenated: a fixed-width 2 * n_coeffs vector for the encoders.
inline std::vector<double> pool_features(const Matrix<double>& m) {
  if (m.rows == 0) throw ValidationError("pool_features: empty feature matrix");
  std::vector<double> out(2 * m.cols, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows);
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double d = m(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(m.rows);
    out[c] = mean;
    out[m.cols + c] = std::sqrt(var);
  }
  return out;
}

}  // namespace claimrank::audio
