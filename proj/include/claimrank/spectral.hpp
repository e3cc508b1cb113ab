#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "claimrank/audio.hpp"
#include "claimrank/fft.hpp"

namespace claimrank::audio {

struct Spectrogram {
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;  // n_fft/2 + 1
  std::vector<std::complex<double>> cells;  // frame-major

  std::complex<double>& at(std::size_t frame, std::size_t bin) {
    return cells[frame * n_bins + bin];
  }
  const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
    return cells[frame * n_bins + bin];
  }
};

// frames = floor((len - n_fft)/hop) + 1; no implicit padding.
inline Spectrogram stft(const Waveform& w, std::size_t n_fft, std::size_t hop) {
  if (hop == 0 || hop > n_fft) throw ValidationError("stft: need 0 < hop <= n_fft");
  if (w.samples.size() < n_fft)
    throw ValidationError("stft: input shorter than n_fft (" +
                          std::to_string(w.samples.size()) + " < " +
                          std::to_string(n_fft) + ")");
  const auto window = dsp::hann_window(n_fft);
  Spectrogram spec;
  spec.n_fft = n_fft;
  spec.hop = hop;
  spec.n_frames = (w.samples.size() - n_fft) / hop + 1;
  spec.n_bins = n_fft / 2 + 1;
  spec.cells.resize(spec.n_frames * spec.n_bins);
  std::vector<double> frame(n_fft);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    for (std::size_t i = 0; i < n_fft; ++i)
      frame[i] = w.samples[f * hop + i] * window[i];
    const auto bins = dsp::rfft(frame);
    std::copy(bins.begin(), bins.end(), spec.cells.begin() + f * spec.n_bins);
  }
  return spec;
}

// Weighted overlap-add inverse with window-squared normalisation. Exact on
// the interior for COLA-compatible hops; the first/last partial-overlap
// samples carry the usual edge attenuation.
inline std::vector<double> istft(const Spectrogram& spec, std::size_t out_len) {
  const auto window = dsp::hann_window(spec.n_fft);
  std::vector<double> acc(spec.hop * (spec.n_frames - 1) + spec.n_fft, 0.0);
  std::vector<double> norm(acc.size(), 0.0);
  std::vector<std::complex<double>> bins(spec.n_bins);
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    std::copy(spec.cells.begin() + f * spec.n_bins,
              spec.cells.begin() + (f + 1) * spec.n_bins, bins.begin());
    const auto frame = dsp::irfft(bins, spec.n_fft);
    for (std::size_t i = 0; i < spec.n_fft; ++i) {
      acc[f * spec.hop + i] += frame[i] * window[i];
      norm[f * spec.hop + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(out_len, 0.0);
  const std::size_t n = std::min(out_len, acc.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i] / std::max(norm[i], 1e-8);
  return out;
}

// Stationary spectral gate parameters. The noise statistics come from the
// clip itself, so the gate assumes the wanted signal is time-sparse per
// frequency bin (true for speech; a tone spanning the whole clip would be
// treated as noise floor).
struct NoiseGateConfig {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  double n_std_thresh = 1.5;
  double prop_decrease = 1.0;
  int freq_smooth_bins = 2;
  int time_smooth_frames = 4;

  void validate() const {
    if (hop == 0 || hop > n_fft)
      throw ConfigError("noise gate: need 0 < hop <= n_fft");
    if (n_std_thresh < 0.0) throw ConfigError("noise gate: n_std_thresh < 0");
    if (prop_decrease < 0.0 || prop_decrease > 1.0)
      throw ConfigError("noise gate: prop_decrease outside [0,1]");
    if (freq_smooth_bins < 0 || time_smooth_frames < 0)
      throw ConfigError("noise gate: negative smoothing radius");
  }
};

namespace detail {

// Moving average with constant divisor (edges shrink toward zero), applied
// along one axis of a frame-major mask.
inline void box_smooth(std::vector<double>& mask, std::size_t n_frames,
                       std::size_t n_bins, int radius, bool along_time) {
  if (radius <= 0) return;
  const double inv = 1.0 / (2 * radius + 1);
  std::vector<double> src = mask;
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t b = 0; b < n_bins; ++b) {
      double acc = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        const long long ff = along_time ? static_cast<long long>(f) + d
                                        : static_cast<long long>(f);
        const long long bb = along_time ? static_cast<long long>(b)
                                        : static_cast<long long>(b) + d;
        if (ff < 0 || bb < 0 || ff >= static_cast<long long>(n_frames) ||
            bb >= static_cast<long long>(n_bins))
          continue;
        acc += src[static_cast<std::size_t>(ff) * n_bins + static_cast<std::size_t>(bb)];
      }
      mask[f * n_bins + b] = acc * inv;
    }
  }
}

}  // namespace detail

// Spectral-gating noise reduction:
//   threshold_f = mean_f + n_std_thresh * std_f  of |STFT| over frames,
//   keep mask  = |STFT| > threshold, box-smoothed over +-freq_smooth_bins
//   and +-time_smooth_frames,
//   gain       = mask + (1 - mask) * (1 - prop_decrease),
// then inverse STFT, trimmed to the input length and clipped to [-1, 1].
inline Waveform spectral_gate_denoise(const Waveform& w, const NoiseGateConfig& cfg) {
  cfg.validate();
  if (w.samples.size() < cfg.n_fft)
    throw ValidationError("spectral_gate_denoise: input shorter than n_fft");

  // Pad with zeros so overlap-add covers the tail of the signal.
  Waveform padded = w;
  padded.samples.resize(w.samples.size() + cfg.n_fft, 0.0);
  Spectrogram spec = stft(padded, cfg.n_fft, cfg.hop);

  std::vector<double> mag(spec.n_frames * spec.n_bins);
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(spec.cells[i]);

  std::vector<double> mask(mag.size(), 0.0);
  for (std::size_t b = 0; b < spec.n_bins; ++b) {
    double mean = 0.0;
    for (std::size_t f = 0; f < spec.n_frames; ++f) mean += mag[f * spec.n_bins + b];
    mean /= static_cast<double>(spec.n_frames);
    double var = 0.0;
    for (std::size_t f = 0; f < spec.n_frames; ++f) {
      const double d = mag[f * spec.n_bins + b] - mean;
      var += d * d;
    }
    var /= static_cast<double>(spec.n_frames);
    const double threshold = mean + cfg.n_std_thresh * std::sqrt(var);
    for (std::size_t f = 0; f < spec.n_frames; ++f)
      mask[f * spec.n_bins + b] = mag[f * spec.n_bins + b] > threshold ? 1.0 : 0.0;
  }

  detail::box_smooth(mask, spec.n_frames, spec.n_bins, cfg.freq_smooth_bins, false);
  detail::box_smooth(mask, spec.n_frames, spec.n_bins, cfg.time_smooth_frames, true);

  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double gain = mask[i] + (1.0 - mask[i]) * (1.0 - cfg.prop_decrease);
    spec.cells[i] *= gain;
  }

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = istft(spec, w.samples.size());
  for (double& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

}  // namespace claimrank::audio
