#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/error.hpp"
#include "claimrank/io.hpp"

namespace claimrank::audio {

// In-memory mono audio. Samples live in [-1, 1] after every processing step.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

namespace detail {

inline std::uint16_t read_u16(const std::string& b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off])) |
         (static_cast<std::uint16_t>(static_cast<unsigned char>(b[off + 1])) << 8);
}

inline std::uint32_t read_u32(const std::string& b, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(b[off + static_cast<std::size_t>(i)]);
  return v;
}

inline void append_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xff));
  b.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void append_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

// PCM WAV reader: 16-bit integer (format 1) or 32-bit float (format 3),
// any channel count averaged to mono. Integer samples scale by 1/32768.
inline Waveform read_wav(const std::string& path) {
  const std::string b = read_file(path);
  if (b.size() < 44 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw ParseError(path + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t off = 12;
  while (off + 8 <= b.size()) {
    const std::string id = b.substr(off, 4);
    const std::uint32_t chunk_len = detail::read_u32(b, off + 4);
    const std::size_t body = off + 8;
    if (body + chunk_len > b.size())
      throw ParseError(path + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (chunk_len < 16) throw ParseError(path + ": short fmt chunk");
      format = detail::read_u16(b, body);
      channels = detail::read_u16(b, body + 2);
      rate = detail::read_u32(b, body + 4);
      bits = detail::read_u16(b, body + 14);
    } else if (id == "data") {
      data_off = body;
      data_len = chunk_len;
    }
    off = body + chunk_len + (chunk_len % 2);  // chunks are word-aligned
  }
  if (rate == 0 || data_off == 0)
    throw ParseError(path + ": missing fmt or data chunk");
  if (channels == 0) throw ParseError(path + ": zero channels");
  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32)
    throw ParseError(path + ": unsupported codec (format " + std::to_string(format) +
                     ", " + std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_len / frame_bytes;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t p = data_off + f * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        const auto raw = static_cast<std::int16_t>(detail::read_u16(b, p));
        acc += static_cast<double>(raw) / 32768.0;
      } else {
        std::uint32_t bits32 = detail::read_u32(b, p);
        float v;
        std::memcpy(&v, &bits32, sizeof(v));
        acc += static_cast<double>(v);
      }
    }
    w.samples[f] = std::clamp(acc / channels, -1.0, 1.0);
  }
  return w;
}

// 16-bit PCM mono writer.
inline void write_wav(const Waveform& w, const std::string& path) {
  std::string body;
  body.reserve(44 + w.samples.size() * 2);
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  body += "RIFF";
  detail::append_u32(body, 36 + data_len);
  body += "WAVE";
  body += "fmt ";
  detail::append_u32(body, 16);
  detail::append_u16(body, 1);  // PCM
  detail::append_u16(body, 1);  // mono
  detail::append_u32(body, static_cast<std::uint32_t>(w.sample_rate));
  detail::append_u32(body, static_cast<std::uint32_t>(w.sample_rate * 2));
  detail::append_u16(body, 2);
  detail::append_u16(body, 16);
  body += "data";
  detail::append_u32(body, data_len);
  for (double s : w.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const long q = std::lround(clamped * 32768.0);
    detail::append_u16(body, static_cast<std::uint16_t>(
                                 std::clamp<long>(q, -32768, 32767)));
  }
  write_file(path, body);
}

// Linear-interpolation resampling. Output length = round(len * target/source).
// Not band-limited; adequate for the feature pipeline, documented as such.
inline Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw ValidationError("resample: target_rate must be positive");
  if (target_rate == w.sample_rate) return w;
  Waveform out;
  out.sample_rate = target_rate;
  const std::size_t n = w.samples.size();
  if (n == 0) return out;
  const auto out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(n) * target_rate / static_cast<double>(w.sample_rate)));
  out.samples.resize(out_len);
  const double step = static_cast<double>(w.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * step;
    const auto i0 = std::min(static_cast<std::size_t>(pos), n - 1);
    const auto i1 = std::min(i0 + 1, n - 1);
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = w.samples[i0] * (1.0 - frac) + w.samples[i1] * frac;
  }
  return out;
}

// Cuts [start_ms, min(end_ms, start_ms + max_seconds*1000)) out of the
// recording. The head of the segment is kept when truncating. An end past
// the recording is clamped (reported via *clamped); a start past the end
// is an error.
inline Waveform cut_segment(const Waveform& w, const corpus::SegmentRef& ref,
                            double max_seconds = 8.0, bool* clamped = nullptr) {
  if (clamped) *clamped = false;
  const long long sr = w.sample_rate;
  const long long cap_ms = ref.start_ms + std::llround(max_seconds * 1000.0);
  const long long effective_end_ms = std::min(ref.end_ms, cap_ms);
  const long long start_sample = ref.start_ms * sr / 1000;
  long long end_sample = effective_end_ms * sr / 1000;
  const auto len = static_cast<long long>(w.samples.size());
  if (start_sample >= len)
    throw ValidationError("cut_segment: start " + std::to_string(ref.start_ms) +
                          " ms is past the end of the recording (" +
                          std::to_string(len * 1000 / sr) + " ms)");
  if (end_sample > len) {
    end_sample = len;
    if (clamped) *clamped = true;
  }
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + start_sample, w.samples.begin() + end_sample);
  return out;
}

}  // namespace claimrank::audio
