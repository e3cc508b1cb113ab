#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "claimrank/audio.hpp"
#include "claimrank/rng.hpp"
#include "claimrank/spectral.hpp"

using namespace claimrank;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("claimrank_audio_" + name))
      .string();
}

// Hand-built WAV bytes for formats write_wav does not produce.
std::string wav_bytes(std::uint16_t format, std::uint16_t channels,
                      std::uint32_t rate, std::uint16_t bits,
                      const std::string& data) {
  std::string b = "RIFF";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  u32(36 + static_cast<std::uint32_t>(data.size()));
  b += "WAVE";
  b += "fmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  b += "data";
  u32(static_cast<std::uint32_t>(data.size()));
  b += data;
  return b;
}

std::string pcm16(std::initializer_list<int> samples) {
  std::string d;
  for (int s : samples) {
    const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(s));
    d.push_back(static_cast<char>(v & 0xff));
    d.push_back(static_cast<char>((v >> 8) & 0xff));
  }
  return d;
}

TEST(ReadWav, Int16ScalesBy32768) {
  const auto path = temp_path("int16.wav");
  write_file(path, wav_bytes(1, 1, 16000, 16, pcm16({16384, -16384, 32767})));
  const auto w = audio::read_wav(path);
  ASSERT_EQ(w.samples.size(), 3u);
  EXPECT_DOUBLE_EQ(w.samples[0], 0.5);
  EXPECT_DOUBLE_EQ(w.samples[1], -0.5);
  EXPECT_NEAR(w.samples[2], 32767.0 / 32768.0, 1e-12);
  EXPECT_EQ(w.sample_rate, 16000);
}

TEST(ReadWav, StereoAveragesToMono) {
  const auto path = temp_path("stereo.wav");
  // Frame (0.2, 0.4) in 16-bit: 6554 and 13107.
  write_file(path, wav_bytes(1, 2, 8000, 16, pcm16({6554, 13107})));
  const auto w = audio::read_wav(path);
  ASSERT_EQ(w.samples.size(), 1u);
  EXPECT_NEAR(w.samples[0], 0.3, 1e-4);
}

TEST(ReadWav, Float32Supported) {
  const auto path = temp_path("float.wav");
  std::string data;
  for (float v : {0.25f, -0.75f}) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i)
      data.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  write_file(path, wav_bytes(3, 1, 22050, 32, data));
  const auto w = audio::read_wav(path);
  ASSERT_EQ(w.samples.size(), 2u);
  EXPECT_FLOAT_EQ(static_cast<float>(w.samples[0]), 0.25f);
  EXPECT_FLOAT_EQ(static_cast<float>(w.samples[1]), -0.75f);
}

TEST(ReadWav, CompressedFormatRejected) {
  const auto path = temp_path("alaw.wav");
  write_file(path, wav_bytes(7, 1, 8000, 8, "xx"));
  EXPECT_THROW(audio::read_wav(path), ParseError);
}

TEST(ReadWav, NotRiffRejected) {
  const auto path = temp_path("garbage.wav");
  write_file(path, "definitely not a wav file, far too short anyway....");
  EXPECT_THROW(audio::read_wav(path), ParseError);
}

TEST(WriteWav, RoundTrip) {
  audio::Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 1000; ++i)
    w.samples.push_back(0.8 * std::sin(2.0 * M_PI * 440.0 * i / 16000.0));
  const auto path = temp_path("roundtrip.wav");
  audio::write_wav(w, path);
  const auto r = audio::read_wav(path);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32768.0);
}

TEST(Resample, IdentityWhenRatesMatch) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples = {0.1, 0.2, 0.3};
  const auto r = audio::resample(w, 16000);
  EXPECT_EQ(r.samples, w.samples);
}

TEST(Resample, LengthArithmetic) {
  audio::Waveform w;
  w.sample_rate = 8000;
  w.samples.assign(8000, 0.0);  // 1 s
  const auto r = audio::resample(w, 16000);
  EXPECT_EQ(r.samples.size(), 16000u);
  EXPECT_EQ(r.sample_rate, 16000);
}

TEST(Resample, ConstantStaysConstant) {
  audio::Waveform w;
  w.sample_rate = 44100;
  w.samples.assign(4410, 0.37);
  for (int rate : {8000, 16000, 48000}) {
    const auto r = audio::resample(w, rate);
    for (double s : r.samples) EXPECT_NEAR(s, 0.37, 1e-12);
  }
}

TEST(CutSegment, EightSecondCap) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000 * 12, 0.1);  // 12 s recording
  corpus::SegmentRef ref{"e", 1, "f.wav", 1000, 11000};  // 10 s segment
  const auto cut = audio::cut_segment(w, ref);
  EXPECT_EQ(cut.samples.size(), 128000u);  // exactly 8 s at 16 kHz
}

TEST(CutSegment, ShortSegmentUntouched) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000 * 5, 0.1);
  corpus::SegmentRef ref{"e", 1, "f.wav", 500, 3500};  // 3 s
  const auto cut = audio::cut_segment(w, ref);
  EXPECT_EQ(cut.samples.size(), 48000u);
}

TEST(CutSegment, StartPastEndIsError) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0);  // 1 s
  corpus::SegmentRef ref{"e", 1, "f.wav", 2000, 3000};
  EXPECT_THROW(audio::cut_segment(w, ref), ValidationError);
}

TEST(CutSegment, EndPastFileClamps) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0);  // 1 s
  corpus::SegmentRef ref{"e", 1, "f.wav", 500, 5000};
  bool clamped = false;
  const auto cut = audio::cut_segment(w, ref, 8.0, &clamped);
  EXPECT_TRUE(clamped);
  EXPECT_EQ(cut.samples.size(), 16000u - 8000u);
}

TEST(Stft, FrameCountFormula) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0);
  const auto spec = audio::stft(w, 400, 160);
  EXPECT_EQ(spec.n_frames, 98u);  // floor((16000-400)/160)+1
  EXPECT_EQ(spec.n_bins, 201u);
}

TEST(Stft, ZeroInputZeroMagnitudes) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(2048, 0.0);
  const auto spec = audio::stft(w, 512, 128);
  for (const auto& cell : spec.cells) EXPECT_EQ(std::abs(cell), 0.0);
}

TEST(Stft, DcEnergyInBinZero) {
  // A constant c windowed by periodic Hann has |X(0)| = c*N/2, |X(1)| = c*N/4
  // (the window's own spectral leakage) and nothing beyond bin 1.
  const double c = 0.5;
  const std::size_t n = 256;
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(n, c);
  const auto spec = audio::stft(w, n, n);
  ASSERT_EQ(spec.n_frames, 1u);
  EXPECT_NEAR(std::abs(spec.at(0, 0)), c * n / 2.0, 1e-9);
  EXPECT_NEAR(std::abs(spec.at(0, 1)), c * n / 4.0, 1e-9);
  for (std::size_t b = 2; b < spec.n_bins; ++b)
    EXPECT_LT(std::abs(spec.at(0, b)), 1e-9);
}

TEST(Stft, TooShortInputIsError) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(100, 0.0);
  EXPECT_THROW(audio::stft(w, 400, 160), ValidationError);
}

TEST(Istft, RoundTripInteriorExact) {
  Rng rng(5);
  audio::Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 8192; ++i) w.samples.push_back(rng.normal(0.0, 0.2));
  const std::size_t n_fft = 1024, hop = 256;  // hop = n_fft/4
  const auto spec = audio::stft(w, n_fft, hop);
  const auto back = audio::istft(spec, w.samples.size());
  double max_err = 0.0;
  for (std::size_t i = n_fft; i + n_fft < w.samples.size(); ++i)
    max_err = std::max(max_err, std::abs(back[i] - w.samples[i]));
  EXPECT_LT(max_err, 1e-6);
}

}  // namespace
