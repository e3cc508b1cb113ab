#include <gtest/gtest.h>

#include <cmath>

#include "claimrank/mfcc.hpp"
#include "claimrank/rng.hpp"

using namespace claimrank;

namespace {

audio::Waveform tone_with_texture(std::uint64_t seed, double amplitude,
                                  std::size_t n = 16000) {
  Rng rng(seed);
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    w.samples[i] = amplitude * (0.6 * std::sin(2.0 * M_PI * 220.0 * t) +
                                0.3 * std::sin(2.0 * M_PI * 870.0 * t) +
                                0.1 * rng.normal());
  }
  return w;
}

TEST(Mfcc, DefaultShapeForOneSecond) {
  const auto w = tone_with_texture(1, 0.3);
  const auto m = audio::mfcc(w, {});
  EXPECT_EQ(m.rows, 98u);  // floor((16000-400)/160)+1
  EXPECT_EQ(m.cols, 13u);
}

TEST(Mfcc, SilenceGivesConstantFloorFrames) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000, 0.0);
  const audio::MfccConfig cfg;
  const auto m = audio::mfcc(w, cfg);

  // Expected frame: orthonormal DCT-II of the constant vector log(1e-10).
  const double log_floor = std::log(1e-10);
  std::vector<double> expected(static_cast<std::size_t>(cfg.n_coeffs), 0.0);
  for (int k = 0; k < cfg.n_coeffs; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / cfg.n_mels);
    double acc = 0.0;
    for (int i = 0; i < cfg.n_mels; ++i)
      acc += scale * std::cos(M_PI * k * (2.0 * i + 1.0) / (2.0 * cfg.n_mels)) *
             log_floor;
    expected[static_cast<std::size_t>(k)] = acc;
  }
  for (std::size_t f = 0; f < m.rows; ++f)
    for (std::size_t k = 0; k < m.cols; ++k)
      EXPECT_NEAR(m(f, k), expected[k], 1e-9) << "frame " << f << " coeff " << k;
}

TEST(Mfcc, AmplitudeDoublingShiftsOnlyCoefficientZero) {
  const auto w1 = tone_with_texture(7, 0.3);
  auto w2 = w1;
  for (auto& s : w2.samples) s *= 2.0;
  const auto m1 = audio::mfcc(w1, {});
  const auto m2 = audio::mfcc(w2, {});
  ASSERT_EQ(m1.rows, m2.rows);
  for (std::size_t f = 0; f < m1.rows; ++f) {
    EXPECT_GT(m2(f, 0) - m1(f, 0), 0.1) << "c0 must shift upward";
    for (std::size_t k = 1; k < m1.cols; ++k)
      EXPECT_NEAR(m1(f, k), m2(f, k), 1e-6) << "frame " << f << " coeff " << k;
  }
  // The c0 shift is the same constant in every frame: log(4) pushed through
  // the DCT's constant basis vector.
  const double shift = m2(0, 0) - m1(0, 0);
  const double expected_shift =
      std::log(4.0) * std::sqrt(1.0 / 26.0) * 26.0;  // sqrt(1/M)*M*log(4)
  EXPECT_NEAR(shift, expected_shift, 1e-6);
  for (std::size_t f = 1; f < m1.rows; ++f)
    EXPECT_NEAR(m2(f, 0) - m1(f, 0), shift, 1e-6);
}

TEST(Mfcc, HopTranslationEquivariance) {
  const auto w = tone_with_texture(11, 0.4, 16000);
  audio::Waveform shifted;
  shifted.sample_rate = w.sample_rate;
  shifted.samples.assign(w.samples.begin() + 160, w.samples.end());
  const auto m = audio::mfcc(w, {});
  const auto ms = audio::mfcc(shifted, {});
  ASSERT_EQ(ms.rows, m.rows - 1);
  // Frame 0 of the shifted signal sees a different pre-emphasis boundary;
  // interior frames must line up exactly.
  for (std::size_t f = 1; f < ms.rows; ++f)
    for (std::size_t k = 0; k < m.cols; ++k)
      EXPECT_NEAR(ms(f, k), m(f + 1, k), 1e-6) << "frame " << f << " coeff " << k;
}

TEST(Mfcc, TooShortInputIsError) {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(399, 0.0);
  EXPECT_THROW(audio::mfcc(w, {}), ValidationError);
}

TEST(Mfcc, ConfigValidation) {
  audio::MfccConfig cfg;
  cfg.n_coeffs = 30;  // > n_mels
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.preemphasis = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PoolFeatures, SingleFrameZeroStd) {
  Matrix<double> m(1, 3);
  m(0, 0) = 1.0;
  m(0, 1) = -2.0;
  m(0, 2) = 0.5;
  const auto pooled = audio::pool_features(m);
  ASSERT_EQ(pooled.size(), 6u);
  EXPECT_DOUBLE_EQ(pooled[0], 1.0);
  EXPECT_DOUBLE_EQ(pooled[1], -2.0);
  EXPECT_DOUBLE_EQ(pooled[2], 0.5);
  EXPECT_DOUBLE_EQ(pooled[3], 0.0);
  EXPECT_DOUBLE_EQ(pooled[4], 0.0);
  EXPECT_DOUBLE_EQ(pooled[5], 0.0);
}

TEST(PoolFeatures, OppositeFramesGiveZeroMeanAbsStd) {
  Matrix<double> m(2, 2);
  m(0, 0) = 3.0;
  m(0, 1) = -1.0;
  m(1, 0) = -3.0;
  m(1, 1) = 1.0;
  const auto pooled = audio::pool_features(m);
  EXPECT_DOUBLE_EQ(pooled[0], 0.0);
  EXPECT_DOUBLE_EQ(pooled[1], 0.0);
  EXPECT_DOUBLE_EQ(pooled[2], 3.0);
  EXPECT_DOUBLE_EQ(pooled[3], 1.0);
}

TEST(PoolFeatures, ConstantMatrixZeroVariance) {
  Matrix<double> m(5, 2, 0.7);
  const auto pooled = audio::pool_features(m);
  EXPECT_DOUBLE_EQ(pooled[0], 0.7);
  EXPECT_DOUBLE_EQ(pooled[1], 0.7);
  EXPECT_DOUBLE_EQ(pooled[2], 0.0);
  EXPECT_DOUBLE_EQ(pooled[3], 0.0);
}

TEST(PoolFeatures, EmptyMatrixIsError) {
  EXPECT_THROW(audio::pool_features(Matrix<double>(0, 13)), ValidationError);
}

}  // namespace
