#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "claimrank/train.hpp"
#include "support/oracles.hpp"

using namespace claimrank;

namespace {

// Two well-separated Gaussian blobs in 2-D.
struct Toy {
  Matrix<float> x;
  std::vector<int> y;
  std::vector<std::array<double, 2>> points;
};

Toy separable_toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Toy toy;
  toy.x = Matrix<float>(n, 2);
  toy.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const double cx = label == 1 ? 2.0 : -2.0;
    const double cy = label == 1 ? 1.5 : -1.5;
    const double px = cx + rng.normal(0.0, 0.3);
    const double py = cy + rng.normal(0.0, 0.3);
    toy.x(i, 0) = static_cast<float>(px);
    toy.x(i, 1) = static_cast<float>(py);
    toy.y[i] = label;
    toy.points.push_back({px, py});
  }
  return toy;
}

nn::DevSet devset_from_toy(const Toy& toy, std::size_t events = 2) {
  nn::DevSet dev;
  dev.x = toy.x;
  dev.labels = toy.y;
  for (std::size_t i = 0; i < toy.y.size(); ++i) {
    dev.event_ids.push_back("dev" + std::to_string(i % events));
    dev.line_nos.push_back(static_cast<long long>(i + 1));
  }
  return dev;
}

double train_accuracy(const nn::Mlp<float>& model, const Matrix<float>& x,
                      const std::vector<int>& y, bool hinge = false) {
  const auto fwd = model.forward_eval(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    int predicted;
    if (hinge) {
      predicted = fwd.logits(i, 0) > 0.0f ? 1 : 0;
    } else {
      predicted = fwd.logits(i, 1) > fwd.logits(i, 0) ? 1 : 0;
    }
    correct += predicted == y[i] ? 1u : 0u;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

TEST(TrainClassifier, SeparableToyReachesFullAccuracy) {
  const auto toy = separable_toy(64, 5);
  ASSERT_TRUE(oracles::separable_2d(toy.points, toy.y))
      << "fixture must be separable for this test to mean anything";

  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {8};
  spec.rep_dim = 8;
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.seed = 7;
  const auto result =
      nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, cfg);
  EXPECT_DOUBLE_EQ(train_accuracy(result.outcome.final_model, toy.x, toy.y), 1.0);
  EXPECT_EQ(result.checkpoint.kind, "classifier");
  EXPECT_GT(result.checkpoint.dev_map, 0.9);
}

TEST(TrainClassifier, HingeLinearStandInSeparatesToo) {
  const auto toy = separable_toy(64, 6);
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.rep_dim = 2;  // identity encoder: a plain linear scorer
  spec.n_classes = 1;
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0001;
  cfg.seed = 7;
  const auto result = nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec,
                                           cfg, nn::LossKind::hinge, "text");
  EXPECT_DOUBLE_EQ(train_accuracy(result.outcome.final_model, toy.x, toy.y, true),
                   1.0);
  EXPECT_EQ(result.checkpoint.loss, "hinge");
}

TEST(TrainClassifier, LossHeadShapeContract) {
  const auto toy = separable_toy(16, 1);
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.rep_dim = 2;
  spec.n_classes = 2;
  nn::TrainConfig cfg;
  EXPECT_THROW(nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, cfg,
                                    nn::LossKind::hinge),
               ConfigError);
  spec.n_classes = 1;
  EXPECT_THROW(nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, cfg,
                                    nn::LossKind::cross_entropy),
               ConfigError);
}

TEST(TrainClassifier, ConstantFeaturesGivePriorRankingMap) {
  // With nothing to learn the model scores every row identically, so the
  // dev ranking falls back to the line_no tie-break: the prior ranking.
  const std::size_t n = 80;
  Matrix<float> x(n, 3, 0.5f);
  std::vector<int> y(n, 0);
  nn::DevSet dev;
  dev.x = x;
  std::vector<oracles::Row> oracle_rows;
  Rng label_rng(404);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = label_rng.bernoulli(0.2) ? 1 : 0;
    dev.labels.push_back(y[i]);
    dev.event_ids.push_back("e" + std::to_string(i % 4));
    dev.line_nos.push_back(static_cast<long long>(i + 1));
    oracle_rows.push_back(
        {dev.event_ids.back(), dev.line_nos.back(), 0.0, y[i]});
  }
  const double prior_map = oracles::prior_ranking_map(oracle_rows);

  nn::MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {6};
  spec.rep_dim = 6;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    nn::TrainConfig cfg;
    cfg.seed = seed;
    const auto result = nn::train_classifier(x, y, dev, spec, cfg);
    EXPECT_NEAR(result.checkpoint.dev_map, prior_map, 0.01) << "seed " << seed;
  }
}

TEST(TrainClassifier, SameSeedGivesByteIdenticalCheckpoints) {
  const auto toy = separable_toy(48, 9);
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {5};
  spec.rep_dim = 5;
  spec.dropout_p = 0.2;
  nn::TrainConfig cfg;
  cfg.seed = 1234;
  const auto a = nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, cfg);
  const auto b = nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, cfg);
  EXPECT_EQ(nn::checkpoint_to_bytes(a.checkpoint),
            nn::checkpoint_to_bytes(b.checkpoint));

  nn::TrainConfig other = cfg;
  other.seed = 4321;
  const auto c = nn::train_classifier(toy.x, toy.y, devset_from_toy(toy), spec, other);
  EXPECT_NE(nn::checkpoint_to_bytes(a.checkpoint),
            nn::checkpoint_to_bytes(c.checkpoint));
}

TEST(TrainClassifier, NonFiniteLossAborts) {
  const std::size_t n = 8;
  Matrix<float> x(n, 2, 1e30f);
  std::vector<int> y(n, 0);
  y[0] = 1;
  nn::DevSet dev;
  dev.x = x;
  dev.labels = y;
  for (std::size_t i = 0; i < n; ++i) {
    dev.event_ids.push_back("e");
    dev.line_nos.push_back(static_cast<long long>(i + 1));
  }
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {4};
  spec.rep_dim = 4;
  nn::TrainConfig cfg;
  cfg.learning_rate = 1e20;
  cfg.batch_size = 4;  // several steps per epoch so the loss itself blows up
  EXPECT_THROW(nn::train_classifier(x, y, dev, spec, cfg), NumericError);
}

TEST(TrainClassifier, TieKeepsEarlierEpoch) {
  // Constant features make every epoch's dev MAP identical; the selected
  // checkpoint must come from the first epoch.
  const std::size_t n = 24;
  Matrix<float> x(n, 2, 1.0f);
  std::vector<int> y(n, 0);
  y[0] = y[5] = 1;
  nn::DevSet dev;
  dev.x = x;
  dev.labels = y;
  for (std::size_t i = 0; i < n; ++i) {
    dev.event_ids.push_back("e");
    dev.line_nos.push_back(static_cast<long long>(i + 1));
  }
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {3};
  spec.rep_dim = 3;
  nn::TrainConfig cfg;
  cfg.seed = 5;
  const auto result = nn::train_classifier(x, y, dev, spec, cfg);
  EXPECT_EQ(result.checkpoint.epoch, 0);
}

}  // namespace
