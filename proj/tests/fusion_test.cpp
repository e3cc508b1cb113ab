#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "claimrank/align.hpp"
#include "claimrank/fixture.hpp"
#include "claimrank/fusion.hpp"
#include "support/experiments.hpp"

using namespace claimrank;

namespace {

TEST(EarlyFuse, ConcatenationPreservesOrder) {
  const std::vector<float> text = {1, 2, 3, 4};
  const std::vector<float> audio = {5, 6, 7};
  const auto fused = fusion::early_fuse(text, audio);
  EXPECT_EQ(fused, (std::vector<float>{1, 2, 3, 4, 5, 6, 7}));
}

TEST(EarlyFuse, ProjectionReducesDimension) {
  // A 768-wide representation squeezed through a 256-projection contributes
  // 256 values.
  nn::Dense<float> proj(256, 768);
  Rng rng(3);
  for (auto& v : proj.w.data) v = static_cast<float>(rng.normal(0.0, 0.01));
  std::vector<float> audio(768, 0.5f);
  std::vector<float> text = {1.0f, 2.0f};
  const auto fused = fusion::early_fuse(text, audio, nullptr, &proj);
  EXPECT_EQ(fused.size(), 2u + 256u);

  std::vector<float> wrong(700, 0.1f);
  EXPECT_THROW(fusion::early_fuse(text, wrong, nullptr, &proj), ShapeError);
}

TEST(EarlyFuse, ZeroInZeroOut) {
  const std::vector<float> zt(4, 0.0f), za(3, 0.0f);
  for (float v : fusion::early_fuse(zt, za)) EXPECT_EQ(v, 0.0f);
}

TEST(LateFuse, PacksAndValidates) {
  const auto packed = fusion::late_fuse(0.9, 0.1);
  EXPECT_DOUBLE_EQ(packed[0], 0.9);
  EXPECT_DOUBLE_EQ(packed[1], 0.1);
  const auto symmetric = fusion::late_fuse(0.5, 0.5);
  EXPECT_DOUBLE_EQ(symmetric[0], 0.5);
  EXPECT_THROW(fusion::late_fuse(1.2, 0.3), ValidationError);
  EXPECT_THROW(fusion::late_fuse(0.3, -0.1), ValidationError);
}

TEST(FusionPresets, NamedHyperparameters) {
  const auto early_large = fusion::fusion_preset("early-large");
  EXPECT_EQ(early_large.hidden, (std::vector<int>{256, 64}));
  EXPECT_DOUBLE_EQ(early_large.dropout, 0.1);
  EXPECT_DOUBLE_EQ(early_large.learning_rate, 0.001);

  const auto late_small = fusion::fusion_preset("late-small");
  EXPECT_EQ(late_small.hidden, (std::vector<int>{6, 6}));
  EXPECT_DOUBLE_EQ(late_small.dropout, 0.0);
  EXPECT_DOUBLE_EQ(late_small.learning_rate, 0.001);

  const auto early_xlarge = fusion::fusion_preset("early-xlarge");
  EXPECT_EQ(early_xlarge.hidden, (std::vector<int>{512, 256}));
  EXPECT_DOUBLE_EQ(early_xlarge.dropout, 0.4);
  EXPECT_DOUBLE_EQ(early_xlarge.learning_rate, 0.0001);

  EXPECT_THROW(fusion::fusion_preset("早期"), ConfigError);
}

// Shared small-scale complementary setup with trained base models.
struct FusedSetup {
  fixture::ComplementaryFixture fx;
  nn::ClassifierResult text_model, audio_model;
  std::vector<features::FeatureKey> train_keys, dev_keys, test_keys;
  std::vector<int> y_train;
};

std::vector<features::FeatureKey> keys_of(const corpus::Corpus& c, corpus::Split s) {
  std::vector<features::FeatureKey> keys;
  for (const auto& u : corpus::split_utterances(c, s))
    keys.push_back({u.event_id, u.line_no});
  return keys;
}

FusedSetup make_fused_setup(std::uint64_t seed) {
  FusedSetup s;
  fixture::ComplementarySpec cspec;
  cspec.train_events = 4;
  cspec.dev_events = 2;
  cspec.test_events = 2;
  cspec.sentences_per_event = 60;
  cspec.positive_rate = 0.2;
  cspec.seed = seed;
  s.fx = fixture::make_complementary_fixture(cspec);

  const auto train_rows = corpus::split_utterances(s.fx.corpus, corpus::Split::train);
  auto [text_x, y1] = features::gather_rows(s.fx.text_features, train_rows);
  auto [audio_x, y2] = features::gather_rows(s.fx.audio_features, train_rows);
  s.y_train = y1;

  nn::MlpSpec spec;
  spec.input_dim = static_cast<int>(s.fx.text_features.dim());
  spec.hidden_dims = {16};
  spec.rep_dim = 16;
  nn::TrainConfig cfg;
  cfg.seed = seed;
  cfg.learning_rate = 0.005;
  s.text_model = nn::train_classifier(
      text_x, y1, nn::build_devset(s.fx.corpus, corpus::Split::dev, s.fx.text_features),
      spec, cfg, nn::LossKind::cross_entropy, "text");

  nn::MlpSpec audio_spec = spec;
  audio_spec.input_dim = static_cast<int>(s.fx.audio_features.dim());
  s.audio_model = nn::train_classifier(
      audio_x, y2,
      nn::build_devset(s.fx.corpus, corpus::Split::dev, s.fx.audio_features),
      audio_spec, cfg, nn::LossKind::cross_entropy, "audio");

  s.train_keys = keys_of(s.fx.corpus, corpus::Split::train);
  s.dev_keys = keys_of(s.fx.corpus, corpus::Split::dev);
  s.test_keys = keys_of(s.fx.corpus, corpus::Split::test);
  return s;
}

double map_of_predictions(const std::vector<eval::Prediction>& preds,
                          const corpus::Corpus& gold, corpus::Split split) {
  return eval::map_over_events(preds, gold, split).map;
}

nn::DevSet fused_devset(const FusedSetup& s, const Matrix<float>& dev_inputs) {
  nn::DevSet dev;
  dev.x = dev_inputs;
  for (const auto& key : s.dev_keys) {
    const auto* u = s.fx.corpus.find_utterance(key.event_id, key.line_no);
    dev.labels.push_back(u->label);
    dev.event_ids.push_back(key.event_id);
    dev.line_nos.push_back(key.line_no);
  }
  return dev;
}

TEST(TrainFusionHead, BothModesBeatSingleModalities) {
  // Directional claim on the complementary-modality fixture: each modality
  // resolves only its half, so a trained fusion head must match or beat the
  // better single modality.
  const auto r = experiments::run_complementary_experiment(7);
  const double best_single = std::max(r.text_test_map, r.audio_test_map);
  EXPECT_GE(r.early_test_map, best_single - 0.01)
      << "early " << r.early_test_map << " vs text " << r.text_test_map
      << " / audio " << r.audio_test_map;
  EXPECT_GE(r.late_test_map, best_single - 0.01)
      << "late " << r.late_test_map << " vs text " << r.text_test_map << " / audio "
      << r.audio_test_map;
}

TEST(TrainFusionHead, BaseModelsUntouched) {
  const auto s = make_fused_setup(73);
  const auto text_fp = nn::mlp_fingerprint(s.text_model.best_model);
  const auto audio_fp = nn::mlp_fingerprint(s.audio_model.best_model);

  fusion::FusionSpec fspec;
  fspec.mode = fusion::FusionMode::late;
  fspec.head.input_dim = 2;
  fspec.head.hidden_dims = {6, 6};
  fspec.head.rep_dim = 6;
  fspec.config.seed = 3;
  const auto train_in = fusion::build_late_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.train_keys,
      s.fx.text_features, s.fx.audio_features);
  const auto dev_in = fusion::build_late_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.dev_keys,
      s.fx.text_features, s.fx.audio_features);
  fusion::train_fusion_head(train_in, s.y_train, fused_devset(s, dev_in), fspec, 16,
                            16);
  EXPECT_EQ(nn::mlp_fingerprint(s.text_model.best_model), text_fp);
  EXPECT_EQ(nn::mlp_fingerprint(s.audio_model.best_model), audio_fp);
}

TEST(FusionHead, IdentityLateHeadReproducesTextRanking) {
  const auto s = make_fused_setup(79);
  // Hand-set head passing through conf_text alone: logit1 = conf_text.
  nn::MlpSpec head_spec;
  head_spec.input_dim = 2;
  head_spec.rep_dim = 2;  // identity encoder
  head_spec.n_classes = 2;
  auto head = fusion::FusionHead<float>::init(fusion::FusionMode::late, 1, 1, 0,
                                              head_spec, 1);
  auto& mlp = head.mlp();
  mlp.head().w(0, 0) = 0.0f;
  mlp.head().w(0, 1) = 0.0f;
  mlp.head().w(1, 0) = 1.0f;
  mlp.head().w(1, 1) = 0.0f;
  mlp.head().b = {0.0f, 0.0f};

  const auto test_in = fusion::build_late_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.test_keys,
      s.fx.text_features, s.fx.audio_features);
  const auto fused_preds = fusion::predict_fused(head, test_in, s.test_keys);

  auto text_preds = nn::predict_classifier(s.text_model.best_model, s.fx.text_features);
  std::map<std::pair<std::string, long long>, double> text_scores;
  for (const auto& p : text_preds) text_scores[{p.event_id, p.line_no}] = p.score;

  // Sigmoid of conf_text is monotone in conf_text, so per-event rankings
  // must coincide.
  std::map<std::string, std::vector<eval::Prediction>> by_event_fused, by_event_text;
  for (const auto& p : fused_preds) {
    by_event_fused[p.event_id].push_back(p);
    by_event_text[p.event_id].push_back(
        {p.event_id, p.line_no, text_scores.at({p.event_id, p.line_no})});
  }
  for (auto& [event_id, fused_rows] : by_event_fused) {
    const auto fused_order = eval::rank_event(fused_rows);
    const auto text_order = eval::rank_event(by_event_text[event_id]);
    EXPECT_EQ(fused_order, text_order) << "event " << event_id;
  }
}

TEST(FusionHead, EarlyFusionOutputDimInvariant) {
  for (int proj : {0, 5}) {
    nn::MlpSpec head_spec;
    head_spec.input_dim = proj > 0 ? 2 * proj : 7;
    head_spec.hidden_dims = {4};
    head_spec.rep_dim = 4;
    auto head = fusion::FusionHead<float>::init(fusion::FusionMode::early, 3, 4,
                                                proj, head_spec, 2);
    Matrix<float> x(2, 7, 0.5f);
    EXPECT_NO_THROW(head.forward_eval(x));
    Matrix<float> bad(2, 9, 0.5f);
    EXPECT_THROW(head.forward_eval(bad), ShapeError);
  }
  // Mismatched head input is rejected at construction.
  nn::MlpSpec wrong;
  wrong.input_dim = 11;
  wrong.hidden_dims = {4};
  wrong.rep_dim = 4;
  EXPECT_THROW(fusion::FusionHead<float>::init(fusion::FusionMode::early, 3, 4, 5,
                                               wrong, 2),
               ConfigError);
}

TEST(FusionHead, CheckpointRoundTrip) {
  const auto s = make_fused_setup(83);
  fusion::FusionSpec fspec;
  fspec.mode = fusion::FusionMode::early;
  fspec.projection_dim = 6;
  fspec.head.input_dim = 12;
  fspec.head.hidden_dims = {8};
  fspec.head.rep_dim = 8;
  fspec.config.seed = 9;
  const auto train_in = fusion::build_early_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.train_keys,
      s.fx.text_features, s.fx.audio_features);
  const auto dev_in = fusion::build_early_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.dev_keys,
      s.fx.text_features, s.fx.audio_features);
  const auto result = fusion::train_fusion_head(train_in, s.y_train,
                                                fused_devset(s, dev_in), fspec, 16, 16);

  const auto path =
      (std::filesystem::temp_directory_path() / "claimrank_fusion.ckpt").string();
  nn::save_checkpoint(result.checkpoint, path);
  const auto restored = fusion::fusion_from_checkpoint(nn::load_checkpoint(path));

  const auto test_in = fusion::build_early_inputs(
      s.text_model.best_model, s.audio_model.best_model, s.test_keys,
      s.fx.text_features, s.fx.audio_features);
  const auto a = fusion::predict_fused(result.best_head, test_in, s.test_keys);
  const auto b = fusion::predict_fused(restored, test_in, s.test_keys);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_DOUBLE_EQ(a[i].score, b[i].score);
}

// Finite-difference verification of the fusion-specific backward path
// (projections + concatenation), on the double path.
TEST(FusionHead, ProjectionGradientsMatchFiniteDifferences) {
  nn::MlpSpec head_spec;
  head_spec.input_dim = 8;  // 2 * projection_dim
  head_spec.hidden_dims = {5};
  head_spec.rep_dim = 5;
  auto head = fusion::FusionHead<double>::init(fusion::FusionMode::early, 4, 6, 4,
                                               head_spec, 21);
  Rng rng(33);
  Matrix<double> x(6, 10);
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> labels(6);
  for (auto& v : labels) v = rng.bernoulli(0.5) ? 1 : 0;

  const auto cache = head.forward_cached(x, nullptr);
  auto grads = head.backward(cache, nn::ce_grad(cache.mlp.logits, labels), nullptr,
                             true);
  auto params = head.tensor_views(true);
  auto grad_views = head.grad_views(grads, true);

  const double h = 1e-5;
  double max_err = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + h;
      const double plus = nn::ce_loss(head.forward_eval(x).logits, labels);
      params[k][i] = saved - h;
      const double minus = nn::ce_loss(head.forward_eval(x).logits, labels);
      params[k][i] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double err = std::abs(grad_views[k][i] - fd) /
                         std::max(1.0, std::abs(grad_views[k][i]) + std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  EXPECT_LE(max_err, 1e-5);
}

}  // namespace
