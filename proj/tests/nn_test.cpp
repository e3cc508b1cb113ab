#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "claimrank/checkpoint.hpp"
#include "claimrank/nn.hpp"

using namespace claimrank;

namespace {

Matrix<double> random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix<double> x(rows, cols);
  for (auto& v : x.data) v = rng.normal();
  return x;
}

std::vector<int> random_labels(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
  return y;
}

TEST(LrSchedule, WarmupApexAndDecay) {
  EXPECT_DOUBLE_EQ(nn::lr_schedule(10, 100, 0.001, 0.1), 0.001);   // step = W
  EXPECT_DOUBLE_EQ(nn::lr_schedule(5, 100, 0.001, 0.1), 0.0005);   // mid warmup
  EXPECT_NEAR(nn::lr_schedule(100, 100, 0.001, 0.1), 0.0, 1e-12);  // terminus
  EXPECT_DOUBLE_EQ(nn::lr_schedule(55, 100, 0.001, 0.1), 0.0005);  // mid decay
}

TEST(LrSchedule, PiecewiseLinearAndContinuous) {
  const long total = 200;
  double previous = 0.0;
  for (long step = 1; step <= total; ++step) {
    const double lr = nn::lr_schedule(step, total, 1.0, 0.1);
    if (step <= 20) EXPECT_GE(lr, previous);
    if (step > 20) EXPECT_LE(lr, previous);
    previous = lr;
  }
  EXPECT_THROW(nn::lr_schedule(0, 10, 1.0, 0.1), ConfigError);
  EXPECT_THROW(nn::lr_schedule(11, 10, 1.0, 0.1), ConfigError);
}

TEST(LrSchedule, DegenerateWarmupProportions) {
  // wp = 0: pure decay from peak; wp = 1: pure warmup ending at peak.
  EXPECT_DOUBLE_EQ(nn::lr_schedule(1, 10, 1.0, 0.0), 0.9);
  EXPECT_DOUBLE_EQ(nn::lr_schedule(10, 10, 1.0, 1.0), 1.0);
}

TEST(CeLoss, KnownValues) {
  Matrix<float> uniform(1, 2, 0.0f);
  EXPECT_NEAR(nn::ce_loss(uniform, {0}), std::log(2.0), 1e-9);
  EXPECT_NEAR(nn::ce_loss(uniform, {1}), std::log(2.0), 1e-9);

  Matrix<float> saturated(1, 2);
  saturated(0, 0) = 20.0f;
  saturated(0, 1) = -20.0f;
  EXPECT_LE(nn::ce_loss(saturated, {0}), 1e-8);

  Matrix<float> batch(2, 2, 0.0f);
  batch(1, 0) = 20.0f;
  batch(1, 1) = -20.0f;
  const double expected =
      (nn::ce_loss(uniform, {0}) + nn::ce_loss(saturated, {0})) / 2.0;
  EXPECT_NEAR(nn::ce_loss(batch, {0, 0}), expected, 1e-9);
}

TEST(MseLoss, KnownValues) {
  Matrix<double> a(1, 1, 1.0), b(1, 1, 3.0);
  EXPECT_DOUBLE_EQ(nn::mse_loss(a, a), 0.0);
  EXPECT_DOUBLE_EQ(nn::mse_loss(a, b), 4.0);

  Matrix<double> zeros(1, 2, 0.0), ones(1, 2, 1.0);
  EXPECT_DOUBLE_EQ(nn::mse_loss(zeros, ones), 1.0);

  Matrix<double> wrong(2, 1, 0.0);
  EXPECT_THROW(nn::mse_loss(zeros, wrong), ShapeError);
}

TEST(HingeLoss, KnownValues) {
  EXPECT_DOUBLE_EQ(nn::hinge_loss<double>({2.0}, {1}), 0.0);
  EXPECT_DOUBLE_EQ(nn::hinge_loss<double>({0.0}, {1}), 1.0);
  EXPECT_DOUBLE_EQ(nn::hinge_loss<double>({1.0}, {-1}), 2.0);
  EXPECT_THROW(nn::hinge_loss<double>({1.0}, {0}), ValidationError);
}

TEST(CompositeLoss, BoundariesAndPaperWeight) {
  EXPECT_DOUBLE_EQ(nn::composite_loss(3.25, 9.0, 1.0), 3.25);
  EXPECT_DOUBLE_EQ(nn::composite_loss(3.25, 9.0, 0.0), 9.0);
  EXPECT_DOUBLE_EQ(nn::composite_loss(2.0, 4.0, 0.75), 2.5);
  EXPECT_THROW(nn::composite_loss(1.0, 1.0, 1.5), ConfigError);
  EXPECT_THROW(nn::composite_loss(1.0, 1.0, -0.1), ConfigError);
}

TEST(CompositeLoss, LinearInBothArguments) {
  const double lambda = 0.3;
  EXPECT_DOUBLE_EQ(nn::composite_loss(2.0 + 5.0, 0.0, lambda) +
                       nn::composite_loss(0.0, 7.0, lambda),
                   nn::composite_loss(7.0, 7.0, lambda));
  // Monotone in lambda when align > ce.
  EXPECT_GT(nn::composite_loss(5.0, 1.0, 0.8), nn::composite_loss(5.0, 1.0, 0.2));
}

// Reference Adam (no weight decay), implemented independently.
struct ReferenceAdam {
  std::vector<double> m, v;
  long t = 0;
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    if (m.empty()) {
      m.assign(p.size(), 0.0);
      v.assign(p.size(), 0.0);
    }
    t += 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double m_hat = m[i] / (1.0 - std::pow(0.9, t));
      const double v_hat = v[i] / (1.0 - std::pow(0.999, t));
      p[i] -= lr * (m_hat / (std::sqrt(v_hat) + 1e-8));
    }
  }
};

TEST(AdamW, ZeroDecayEqualsAdam) {
  Rng rng(31);
  std::vector<double> p_ours(24), p_ref(24);
  for (std::size_t i = 0; i < p_ours.size(); ++i) p_ours[i] = p_ref[i] = rng.normal();

  nn::AdamW<double> ours({std::span<double>(p_ours)});
  ReferenceAdam reference;
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g(24);
    for (auto& v : g) v = rng.normal();
    ours.step({std::span<double>(p_ours)}, {std::span<const double>(g)}, 0.01, 0.0);
    reference.step(p_ref, g, 0.01);
    for (std::size_t i = 0; i < p_ours.size(); ++i)
      ASSERT_NEAR(p_ours[i], p_ref[i], 1e-15) << "step " << step << " elem " << i;
  }
}

TEST(AdamW, ZeroGradientIsPureDecoupledShrink) {
  std::vector<double> p = {2.0, -3.0};
  nn::AdamW<double> opt({std::span<double>(p)});
  const std::vector<double> g = {0.0, 0.0};
  const double lr = 0.1, wd = 0.02;
  opt.step({std::span<double>(p)}, {std::span<const double>(g)}, lr, wd);
  EXPECT_DOUBLE_EQ(p[0], 2.0 * (1.0 - lr * wd));
  EXPECT_DOUBLE_EQ(p[1], -3.0 * (1.0 - lr * wd));
}

TEST(AdamW, DeterministicTrajectories) {
  auto run = [] {
    Rng rng(77);
    std::vector<float> p(10);
    for (auto& v : p) v = static_cast<float>(rng.normal());
    nn::AdamW<float> opt({std::span<float>(p)});
    for (int step = 0; step < 20; ++step) {
      std::vector<float> g(10);
      for (auto& v : g) v = static_cast<float>(rng.normal());
      opt.step({std::span<float>(p)}, {std::span<const float>(g)}, 0.05, 0.02);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Mlp, IdentityHeadPassesInputThrough) {
  nn::MlpSpec spec;
  spec.input_dim = 2;
  spec.rep_dim = 2;  // identity encoder
  spec.n_classes = 2;
  auto model = nn::Mlp<float>::init(spec, 1);
  // Hand-set the head to the identity map.
  model.head().w(0, 0) = 1.0f;
  model.head().w(0, 1) = 0.0f;
  model.head().w(1, 0) = 0.0f;
  model.head().w(1, 1) = 1.0f;
  model.head().b = {0.0f, 0.0f};

  Matrix<float> x(1, 2);
  x(0, 0) = 0.3f;
  x(0, 1) = -1.7f;
  const auto out = model.forward_eval(x);
  EXPECT_FLOAT_EQ(out.logits(0, 0), 0.3f);
  EXPECT_FLOAT_EQ(out.logits(0, 1), -1.7f);
  EXPECT_FLOAT_EQ(out.representation(0, 0), 0.3f);
}

TEST(Mlp, EvalForwardIsBitwiseDeterministic) {
  nn::MlpSpec spec;
  spec.input_dim = 5;
  spec.hidden_dims = {7, 4};
  spec.rep_dim = 4;
  spec.dropout_p = 0.3;  // must not matter in eval mode
  const auto model = nn::Mlp<float>::init(spec, 9);
  const auto x = random_batch(6, 5, 2).cast<float>();
  const auto a = model.forward_eval(x);
  const auto b = model.forward_eval(x);
  EXPECT_EQ(a.logits.data, b.logits.data);
  EXPECT_EQ(a.representation.data, b.representation.data);
}

TEST(Mlp, ReluClampsAllNegativeInput) {
  nn::MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {3};
  spec.rep_dim = 3;
  auto model = nn::Mlp<float>::init(spec, 4);
  // Positive weights, zero bias: negative input stays negative pre-ReLU.
  for (auto& v : model.encoder()[0].w.data) v = std::abs(v) + 0.1f;
  Matrix<float> x(2, 3, -1.0f);
  const auto out = model.forward_eval(x);
  for (const auto v : out.representation.data) EXPECT_EQ(v, 0.0f);
}

TEST(Mlp, SpecValidation) {
  nn::MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {8};
  spec.rep_dim = 6;  // must equal last hidden width
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.rep_dim = 8;
  EXPECT_NO_THROW(spec.validate());
  spec.hidden_dims = {};
  spec.rep_dim = 3;  // identity encoder requires rep == input
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.rep_dim = 4;
  EXPECT_NO_THROW(spec.validate());
  spec.dropout_p = 1.0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Dropout, EvalIsIdentityTrainScalesSurvivors) {
  nn::MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {64};
  spec.rep_dim = 64;
  spec.dropout_p = 0.25;
  const auto model = nn::Mlp<float>::init(spec, 3);
  const auto x = random_batch(8, 4, 5).cast<float>();

  const auto eval_cache = model.forward_cached(x, nullptr);
  const auto eval_fwd = model.forward_eval(x);
  EXPECT_EQ(eval_cache.logits.data, eval_fwd.logits.data);

  Rng rng(11);
  const auto train_cache = model.forward_cached(x, &rng);
  const float keep_scale = 1.0f / 0.75f;
  std::size_t kept = 0, dropped = 0;
  for (const float m : train_cache.masks[0].data) {
    EXPECT_TRUE(m == 0.0f || m == keep_scale) << "mask value " << m;
    (m == 0.0f ? dropped : kept) += 1;
  }
  EXPECT_GT(kept, 0u);
  EXPECT_GT(dropped, 0u);
  // Inverted dropout keeps the eval expectation: survivors scale by 1/(1-p).
  const double drop_rate =
      static_cast<double>(dropped) / static_cast<double>(kept + dropped);
  EXPECT_NEAR(drop_rate, 0.25, 0.08);
}

TEST(Gradcheck, AllLayerLossCombinations) {
  const std::vector<std::vector<int>> architectures = {
      {}, {6}, {8, 5}, {8, 6, 4}};
  for (const auto& hidden : architectures) {
    for (const auto loss : {nn::LossKind::cross_entropy, nn::LossKind::mse,
                            nn::LossKind::hinge, nn::LossKind::composite}) {
      nn::MlpSpec spec;
      spec.input_dim = 5;
      spec.hidden_dims = hidden;
      spec.rep_dim = hidden.empty() ? 5 : hidden.back();
      spec.n_classes = loss == nn::LossKind::hinge ? 1 : 2;
      const auto model = nn::Mlp<double>::init(spec, 101);
      const auto x = random_batch(7, 5, 55);

      nn::GradcheckCase gc;
      gc.loss = loss;
      gc.labels = random_labels(7, 66);
      gc.target_rep = random_batch(7, static_cast<std::size_t>(spec.rep_dim), 77);

      if (loss == nn::LossKind::composite) {
        for (const double lambda : {0.0, 0.25, 0.75, 1.0}) {
          gc.lambda = lambda;
          const double err = nn::gradcheck(model, gc, x);
          EXPECT_LE(err, 1e-4) << "hidden=" << hidden.size()
                               << " composite lambda=" << lambda;
        }
      } else {
        const double err = nn::gradcheck(model, gc, x);
        EXPECT_LE(err, 1e-4) << "hidden=" << hidden.size() << " loss "
                             << static_cast<int>(loss);
      }
    }
  }
}

TEST(Gradcheck, CompositeGradientDecomposes) {
  nn::MlpSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {6, 5};
  spec.rep_dim = 5;
  const auto model = nn::Mlp<double>::init(spec, 13);
  const auto x = random_batch(6, 4, 21);
  const auto labels = random_labels(6, 22);
  const auto target = random_batch(6, 5, 23);

  const auto cache = model.forward_cached(x, nullptr);
  // CE-only gradients.
  auto ce_grads = model.backward(cache, nn::ce_grad(cache.logits, labels), nullptr);
  // Alignment-only gradients.
  auto mse_grads = model.zero_grads();
  model.backward_representation(cache, nn::mse_grad(cache.representation, target),
                                mse_grads);
  // Composite at lambda = 0.75.
  Matrix<double> d_logits = nn::ce_grad(cache.logits, labels);
  for (auto& v : d_logits.data) v *= 0.25;
  Matrix<double> d_rep = nn::mse_grad(cache.representation, target);
  for (auto& v : d_rep.data) v *= 0.75;
  auto composite_grads = model.backward(cache, d_logits, &d_rep);

  for (std::size_t l = 0; l < composite_grads.enc.size(); ++l) {
    for (std::size_t i = 0; i < composite_grads.enc[l].w.data.size(); ++i) {
      const double expected = 0.75 * mse_grads.enc[l].w.data[i] +
                              0.25 * ce_grads.enc[l].w.data[i];
      EXPECT_NEAR(composite_grads.enc[l].w.data[i], expected, 1e-6);
    }
  }
  // Head gradients carry only the CE component.
  for (std::size_t i = 0; i < composite_grads.head.w.data.size(); ++i)
    EXPECT_NEAR(composite_grads.head.w.data[i], 0.25 * ce_grads.head.w.data[i], 1e-12);
}

TEST(Gradcheck, MseClosedFormOnLinearModel) {
  // pred = X w + b through a single output; analytic dW must equal
  // 2/N * X^T (Xw + b - y).
  const std::size_t n = 10, d = 4;
  const auto x = random_batch(n, d, 31);
  nn::Dense<double> layer(1, d);
  Rng rng(32);
  for (auto& v : layer.w.data) v = rng.normal();
  layer.b[0] = rng.normal();
  Matrix<double> target = random_batch(n, 1, 33);

  const Matrix<double> pred = nn::detail::affine(x, layer);
  nn::Dense<double> grad(1, d);
  nn::detail::affine_backward(x, layer, nn::mse_grad(pred, target), grad);

  for (std::size_t j = 0; j < d; ++j) {
    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      expected += 2.0 / static_cast<double>(n) * x(i, j) *
                  (pred(i, 0) - target(i, 0));
    EXPECT_NEAR(grad.w(0, j), expected, 1e-8);
  }
}

TEST(Checkpoint, SaveLoadForwardBitwiseIdentical) {
  nn::MlpSpec spec;
  spec.input_dim = 6;
  spec.hidden_dims = {9, 5};
  spec.rep_dim = 5;
  const auto model = nn::Mlp<float>::init(spec, 42);

  nn::Checkpoint ckpt;
  ckpt.spec = spec;
  ckpt.epoch = 3;
  ckpt.dev_map = 0.5;
  ckpt.seed = 42;
  ckpt.tensors = nn::mlp_tensors(model);

  const auto path =
      (std::filesystem::temp_directory_path() / "claimrank_ckpt.bin").string();
  nn::save_checkpoint(ckpt, path);
  const auto loaded = nn::load_checkpoint(path);
  EXPECT_EQ(loaded.epoch, 3);
  EXPECT_EQ(loaded.seed, 42u);
  const auto restored = nn::mlp_from_checkpoint(loaded);

  const auto x = random_batch(4, 6, 1).cast<float>();
  const auto a = model.forward_eval(x);
  const auto b = restored.forward_eval(x);
  EXPECT_EQ(a.logits.data, b.logits.data);
  // Byte-level round trip too.
  EXPECT_EQ(nn::checkpoint_to_bytes(ckpt), nn::checkpoint_to_bytes(loaded));
}

TEST(Checkpoint, BadMagicRejected) {
  const auto path =
      (std::filesystem::temp_directory_path() / "claimrank_bad.bin").string();
  write_file(path, "NOTACKPT####");
  EXPECT_THROW(nn::load_checkpoint(path), ParseError);
}

TEST(Checkpoint, FingerprintTracksParameters) {
  nn::MlpSpec spec;
  spec.input_dim = 3;
  spec.hidden_dims = {4};
  spec.rep_dim = 4;
  auto model = nn::Mlp<float>::init(spec, 8);
  const auto fp1 = nn::mlp_fingerprint(model);
  EXPECT_EQ(fp1, nn::mlp_fingerprint(model));
  model.head().w(0, 0) += 0.001f;
  EXPECT_NE(fp1, nn::mlp_fingerprint(model));
}

}  // namespace
