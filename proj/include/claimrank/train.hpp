#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "claimrank/checkpoint.hpp"
#include "claimrank/corpus.hpp"
#include "claimrank/eval.hpp"
#include "claimrank/features.hpp"
#include "claimrank/nn.hpp"

namespace claimrank::nn {

// Development split with the event structure MAP needs.
struct DevSet {
  Matrix<float> x;
  std::vector<int> labels;
  std::vector<std::string> event_ids;
  std::vector<long long> line_nos;
};

inline DevSet build_devset(const corpus::Corpus& gold, corpus::Split split,
                           const features::FeatureMatrix& feats) {
  const auto rows = corpus::split_utterances(gold, split);
  auto [x, labels] = features::gather_rows(feats, rows);
  DevSet dev;
  dev.x = std::move(x);
  dev.labels = std::move(labels);
  for (const auto& u : rows) {
    dev.event_ids.push_back(u.event_id);
    dev.line_nos.push_back(u.line_no);
  }
  return dev;
}

namespace detail {

template <typename Model>
std::vector<eval::ScoredRow> score_dev(const Model& model, const DevSet& dev,
                                       LossKind loss) {
  const auto fwd = model.forward_eval(dev.x);
  std::vector<eval::ScoredRow> rows(dev.labels.size());
  std::vector<double> scores;
  if (loss == LossKind::hinge) {
    scores.resize(fwd.logits.rows);
    for (std::size_t r = 0; r < fwd.logits.rows; ++r)
      scores[r] = static_cast<double>(fwd.logits(r, 0));
  } else {
    scores = positive_class_probability(fwd.logits);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw NumericError("non-finite dev score for " + dev.event_ids[i] + ":" +
                         std::to_string(dev.line_nos[i]));
    rows[i] = {dev.event_ids[i], dev.line_nos[i], scores[i], dev.labels[i]};
  }
  return rows;
}

}  // namespace detail

template <typename Model>
struct TrainOutcome {
  Model best_model;   // dev-MAP selected checkpoint (ties keep the earliest)
  Model final_model;  // state after the last epoch
  int best_epoch = 0;
  double best_dev_map = 0.0;
  std::vector<double> dev_map_history;
  std::vector<double> train_loss_history;  // mean per epoch
};

// Deterministic training driver shared by plain classifiers and fusion
// heads: seeded per-epoch shuffles, AdamW with the warmup/decay schedule,
// dev-MAP checkpoint selection (ties keep the earlier epoch).
template <typename Model>
TrainOutcome<Model> train_loop(Model model, const Matrix<float>& x,
                               const std::vector<int>& y, const DevSet& dev,
                               const TrainConfig& cfg,
                               LossKind loss = LossKind::cross_entropy) {
  cfg.validate();
  if (x.rows == 0) throw ValidationError("train: empty training set");
  if (x.rows != y.size()) throw ShapeError("train: feature/label count mismatch");
  if (loss != LossKind::cross_entropy && loss != LossKind::hinge)
    throw ConfigError("train: classifier loss must be cross_entropy or hinge");

  const std::size_t n = x.rows;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  const long total_steps = static_cast<long>(steps_per_epoch) * cfg.epochs;

  AdamW<float> optimizer(model.tensor_views(true));
  TrainOutcome<Model> outcome;
  outcome.best_model = model;
  double best_map = -1.0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  long global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle/" + std::to_string(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(derive_seed(cfg.seed, "dropout/" + std::to_string(epoch)));

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      Matrix<float> xb = take_rows(x, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y[idx[i]];

      auto cache = model.forward_cached(xb, &dropout_rng);
      const Matrix<float>& logits = cache_logits(cache);
      double batch_loss = 0.0;
      Matrix<float> d_logits;
      if (loss == LossKind::cross_entropy) {
        batch_loss = ce_loss(logits, yb);
        d_logits = ce_grad(logits, yb);
      } else {
        std::vector<float> scores(logits.rows);
        for (std::size_t r = 0; r < logits.rows; ++r) scores[r] = logits(r, 0);
        const auto pm1 = nn::detail::to_pm1(yb);
        batch_loss = hinge_loss(scores, pm1);
        const auto ds = hinge_grad(scores, pm1);
        d_logits = Matrix<float>(logits.rows, logits.cols, 0.0f);
        for (std::size_t r = 0; r < d_logits.rows; ++r) d_logits(r, 0) = ds[r];
      }
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", step " +
                           std::to_string(global_step + 1));
      epoch_loss += batch_loss * static_cast<double>(idx.size());

      auto grads = model.backward(cache, d_logits, nullptr, true);
      global_step += 1;
      const double lr_t = lr_schedule(global_step, total_steps, cfg.learning_rate,
                                      cfg.warmup_proportion);
      optimizer.step(model.tensor_views(true), model.grad_views(grads, true), lr_t,
                     cfg.weight_decay);
    }
    outcome.train_loss_history.push_back(epoch_loss / static_cast<double>(n));

    const auto report = eval::map_from_rows(detail::score_dev(model, dev, loss));
    outcome.dev_map_history.push_back(report.map);
    if (report.map > best_map) {
      best_map = report.map;
      outcome.best_model = model;
      outcome.best_epoch = epoch;
    }
  }
  outcome.best_dev_map = best_map;
  outcome.final_model = std::move(model);
  return outcome;
}

struct ClassifierResult {
  Checkpoint checkpoint;
  Mlp<float> best_model;
  TrainOutcome<Mlp<float>> outcome;
};

inline ClassifierResult train_classifier(const Matrix<float>& x,
                                         const std::vector<int>& y, const DevSet& dev,
                                         const MlpSpec& spec, const TrainConfig& cfg,
                                         LossKind loss = LossKind::cross_entropy,
                                         const std::string& modality = "text") {
  spec.validate();
  if (loss == LossKind::hinge && spec.n_classes != 1)
    throw ConfigError("hinge training requires a single-score head");
  if (loss == LossKind::cross_entropy && spec.n_classes != 2)
    throw ConfigError("cross-entropy training requires a two-class head");

  auto model = Mlp<float>::init(spec, derive_seed(cfg.seed, "init"));
  auto outcome = train_loop(std::move(model), x, y, dev, cfg, loss);

  ClassifierResult result;
  result.checkpoint.kind = "classifier";
  result.checkpoint.modality = modality;
  result.checkpoint.loss = loss == LossKind::hinge ? "hinge" : "ce";
  result.checkpoint.spec = spec;
  result.checkpoint.config = cfg;
  result.checkpoint.epoch = outcome.best_epoch;
  result.checkpoint.dev_map = outcome.best_dev_map;
  result.checkpoint.seed = cfg.seed;
  result.checkpoint.tensors = mlp_tensors(outcome.best_model);
  result.best_model = outcome.best_model;
  result.outcome = std::move(outcome);
  return result;
}

// Eval-mode predictions for a whole feature set, keyed like the features.
inline std::vector<eval::Prediction> predict_classifier(
    const Mlp<float>& model, const features::FeatureMatrix& feats,
    const std::string& loss = "ce") {
  Matrix<float> x = feats.values.cast<float>();
  const auto fwd = model.forward_eval(x);
  std::vector<double> scores;
  if (loss == "hinge") {
    scores.resize(fwd.logits.rows);
    for (std::size_t r = 0; r < fwd.logits.rows; ++r)
      scores[r] = static_cast<double>(fwd.logits(r, 0));
  } else {
    scores = positive_class_probability(fwd.logits);
  }
  std::vector<eval::Prediction> preds(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i)
    preds[i] = {feats.keys[i].event_id, feats.keys[i].line_no, scores[i]};
  return preds;
}

}  // namespace claimrank::nn
