#pragma once

#include <string>
#include <vector>

#include "claimrank/checkpoint.hpp"
#include "claimrank/features.hpp"
#include "claimrank/train.hpp"

namespace claimrank::align {

// A fine-tuned text model frozen for student training: encoder, the
// classification head the student will reuse, and a fingerprint over all
// parameters that must stay bit-identical for the entire student run.
struct TeacherBundle {
  nn::Mlp<float> model;
  std::string fingerprint;

  int rep_dim() const { return model.spec().rep_dim; }
};

struct TeacherResult {
  TeacherBundle bundle;
  nn::Checkpoint checkpoint;
  nn::TrainOutcome<nn::Mlp<float>> outcome;
};

inline TeacherResult fit_teacher(const Matrix<float>& x, const std::vector<int>& y,
                                 const nn::DevSet& dev, const nn::MlpSpec& spec,
                                 const nn::TrainConfig& cfg) {
  auto trained = nn::train_classifier(x, y, dev, spec, cfg,
                                      nn::LossKind::cross_entropy, "text");
  TeacherResult result;
  result.bundle.model = trained.best_model;
  result.bundle.fingerprint = nn::mlp_fingerprint(trained.best_model);
  result.checkpoint = std::move(trained.checkpoint);
  result.checkpoint.kind = "teacher";
  result.checkpoint.extra["fingerprint"] = result.bundle.fingerprint;
  result.outcome = std::move(trained.outcome);
  return result;
}

inline TeacherBundle teacher_from_checkpoint(const nn::Checkpoint& ckpt) {
  TeacherBundle bundle;
  bundle.model = nn::mlp_from_checkpoint(ckpt);
  bundle.fingerprint = nn::mlp_fingerprint(bundle.model);
  const auto it = ckpt.extra.find("fingerprint");
  if (it != ckpt.extra.end() && it->second != bundle.fingerprint)
    throw ValidationError("teacher checkpoint fingerprint mismatch: stored " +
                          it->second + ", recomputed " + bundle.fingerprint);
  return bundle;
}

// Eval-mode teacher representations, one row per input row, same keys.
inline features::FeatureMatrix extract_teacher_reps(
    const TeacherBundle& teacher, const features::FeatureMatrix& text_feats) {
  const Matrix<float> x = text_feats.values.cast<float>();
  const auto fwd = teacher.model.forward_eval(x);
  features::FeatureMatrix reps;
  reps.keys = text_feats.keys;
  reps.values = fwd.representation.cast<double>();
  return reps;
}

// Dev split for aligned training: audio features, the teacher's cached
// representations for the same utterances, and the event structure for MAP.
struct AlignedDevSet {
  nn::DevSet dev;
  Matrix<float> teacher_reps;
};

struct AlignOutcome {
  nn::Checkpoint checkpoint;
  nn::Mlp<float> best_model;
  int best_epoch = 0;
  double best_dev_map = 0.0;
  std::vector<double> dev_map_history;
  std::vector<double> dev_align_history;   // alignment MSE after each epoch
  std::vector<double> train_loss_history;  // composite loss per epoch
};

// Eval-mode mean squared error between student representations and cached
// teacher representations.
inline double alignment_mse(const nn::Mlp<float>& student,
                            const Matrix<float>& teacher_reps,
                            const Matrix<float>& x) {
  const auto fwd = student.forward_eval(x);
  return nn::mse_loss(fwd.representation, teacher_reps);
}

// Trains an audio student against a frozen text teacher (composite loss):
// per batch the student representation r_s gives
//   align = MSE(r_s, teacher rep),  logits = teacher head(r_s),
//   loss  = lambda * align + (1 - lambda) * CE(logits, labels).
// Only student encoder parameters update; the head is the teacher's, copied
// once and never touched. Checkpoint selection is by dev MAP.
inline AlignOutcome train_aligned_student(
    const Matrix<float>& x, const std::vector<int>& y,
    const Matrix<float>& teacher_reps_train, const TeacherBundle& teacher,
    const AlignedDevSet& dev, const nn::MlpSpec& spec, const nn::TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (spec.rep_dim != teacher.rep_dim())
    throw ConfigError("aligned student rep_dim " + std::to_string(spec.rep_dim) +
                      " != teacher rep_dim " + std::to_string(teacher.rep_dim()));
  if (spec.n_classes != teacher.model.spec().n_classes)
    throw ConfigError("aligned student must keep the teacher's class count");
  if (x.rows != y.size() || x.rows != teacher_reps_train.rows)
    throw ShapeError("aligned training: row count mismatch");
  if (dev.dev.x.rows != dev.teacher_reps.rows)
    throw ShapeError("aligned training: dev row count mismatch");

  const std::string fingerprint_before = nn::mlp_fingerprint(teacher.model);
  if (fingerprint_before != teacher.fingerprint)
    throw ValidationError("teacher fingerprint drift before training");

  auto student = nn::Mlp<float>::init(spec, derive_seed(cfg.seed, "init"));
  student.head() = teacher.model.head();  // reuse the classification layer

  const std::size_t n = x.rows;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  const long total_steps = static_cast<long>(steps_per_epoch) * cfg.epochs;

  nn::AdamW<float> optimizer(student.tensor_views(false));
  AlignOutcome outcome;
  outcome.best_model = student;
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
      Matrix<float> rb = take_rows(teacher_reps_train, idx);
      std::vector<int> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y[idx[i]];

      auto cache = student.forward_cached(xb, &dropout_rng);
      const double align = nn::mse_loss(cache.representation, rb);
      const double ce = nn::ce_loss(cache.logits, yb);
      const double loss = nn::composite_loss(align, ce, cfg.lambda);
      if (!std::isfinite(loss))
        throw NumericError("aligned training: non-finite loss at epoch " +
                           std::to_string(epoch + 1));
      epoch_loss += loss * static_cast<double>(idx.size());

      Matrix<float> d_logits = nn::ce_grad(cache.logits, yb);
      for (auto& v : d_logits.data) v *= static_cast<float>(1.0 - cfg.lambda);
      Matrix<float> d_rep = nn::mse_grad(cache.representation, rb);
      for (auto& v : d_rep.data) v *= static_cast<float>(cfg.lambda);

      auto grads = student.backward(cache, d_logits, &d_rep, /*include_head=*/false);
      global_step += 1;
      const double lr_t = nn::lr_schedule(global_step, total_steps,
                                          cfg.learning_rate, cfg.warmup_proportion);
      optimizer.step(student.tensor_views(false), student.grad_views(grads, false),
                     lr_t, cfg.weight_decay);
    }
    outcome.train_loss_history.push_back(epoch_loss / static_cast<double>(n));

    const auto report = eval::map_from_rows(
        nn::detail::score_dev(student, dev.dev, nn::LossKind::cross_entropy));
    outcome.dev_map_history.push_back(report.map);
    outcome.dev_align_history.push_back(
        alignment_mse(student, dev.teacher_reps, dev.dev.x));
    if (report.map > best_map) {
      best_map = report.map;
      outcome.best_model = student;
      outcome.best_epoch = epoch;
    }
  }
  outcome.best_dev_map = best_map;

  const std::string fingerprint_after = nn::mlp_fingerprint(teacher.model);
  if (fingerprint_after != teacher.fingerprint)
    throw ValidationError("teacher fingerprint drift detected after training");

  outcome.checkpoint.kind = "aligned";
  outcome.checkpoint.modality = "audio";
  outcome.checkpoint.loss = "ce";
  outcome.checkpoint.spec = spec;
  outcome.checkpoint.config = cfg;
  outcome.checkpoint.epoch = outcome.best_epoch;
  outcome.checkpoint.dev_map = best_map;
  outcome.checkpoint.seed = cfg.seed;
  outcome.checkpoint.extra["teacher_fingerprint"] = teacher.fingerprint;
  outcome.checkpoint.tensors = nn::mlp_tensors(outcome.best_model);
  return outcome;
}

}  // namespace claimrank::align
