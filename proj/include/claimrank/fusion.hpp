#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "claimrank/checkpoint.hpp"
#include "claimrank/features.hpp"
#include "claimrank/train.hpp"

namespace claimrank::fusion {

enum class FusionMode { early, late };

inline const char* mode_name(FusionMode m) {
  return m == FusionMode::early ? "early" : "late";
}

inline FusionMode parse_mode(std::string_view s) {
  if (s == "early") return FusionMode::early;
  if (s == "late") return FusionMode::late;
  throw ConfigError("unknown fusion mode '" + std::string(s) + "'");
}

struct FusionSpec {
  FusionMode mode = FusionMode::late;
  int projection_dim = 0;  // early mode, per-modality; 0 disables projection
  nn::MlpSpec head;
  nn::TrainConfig config;
};

// Concatenates two representation vectors, each optionally passed through a
// linear projection first.
inline std::vector<float> early_fuse(std::span<const float> text_rep,
                                     std::span<const float> audio_rep,
                                     const nn::Dense<float>* proj_text = nullptr,
                                     const nn::Dense<float>* proj_audio = nullptr) {
  auto apply = [](std::span<const float> v, const nn::Dense<float>* proj) {
    if (proj == nullptr) return std::vector<float>(v.begin(), v.end());
    if (proj->in_dim() != v.size())
      throw ShapeError("early_fuse: representation width " +
                       std::to_string(v.size()) + " != projection fan-in " +
                       std::to_string(proj->in_dim()));
    std::vector<float> out(proj->out_dim());
    for (std::size_t o = 0; o < proj->out_dim(); ++o) {
      double acc = static_cast<double>(proj->b[o]);
      for (std::size_t c = 0; c < v.size(); ++c)
        acc += static_cast<double>(proj->w(o, c)) * static_cast<double>(v[c]);
      out[o] = static_cast<float>(acc);
    }
    return out;
  };
  std::vector<float> fused = apply(text_rep, proj_text);
  const std::vector<float> audio_part = apply(audio_rep, proj_audio);
  fused.insert(fused.end(), audio_part.begin(), audio_part.end());
  return fused;
}

// Packs the two class-1 confidences, in fixed (text, audio) order.
inline std::array<double, 2> late_fuse(double conf_text, double conf_audio) {
  for (const double c : {conf_text, conf_audio})
    if (!(c >= 0.0 && c <= 1.0))
      throw ValidationError("late_fuse: confidence " + std::to_string(c) +
                            " outside [0,1]");
  return {conf_text, conf_audio};
}

template <typename T>
struct FusionGrads {
  nn::Dense<T> proj_text, proj_audio;
  bool has_projection = false;
  nn::MlpGrads<T> mlp;
};

template <typename T>
struct FusionCache {
  Matrix<T> input;
  nn::MlpCache<T> mlp;
};

template <typename T>
const Matrix<T>& cache_logits(const FusionCache<T>& cache) {
  return cache.mlp.logits;
}

// Trainable fusion head: optional per-modality linear projections (early
// mode) feeding a standard MLP classifier. Late mode takes the stacked
// confidences directly. Satisfies the same model interface as nn::Mlp, so
// the shared training loop drives it.
template <typename T>
class FusionHead {
 public:
  FusionHead() = default;

  static FusionHead init(FusionMode mode, int text_dim, int audio_dim,
                         int projection_dim, const nn::MlpSpec& head_spec,
                         std::uint64_t seed) {
    head_spec.validate();
    FusionHead h;
    h.mode_ = mode;
    h.text_dim_ = text_dim;
    h.audio_dim_ = audio_dim;
    h.projection_dim_ = projection_dim;
    if (mode == FusionMode::late) {
      if (projection_dim != 0)
        throw ConfigError("late fusion takes no projection");
      if (head_spec.input_dim != 2)
        throw ConfigError("late fusion head must have input_dim 2");
      h.text_dim_ = 1;
      h.audio_dim_ = 1;
    } else {
      if (text_dim <= 0 || audio_dim <= 0)
        throw ConfigError("early fusion requires representation dims");
      const int fused = projection_dim > 0 ? 2 * projection_dim
                                           : text_dim + audio_dim;
      if (head_spec.input_dim != fused)
        throw ConfigError("early fusion head input_dim " +
                          std::to_string(head_spec.input_dim) +
                          " != fused width " + std::to_string(fused));
      if (projection_dim > 0) {
        Rng rng(derive_seed(seed, "proj"));
        h.proj_text_ = init_projection(projection_dim, text_dim, rng);
        h.proj_audio_ = init_projection(projection_dim, audio_dim, rng);
      }
    }
    h.mlp_ = nn::Mlp<T>::init(head_spec, derive_seed(seed, "mlp"));
    return h;
  }

  FusionMode mode() const { return mode_; }
  int text_dim() const { return text_dim_; }
  int audio_dim() const { return audio_dim_; }
  int projection_dim() const { return projection_dim_; }
  bool has_projection() const { return proj_text_.has_value(); }
  const nn::Mlp<T>& mlp() const { return mlp_; }
  nn::Mlp<T>& mlp() { return mlp_; }
  const nn::Dense<T>* proj_text() const {
    return proj_text_ ? &*proj_text_ : nullptr;
  }
  const nn::Dense<T>* proj_audio() const {
    return proj_audio_ ? &*proj_audio_ : nullptr;
  }
  nn::Dense<T>& proj_text_mut() { return *proj_text_; }
  nn::Dense<T>& proj_audio_mut() { return *proj_audio_; }

  nn::ForwardResult<T> forward_eval(const Matrix<T>& x) const {
    return mlp_.forward_eval(fuse(x));
  }

  FusionCache<T> forward_cached(const Matrix<T>& x, Rng* rng) const {
    FusionCache<T> cache;
    cache.input = x;
    cache.mlp = mlp_.forward_cached(fuse(x), rng);
    return cache;
  }

  FusionGrads<T> backward(const FusionCache<T>& cache, const Matrix<T>& d_logits,
                          const Matrix<T>* d_rep_extra, bool include_head) const {
    FusionGrads<T> grads;
    grads.mlp = mlp_.zero_grads();
    Matrix<T> d_fused;
    {
      auto mlp_grads = mlp_.backward(cache.mlp, d_logits, d_rep_extra, include_head,
                                     &d_fused);
      grads.mlp = std::move(mlp_grads);
    }
    if (proj_text_) {
      grads.has_projection = true;
      grads.proj_text = nn::Dense<T>(proj_text_->out_dim(), proj_text_->in_dim());
      grads.proj_audio = nn::Dense<T>(proj_audio_->out_dim(), proj_audio_->in_dim());
      const auto p = static_cast<std::size_t>(projection_dim_);
      Matrix<T> d_ft(d_fused.rows, p), d_fa(d_fused.rows, p);
      for (std::size_t r = 0; r < d_fused.rows; ++r)
        for (std::size_t c = 0; c < p; ++c) {
          d_ft(r, c) = d_fused(r, c);
          d_fa(r, c) = d_fused(r, p + c);
        }
      const auto [xt, xa] = split_input(cache.input);
      nn::detail::affine_backward(xt, *proj_text_, d_ft, grads.proj_text);
      nn::detail::affine_backward(xa, *proj_audio_, d_fa, grads.proj_audio);
    }
    return grads;
  }

  std::vector<std::span<T>> tensor_views(bool include_head = true) {
    std::vector<std::span<T>> views;
    if (proj_text_) {
      views.push_back({proj_text_->w.data.data(), proj_text_->w.data.size()});
      views.push_back({proj_text_->b.data(), proj_text_->b.size()});
      views.push_back({proj_audio_->w.data.data(), proj_audio_->w.data.size()});
      views.push_back({proj_audio_->b.data(), proj_audio_->b.size()});
    }
    const auto mlp_views = mlp_.tensor_views(include_head);
    views.insert(views.end(), mlp_views.begin(), mlp_views.end());
    return views;
  }

  std::vector<std::span<const T>> grad_views(FusionGrads<T>& grads,
                                             bool include_head = true) const {
    std::vector<std::span<const T>> views;
    if (grads.has_projection) {
      views.push_back({grads.proj_text.w.data.data(), grads.proj_text.w.data.size()});
      views.push_back({grads.proj_text.b.data(), grads.proj_text.b.size()});
      views.push_back({grads.proj_audio.w.data.data(), grads.proj_audio.w.data.size()});
      views.push_back({grads.proj_audio.b.data(), grads.proj_audio.b.size()});
    }
    const auto mlp_views = mlp_.grad_views(grads.mlp, include_head);
    views.insert(views.end(), mlp_views.begin(), mlp_views.end());
    return views;
  }

  struct TensorInfo {
    std::string name;
    std::size_t rows = 0, cols = 0;
  };

  std::vector<TensorInfo> tensor_infos() const {
    std::vector<TensorInfo> infos;
    if (proj_text_) {
      infos.push_back({"proj_text.w", proj_text_->w.rows, proj_text_->w.cols});
      infos.push_back({"proj_text.b", proj_text_->b.size(), 1});
      infos.push_back({"proj_audio.w", proj_audio_->w.rows, proj_audio_->w.cols});
      infos.push_back({"proj_audio.b", proj_audio_->b.size(), 1});
    }
    for (const auto& info : mlp_.tensor_infos(true))
      infos.push_back({"mlp." + info.name, info.rows, info.cols});
    return infos;
  }

 private:
  static nn::Dense<T> init_projection(int out, int in, Rng& rng) {
    nn::Dense<T> layer(static_cast<std::size_t>(out), static_cast<std::size_t>(in));
    const double scale = std::sqrt(1.0 / static_cast<double>(in));
    for (auto& v : layer.w.data) v = static_cast<T>(rng.normal() * scale);
    return layer;
  }

  std::pair<Matrix<T>, Matrix<T>> split_input(const Matrix<T>& x) const {
    const auto dt = static_cast<std::size_t>(text_dim_);
    const auto da = static_cast<std::size_t>(audio_dim_);
    Matrix<T> xt(x.rows, dt), xa(x.rows, da);
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t c = 0; c < dt; ++c) xt(r, c) = x(r, c);
      for (std::size_t c = 0; c < da; ++c) xa(r, c) = x(r, dt + c);
    }
    return {std::move(xt), std::move(xa)};
  }

  Matrix<T> fuse(const Matrix<T>& x) const {
    const auto expected = static_cast<std::size_t>(
        mode_ == FusionMode::late ? 2 : text_dim_ + audio_dim_);
    if (x.cols != expected)
      throw ShapeError("fusion input width " + std::to_string(x.cols) + " != " +
                       std::to_string(expected));
    if (!proj_text_) return x;
    const auto [xt, xa] = split_input(x);
    const Matrix<T> pt = nn::detail::affine(xt, *proj_text_);
    const Matrix<T> pa = nn::detail::affine(xa, *proj_audio_);
    Matrix<T> fused(x.rows, pt.cols + pa.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t c = 0; c < pt.cols; ++c) fused(r, c) = pt(r, c);
      for (std::size_t c = 0; c < pa.cols; ++c) fused(r, pt.cols + c) = pa(r, c);
    }
    return fused;
  }

  FusionMode mode_ = FusionMode::late;
  int text_dim_ = 1;
  int audio_dim_ = 1;
  int projection_dim_ = 0;
  std::optional<nn::Dense<T>> proj_text_, proj_audio_;
  nn::Mlp<T> mlp_;
};

// Named hyper-parameter presets for the ensemble heads.
struct FusionPreset {
  std::vector<int> hidden;
  double dropout = 0.0;
  double learning_rate = 1e-3;
};

inline FusionPreset fusion_preset(const std::string& name) {
  if (name == "early-large") return {{256, 64}, 0.1, 0.001};
  if (name == "late-small") return {{6, 6}, 0.0, 0.001};
  if (name == "early-xlarge") return {{512, 256}, 0.4, 0.0001};
  throw ConfigError("unknown fusion preset '" + name +
                    "' (early-large|late-small|early-xlarge)");
}

// ---------------------------------------------------------------------------
// Batch builders over frozen base models.

// Early-fusion inputs: concatenated raw eval-mode representations; any
// projection is applied inside the head.
inline Matrix<float> build_early_inputs(const nn::Mlp<float>& text_model,
                                        const nn::Mlp<float>& audio_model,
                                        const std::vector<features::FeatureKey>& keys,
                                        const features::FeatureMatrix& text_feats,
                                        const features::FeatureMatrix& audio_feats) {
  Matrix<float> xt(keys.size(), text_feats.dim());
  Matrix<float> xa(keys.size(), audio_feats.dim());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t rt = text_feats.row_for(keys[i]);
    const std::size_t ra = audio_feats.row_for(keys[i]);
    for (std::size_t c = 0; c < text_feats.dim(); ++c)
      xt(i, c) = static_cast<float>(text_feats.values(rt, c));
    for (std::size_t c = 0; c < audio_feats.dim(); ++c)
      xa(i, c) = static_cast<float>(audio_feats.values(ra, c));
  }
  const auto ft = text_model.forward_eval(xt);
  const auto fa = audio_model.forward_eval(xa);
  Matrix<float> fused(keys.size(), ft.representation.cols + fa.representation.cols);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    for (std::size_t c = 0; c < ft.representation.cols; ++c)
      fused(r, c) = ft.representation(r, c);
    for (std::size_t c = 0; c < fa.representation.cols; ++c)
      fused(r, ft.representation.cols + c) = fa.representation(r, c);
  }
  return fused;
}

// Late-fusion inputs: per-row (text confidence, audio confidence).
inline Matrix<float> build_late_inputs(const nn::Mlp<float>& text_model,
                                       const nn::Mlp<float>& audio_model,
                                       const std::vector<features::FeatureKey>& keys,
                                       const features::FeatureMatrix& text_feats,
                                       const features::FeatureMatrix& audio_feats) {
  Matrix<float> xt(keys.size(), text_feats.dim());
  Matrix<float> xa(keys.size(), audio_feats.dim());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t rt = text_feats.row_for(keys[i]);
    const std::size_t ra = audio_feats.row_for(keys[i]);
    for (std::size_t c = 0; c < text_feats.dim(); ++c)
      xt(i, c) = static_cast<float>(text_feats.values(rt, c));
    for (std::size_t c = 0; c < audio_feats.dim(); ++c)
      xa(i, c) = static_cast<float>(audio_feats.values(ra, c));
  }
  const auto conf_t = nn::positive_class_probability(text_model.forward_eval(xt).logits);
  const auto conf_a = nn::positive_class_probability(audio_model.forward_eval(xa).logits);
  Matrix<float> fused(keys.size(), 2);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    const auto packed = late_fuse(conf_t[r], conf_a[r]);
    fused(r, 0) = static_cast<float>(packed[0]);
    fused(r, 1) = static_cast<float>(packed[1]);
  }
  return fused;
}

struct FusionResult {
  nn::Checkpoint checkpoint;
  FusionHead<float> best_head;
  nn::TrainOutcome<FusionHead<float>> outcome;
};

// Trains the fusion head on precomputed fused vectors from frozen base
// models; dev-MAP selection mirrors base training.
inline FusionResult train_fusion_head(const Matrix<float>& fused_train,
                                      const std::vector<int>& y,
                                      const nn::DevSet& dev, const FusionSpec& spec,
                                      int text_rep_dim, int audio_rep_dim) {
  auto head = FusionHead<float>::init(spec.mode, text_rep_dim, audio_rep_dim,
                                      spec.projection_dim, spec.head,
                                      derive_seed(spec.config.seed, "init"));
  auto outcome = train_loop(std::move(head), fused_train, y, dev, spec.config,
                            nn::LossKind::cross_entropy);

  FusionResult result;
  result.checkpoint.kind = "fusion";
  result.checkpoint.modality = "fused";
  result.checkpoint.loss = "ce";
  result.checkpoint.spec = spec.head;
  result.checkpoint.config = spec.config;
  result.checkpoint.epoch = outcome.best_epoch;
  result.checkpoint.dev_map = outcome.best_dev_map;
  result.checkpoint.seed = spec.config.seed;
  result.checkpoint.extra["mode"] = mode_name(spec.mode);
  result.checkpoint.extra["projection_dim"] = std::to_string(spec.projection_dim);
  result.checkpoint.extra["text_dim"] = std::to_string(outcome.best_model.text_dim());
  result.checkpoint.extra["audio_dim"] = std::to_string(outcome.best_model.audio_dim());

  auto& best = outcome.best_model;
  for (const auto& info : best.tensor_infos()) {
    nn::Checkpoint::TensorBlob blob;
    blob.name = info.name;
    blob.rows = info.rows;
    blob.cols = info.cols;
    result.checkpoint.tensors.push_back(std::move(blob));
  }
  auto views = best.tensor_views(true);
  for (std::size_t i = 0; i < views.size(); ++i)
    result.checkpoint.tensors[i].values.assign(views[i].begin(), views[i].end());

  result.best_head = best;
  result.outcome = std::move(outcome);
  return result;
}

inline FusionHead<float> fusion_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "fusion")
    throw ValidationError("checkpoint kind '" + ckpt.kind + "' is not a fusion head");
  const FusionMode mode = parse_mode(ckpt.extra.at("mode"));
  const int projection_dim = static_cast<int>(
      parse_int(ckpt.extra.at("projection_dim"), "fusion projection_dim"));
  const int text_dim =
      static_cast<int>(parse_int(ckpt.extra.at("text_dim"), "fusion text_dim"));
  const int audio_dim =
      static_cast<int>(parse_int(ckpt.extra.at("audio_dim"), "fusion audio_dim"));
  auto head = FusionHead<float>::init(mode, text_dim, audio_dim, projection_dim,
                                      ckpt.spec, /*seed=*/0);
  auto infos = head.tensor_infos();
  auto views = head.tensor_views(true);
  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& blob = ckpt.tensor(infos[i].name);
    if (blob.rows != infos[i].rows || blob.cols != infos[i].cols)
      throw ShapeError("fusion checkpoint: tensor '" + infos[i].name +
                       "' shape mismatch");
    std::copy(blob.values.begin(), blob.values.end(), views[i].begin());
  }
  return head;
}

// Per-utterance check-worthiness scores from the fusion head.
inline std::vector<eval::Prediction> predict_fused(
    const FusionHead<float>& head, const Matrix<float>& inputs,
    const std::vector<features::FeatureKey>& keys) {
  if (inputs.rows != keys.size())
    throw ShapeError("predict_fused: key/input count mismatch");
  const auto fwd = head.forward_eval(inputs);
  const auto scores = nn::positive_class_probability(fwd.logits);
  std::vector<eval::Prediction> preds(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    preds[i] = {keys[i].event_id, keys[i].line_no, scores[i]};
  return preds;
}

}  // namespace claimrank::fusion
