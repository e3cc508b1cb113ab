#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "claimrank/error.hpp"
#include "claimrank/matrix.hpp"
#include "claimrank/rng.hpp"

namespace claimrank::nn {

// Encoder widths come from hidden_dims; the representation is the output of
// the last hidden layer, so rep_dim must equal hidden_dims.back(). An empty
// hidden_dims list selects the identity encoder (rep = input), which is how
// the linear hinge classifier is expressed; rep_dim must then equal
// input_dim. Every hidden layer is ReLU-activated with (inverted) dropout.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int rep_dim = 0;
  int n_classes = 2;
  double dropout_p = 0.0;

  void validate() const {
    if (input_dim <= 0) throw ConfigError("MlpSpec: input_dim must be positive");
    for (int h : hidden_dims)
      if (h <= 0) throw ConfigError("MlpSpec: hidden dims must be positive");
    if (rep_dim <= 0) throw ConfigError("MlpSpec: rep_dim must be positive");
    if (n_classes <= 0) throw ConfigError("MlpSpec: n_classes must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
      throw ConfigError("MlpSpec: dropout_p outside [0,1)");
    if (hidden_dims.empty()) {
      if (rep_dim != input_dim)
        throw ConfigError("MlpSpec: identity encoder requires rep_dim == input_dim");
    } else if (rep_dim != hidden_dims.back()) {
      throw ConfigError("MlpSpec: rep_dim must equal the last hidden width");
    }
  }

  bool identity_encoder() const { return hidden_dims.empty(); }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 15;
  double warmup_proportion = 0.1;
  double weight_decay = 0.02;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lambda = 0.75;  // composite-loss weight; alignment training only

  void validate() const {
    if (learning_rate <= 0.0) throw ConfigError("TrainConfig: learning_rate <= 0");
    if (epochs <= 0) throw ConfigError("TrainConfig: epochs <= 0");
    if (warmup_proportion < 0.0 || warmup_proportion > 1.0)
      throw ConfigError("TrainConfig: warmup_proportion outside [0,1]");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay < 0");
    if (batch_size <= 0) throw ConfigError("TrainConfig: batch_size <= 0");
    if (lambda < 0.0 || lambda > 1.0)
      throw ConfigError("TrainConfig: lambda outside [0,1]");
  }
};

enum class LossKind { cross_entropy, mse, hinge, composite };

template <typename T>
struct Dense {
  Matrix<T> w;        // out x in
  std::vector<T> b;   // out

  Dense() = default;
  Dense(std::size_t out, std::size_t in) : w(out, in), b(out, T(0)) {}

  std::size_t out_dim() const { return w.rows; }
  std::size_t in_dim() const { return w.cols; }
};

namespace detail {

// y = x w^T + b; accumulation in double for both float and double paths.
template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Dense<T>& layer) {
  if (x.cols != layer.in_dim())
    throw ShapeError("affine: input width " + std::to_string(x.cols) +
                     " != layer fan-in " + std::to_string(layer.in_dim()));
  Matrix<T> y(x.rows, layer.out_dim());
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      double acc = static_cast<double>(layer.b[o]);
      for (std::size_t c = 0; c < x.cols; ++c)
        acc += static_cast<double>(x(r, c)) * static_cast<double>(layer.w(o, c));
      y(r, o) = static_cast<T>(acc);
    }
  }
  return y;
}

// Accumulates dL/dW and dL/db; returns dL/dx.
template <typename T>
Matrix<T> affine_backward(const Matrix<T>& x, const Dense<T>& layer,
                          const Matrix<T>& dy, Dense<T>& grad) {
  for (std::size_t o = 0; o < layer.out_dim(); ++o) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < x.rows; ++r)
        acc += static_cast<double>(dy(r, o)) * static_cast<double>(x(r, c));
      grad.w(o, c) += static_cast<T>(acc);
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) acc += static_cast<double>(dy(r, o));
    grad.b[o] += static_cast<T>(acc);
  }
  Matrix<T> dx(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      double acc = 0.0;
      for (std::size_t o = 0; o < layer.out_dim(); ++o)
        acc += static_cast<double>(dy(r, o)) * static_cast<double>(layer.w(o, c));
      dx(r, c) = static_cast<T>(acc);
    }
  }
  return dx;
}

}  // namespace detail

template <typename T>
struct ForwardResult {
  Matrix<T> representation;
  Matrix<T> logits;
};

// Per-batch activations needed by backward. Masks hold the inverted-dropout
// scale factors (all ones in eval mode).
template <typename T>
struct MlpCache {
  Matrix<T> input;
  std::vector<Matrix<T>> pre_activations;
  std::vector<Matrix<T>> activations;  // post ReLU, post dropout
  std::vector<Matrix<T>> masks;
  Matrix<T> representation;
  Matrix<T> logits;
};

template <typename T>
struct MlpGrads {
  std::vector<Dense<T>> enc;
  Dense<T> head;
};

// Uniform cache access for the generic training loop (fusion caches nest an
// MlpCache and provide their own overload).
template <typename T>
const Matrix<T>& cache_logits(const MlpCache<T>& cache) {
  return cache.logits;
}

template <typename T>
class Mlp {
 public:
  Mlp() = default;

  static Mlp init(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Mlp m;
    m.spec_ = spec;
    Rng rng(seed);
    std::size_t fan_in = static_cast<std::size_t>(spec.input_dim);
    for (int width : spec.hidden_dims) {
      Dense<T> layer(static_cast<std::size_t>(width), fan_in);
      const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));  // He init
      for (auto& v : layer.w.data) v = static_cast<T>(rng.normal() * scale);
      m.enc_.push_back(std::move(layer));
      fan_in = static_cast<std::size_t>(width);
    }
    m.head_ = Dense<T>(static_cast<std::size_t>(spec.n_classes),
                       static_cast<std::size_t>(spec.rep_dim));
    const double head_scale = std::sqrt(1.0 / static_cast<double>(spec.rep_dim));
    for (auto& v : m.head_.w.data) v = static_cast<T>(rng.normal() * head_scale);
    return m;
  }

  const MlpSpec& spec() const { return spec_; }
  std::vector<Dense<T>>& encoder() { return enc_; }
  const std::vector<Dense<T>>& encoder() const { return enc_; }
  Dense<T>& head() { return head_; }
  const Dense<T>& head() const { return head_; }

  // Eval-mode forward: dropout disabled, deterministic.
  ForwardResult<T> forward_eval(const Matrix<T>& x) const {
    Matrix<T> a = x;
    for (const auto& layer : enc_) {
      a = detail::affine(a, layer);
      for (auto& v : a.data) v = v > T(0) ? v : T(0);
    }
    ForwardResult<T> out;
    out.logits = detail::affine(a, head_);
    out.representation = std::move(a);
    return out;
  }

  // Training-mode forward with cached activations. When rng is null the
  // dropout masks are all ones (used for gradient checking and alignment
  // evaluation where a cache is still needed).
  MlpCache<T> forward_cached(const Matrix<T>& x, Rng* rng) const {
    MlpCache<T> cache;
    cache.input = x;
    Matrix<T> a = x;
    const double p = spec_.dropout_p;
    for (const auto& layer : enc_) {
      Matrix<T> z = detail::affine(a, layer);
      cache.pre_activations.push_back(z);
      Matrix<T> act(z.rows, z.cols);
      for (std::size_t i = 0; i < z.data.size(); ++i)
        act.data[i] = z.data[i] > T(0) ? z.data[i] : T(0);
      Matrix<T> mask(z.rows, z.cols, T(1));
      if (rng != nullptr && p > 0.0) {
        const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
        for (auto& v : mask.data) v = rng->bernoulli(1.0 - p) ? keep_scale : T(0);
        for (std::size_t i = 0; i < act.data.size(); ++i) act.data[i] *= mask.data[i];
      }
      cache.masks.push_back(std::move(mask));
      cache.activations.push_back(act);
      a = std::move(act);
    }
    cache.representation = a;
    cache.logits = detail::affine(a, head_);
    return cache;
  }

  // Backward pass. d_logits drives the head (and the encoder through it);
  // d_rep_extra, when non-null, is an additional gradient applied directly
  // to the representation (the alignment term of the composite loss).
  // Head gradients are only accumulated when include_head is true; d_input,
  // when non-null, receives dL/dx (needed by fusion projections).
  MlpGrads<T> backward(const MlpCache<T>& cache, const Matrix<T>& d_logits,
                       const Matrix<T>* d_rep_extra, bool include_head = true,
                       Matrix<T>* d_input = nullptr) const {
    MlpGrads<T> grads = zero_grads();
    Dense<T> head_scratch(head_.out_dim(), head_.in_dim());
    Dense<T>& head_grad = include_head ? grads.head : head_scratch;
    Matrix<T> d_rep =
        detail::affine_backward(cache.representation, head_, d_logits, head_grad);
    if (d_rep_extra != nullptr) {
      if (!d_rep.same_shape(*d_rep_extra))
        throw ShapeError("backward: representation gradient shape mismatch");
      for (std::size_t i = 0; i < d_rep.data.size(); ++i)
        d_rep.data[i] += d_rep_extra->data[i];
    }
    Matrix<T> dx = backward_representation(cache, std::move(d_rep), grads);
    if (d_input != nullptr) *d_input = std::move(dx);
    return grads;
  }

  // Encoder-only backward from a representation gradient; returns dL/dx.
  Matrix<T> backward_representation(const MlpCache<T>& cache, Matrix<T> d_rep,
                                    MlpGrads<T>& grads) const {
    for (std::size_t l = enc_.size(); l-- > 0;) {
      // Through dropout, then ReLU.
      Matrix<T> dz = std::move(d_rep);
      for (std::size_t i = 0; i < dz.data.size(); ++i) {
        dz.data[i] *= cache.masks[l].data[i];
        if (cache.pre_activations[l].data[i] <= T(0)) dz.data[i] = T(0);
      }
      const Matrix<T>& layer_input = l == 0 ? cache.input : cache.activations[l - 1];
      d_rep = detail::affine_backward(layer_input, enc_[l], dz, grads.enc[l]);
    }
    return d_rep;
  }

  MlpGrads<T> zero_grads() const {
    MlpGrads<T> g;
    for (const auto& layer : enc_) g.enc.emplace_back(layer.out_dim(), layer.in_dim());
    g.head = Dense<T>(head_.out_dim(), head_.in_dim());
    return g;
  }

  struct TensorInfo {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
  };

  // Declared tensor order: enc0.w, enc0.b, ..., head.w, head.b. Checkpoint
  // blobs and optimizer state follow this order.
  std::vector<TensorInfo> tensor_infos(bool include_head = true) const {
    std::vector<TensorInfo> infos;
    for (std::size_t l = 0; l < enc_.size(); ++l) {
      const std::string prefix = "enc" + std::to_string(l);
      infos.push_back({prefix + ".w", enc_[l].w.rows, enc_[l].w.cols});
      infos.push_back({prefix + ".b", enc_[l].b.size(), 1});
    }
    if (include_head) {
      infos.push_back({"head.w", head_.w.rows, head_.w.cols});
      infos.push_back({"head.b", head_.b.size(), 1});
    }
    return infos;
  }

  std::vector<std::span<T>> tensor_views(bool include_head = true) {
    std::vector<std::span<T>> views;
    for (auto& layer : enc_) {
      views.push_back({layer.w.data.data(), layer.w.data.size()});
      views.push_back({layer.b.data(), layer.b.size()});
    }
    if (include_head) {
      views.push_back({head_.w.data.data(), head_.w.data.size()});
      views.push_back({head_.b.data(), head_.b.size()});
    }
    return views;
  }

  std::vector<std::span<const T>> grad_views(MlpGrads<T>& grads,
                                             bool include_head = true) const {
    std::vector<std::span<const T>> views;
    for (auto& layer : grads.enc) {
      views.push_back({layer.w.data.data(), layer.w.data.size()});
      views.push_back({layer.b.data(), layer.b.size()});
    }
    if (include_head) {
      views.push_back({grads.head.w.data.data(), grads.head.w.data.size()});
      views.push_back({grads.head.b.data(), grads.head.b.size()});
    }
    return views;
  }

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out;
    out.spec_ = spec_;
    for (const auto& layer : enc_) {
      Dense<U> converted(layer.out_dim(), layer.in_dim());
      converted.w = layer.w.template cast<U>();
      converted.b.assign(layer.b.begin(), layer.b.end());
      for (std::size_t i = 0; i < layer.b.size(); ++i)
        converted.b[i] = static_cast<U>(layer.b[i]);
      out.enc_.push_back(std::move(converted));
    }
    out.head_ = Dense<U>(head_.out_dim(), head_.in_dim());
    out.head_.w = head_.w.template cast<U>();
    for (std::size_t i = 0; i < head_.b.size(); ++i)
      out.head_.b[i] = static_cast<U>(head_.b[i]);
    return out;
  }

  template <typename U>
  friend class Mlp;

 private:
  MlpSpec spec_;
  std::vector<Dense<T>> enc_;
  Dense<T> head_;
};

// ---------------------------------------------------------------------------
// Losses. Values are computed in double regardless of the parameter type.

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
double ce_loss(const Matrix<T>& logits, const std::vector<int>& labels) {
  if (logits.rows != labels.size()) throw ShapeError("ce_loss: batch size mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols)
      throw ValidationError("ce_loss: label out of range");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols; ++c)
      max_logit = std::max(max_logit, static_cast<double>(logits(r, c)));
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c)
      sum_exp += std::exp(static_cast<double>(logits(r, c)) - max_logit);
    total += max_logit + std::log(sum_exp) -
             static_cast<double>(logits(r, static_cast<std::size_t>(y)));
  }
  return total / static_cast<double>(logits.rows);
}

// dL/dlogits = (softmax - onehot)/N.
template <typename T>
Matrix<T> ce_grad(const Matrix<T>& logits, const std::vector<int>& labels) {
  Matrix<T> grad(logits.rows, logits.cols);
  const double inv_n = 1.0 / static_cast<double>(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols; ++c)
      max_logit = std::max(max_logit, static_cast<double>(logits(r, c)));
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c)
      sum_exp += std::exp(static_cast<double>(logits(r, c)) - max_logit);
    for (std::size_t c = 0; c < logits.cols; ++c) {
      double p = std::exp(static_cast<double>(logits(r, c)) - max_logit) / sum_exp;
      if (static_cast<std::size_t>(labels[r]) == c) p -= 1.0;
      grad(r, c) = static_cast<T>(p * inv_n);
    }
  }
  return grad;
}

// Mean of squared differences over all elements.
template <typename T>
double mse_loss(const Matrix<T>& pred, const Matrix<T>& target) {
  if (!pred.same_shape(target)) throw ShapeError("mse_loss: shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) -
                     static_cast<double>(target.data[i]);
    total += d * d;
  }
  return total / static_cast<double>(pred.data.size());
}

template <typename T>
Matrix<T> mse_grad(const Matrix<T>& pred, const Matrix<T>& target) {
  if (!pred.same_shape(target)) throw ShapeError("mse_grad: shape mismatch");
  Matrix<T> grad(pred.rows, pred.cols);
  const double scale = 2.0 / static_cast<double>(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    grad.data[i] = static_cast<T>(scale * (static_cast<double>(pred.data[i]) -
                                           static_cast<double>(target.data[i])));
  return grad;
}

// Mean of max(0, 1 - y*s) with labels in {-1,+1}.
template <typename T>
double hinge_loss(const std::vector<T>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("hinge_loss: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != -1 && labels[i] != 1)
      throw ValidationError("hinge_loss: labels must be -1 or +1");
    total += std::max(0.0, 1.0 - labels[i] * static_cast<double>(scores[i]));
  }
  return total / static_cast<double>(scores.size());
}

template <typename T>
std::vector<T> hinge_grad(const std::vector<T>& scores, const std::vector<int>& labels) {
  std::vector<T> grad(scores.size(), T(0));
  const double inv_n = 1.0 / static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (1.0 - labels[i] * static_cast<double>(scores[i]) > 0.0)
      grad[i] = static_cast<T>(-labels[i] * inv_n);
  }
  return grad;
}

// lambda * align + (1 - lambda) * ce.
inline double composite_loss(double align, double ce, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("composite_loss: lambda outside [0,1]");
  return lambda * align + (1.0 - lambda) * ce;
}

// ---------------------------------------------------------------------------
// AdamW with decoupled weight decay:
//   p <- p - lr_t * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
// beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias-corrected moments. Moment
// state is kept in double on every path.
template <typename T>
class AdamW {
 public:
  explicit AdamW(const std::vector<std::span<T>>& params) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  void step(const std::vector<std::span<T>>& params,
            const std::vector<std::span<const T>>& grads, double lr_t,
            double weight_decay) {
    if (params.size() != m_.size() || grads.size() != m_.size())
      throw ShapeError("AdamW: parameter/state count mismatch");
    t_ += 1;
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k];
      auto g = grads[k];
      if (p.size() != m_[k].size() || g.size() != m_[k].size())
        throw ShapeError("AdamW: tensor size mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double grad = static_cast<double>(g[i]);
        m_[k][i] = beta1 * m_[k][i] + (1.0 - beta1) * grad;
        v_[k][i] = beta2 * v_[k][i] + (1.0 - beta2) * grad * grad;
        const double m_hat = m_[k][i] / bias1;
        const double v_hat = v_[k][i] / bias2;
        const double update = m_hat / (std::sqrt(v_hat) + eps) +
                              weight_decay * static_cast<double>(p[i]);
        p[i] = static_cast<T>(static_cast<double>(p[i]) - lr_t * update);
      }
    }
  }

  long steps_taken() const { return t_; }

  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double eps = 1e-8;

 private:
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Linear warmup to peak over steps 1..W with W = ceil(wp * total), then
// linear decay to zero over W..total. Steps are 1-based.
inline double lr_schedule(long step, long total_steps, double peak_lr,
                          double warmup_proportion) {
  if (step < 1 || step > total_steps)
    throw ConfigError("lr_schedule: step outside [1, total_steps]");
  if (warmup_proportion < 0.0 || warmup_proportion > 1.0)
    throw ConfigError("lr_schedule: warmup_proportion outside [0,1]");
  const long warmup_steps = static_cast<long>(
      std::ceil(warmup_proportion * static_cast<double>(total_steps) - 1e-9));
  if (warmup_steps > 0 && step <= warmup_steps)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps == warmup_steps) return peak_lr;
  return peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup_steps);
}

// ---------------------------------------------------------------------------
// Gradient verification against central finite differences on the double
// path. Dropout is disabled. The per-element error is
//   |analytic - fd| / max(1, |analytic| + |fd|),
// i.e. relative for large gradients and absolute for small ones.
struct GradcheckCase {
  LossKind loss = LossKind::cross_entropy;
  double lambda = 0.75;           // composite only
  std::vector<int> labels;        // {0,1}; ce/hinge/composite
  Matrix<double> target_rep;      // mse/composite alignment target
};

namespace detail {

inline std::vector<int> to_pm1(const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == 1 ? 1 : -1;
  return out;
}

inline double loss_value(const Mlp<double>& model, const GradcheckCase& c,
                         const Matrix<double>& x) {
  const auto fwd = model.forward_eval(x);
  switch (c.loss) {
    case LossKind::cross_entropy:
      return ce_loss(fwd.logits, c.labels);
    case LossKind::mse:
      return mse_loss(fwd.representation, c.target_rep);
    case LossKind::hinge: {
      std::vector<double> scores(fwd.logits.rows);
      for (std::size_t r = 0; r < fwd.logits.rows; ++r) scores[r] = fwd.logits(r, 0);
      return hinge_loss(scores, to_pm1(c.labels));
    }
    case LossKind::composite:
      return composite_loss(mse_loss(fwd.representation, c.target_rep),
                            ce_loss(fwd.logits, c.labels), c.lambda);
  }
  throw ConfigError("gradcheck: unknown loss");
}

inline MlpGrads<double> analytic_grads(const Mlp<double>& model, const GradcheckCase& c,
                                       const Matrix<double>& x) {
  const auto cache = model.forward_cached(x, nullptr);
  switch (c.loss) {
    case LossKind::cross_entropy:
      return model.backward(cache, ce_grad(cache.logits, c.labels), nullptr);
    case LossKind::mse: {
      auto grads = model.zero_grads();
      model.backward_representation(
          cache, mse_grad(cache.representation, c.target_rep), grads);
      return grads;
    }
    case LossKind::hinge: {
      std::vector<double> scores(cache.logits.rows);
      for (std::size_t r = 0; r < cache.logits.rows; ++r) scores[r] = cache.logits(r, 0);
      const auto dscores = hinge_grad(scores, to_pm1(c.labels));
      Matrix<double> d_logits(cache.logits.rows, cache.logits.cols, 0.0);
      for (std::size_t r = 0; r < d_logits.rows; ++r) d_logits(r, 0) = dscores[r];
      return model.backward(cache, d_logits, nullptr);
    }
    case LossKind::composite: {
      Matrix<double> d_logits = ce_grad(cache.logits, c.labels);
      for (auto& v : d_logits.data) v *= (1.0 - c.lambda);
      Matrix<double> d_rep = mse_grad(cache.representation, c.target_rep);
      for (auto& v : d_rep.data) v *= c.lambda;
      return model.backward(cache, d_logits, &d_rep);
    }
  }
  throw ConfigError("gradcheck: unknown loss");
}

}  // namespace detail

inline double gradcheck(const Mlp<double>& model, const GradcheckCase& c,
                        const Matrix<double>& x, double h = 1e-4) {
  Mlp<double> probe = model;
  auto analytic = detail::analytic_grads(probe, c, x);
  auto params = probe.tensor_views(true);
  auto grads = probe.grad_views(analytic, true);
  double max_err = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + h;
      const double plus = detail::loss_value(probe, c, x);
      params[k][i] = saved - h;
      const double minus = detail::loss_value(probe, c, x);
      params[k][i] = saved;
      const double fd = (plus - minus) / (2.0 * h);
      const double a = grads[k][i];
      const double err = std::abs(a - fd) / std::max(1.0, std::abs(a) + std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

// Class-1 softmax probability, the ranking score for two-class heads.
template <typename T>
std::vector<double> positive_class_probability(const Matrix<T>& logits) {
  if (logits.cols != 2)
    throw ShapeError("positive_class_probability: expected 2 logits per row");
  std::vector<double> out(logits.rows);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double d = static_cast<double>(logits(r, 0)) -
                     static_cast<double>(logits(r, 1));
    out[r] = 1.0 / (1.0 + std::exp(d));
  }
  return out;
}

}  // namespace claimrank::nn
