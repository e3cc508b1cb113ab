#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimrank/hash.hpp"
#include "claimrank/io.hpp"
#include "claimrank/nn.hpp"

namespace claimrank::nn {

// Checkpoint container and its on-disk format:
//   magic "CWCKPT1", u64 little-endian metadata length, JSON metadata,
//   then raw little-endian float32 blobs in declared tensor order.
struct Checkpoint {
  int format_version = 1;
  std::string kind = "classifier";  // classifier | teacher | aligned | fusion
  std::string modality = "text";    // text | audio | fused
  std::string loss = "ce";          // ce | hinge
  MlpSpec spec;
  TrainConfig config;
  int epoch = 0;
  double dev_map = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> extra;

  struct TensorBlob {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;
  };
  std::vector<TensorBlob> tensors;

  const TensorBlob& tensor(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t;
    throw ValidationError("checkpoint: missing tensor '" + name + "'");
  }
};

namespace detail {

inline void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline float read_f32le(const std::string& in, std::size_t off) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i)
    bits = (bits << 8) | static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]);
  return std::bit_cast<float>(bits);
}

inline void append_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t read_u64le(const std::string& in, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(in[off + static_cast<std::size_t>(i)]);
  return v;
}

inline nlohmann::json spec_to_json(const MlpSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_dims", spec.hidden_dims},
          {"rep_dim", spec.rep_dim},
          {"n_classes", spec.n_classes},
          {"dropout_p", spec.dropout_p}};
}

inline MlpSpec spec_from_json(const nlohmann::json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  spec.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  spec.rep_dim = j.at("rep_dim").get<int>();
  spec.n_classes = j.at("n_classes").get<int>();
  spec.dropout_p = j.at("dropout_p").get<double>();
  return spec;
}

inline nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"warmup_proportion", cfg.warmup_proportion},
          {"weight_decay", cfg.weight_decay},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"lambda", cfg.lambda}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.warmup_proportion = j.at("warmup_proportion").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.lambda = j.at("lambda").get<double>();
  return cfg;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[] = "CWCKPT1";

inline std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
  nlohmann::json meta;
  meta["format_version"] = ckpt.format_version;
  meta["kind"] = ckpt.kind;
  meta["modality"] = ckpt.modality;
  meta["loss"] = ckpt.loss;
  meta["spec"] = detail::spec_to_json(ckpt.spec);
  meta["config"] = detail::config_to_json(ckpt.config);
  meta["epoch"] = ckpt.epoch;
  meta["dev_map"] = ckpt.dev_map;
  meta["seed"] = ckpt.seed;
  meta["extra"] = ckpt.extra;
  nlohmann::json tensor_list = nlohmann::json::array();
  for (const auto& t : ckpt.tensors)
    tensor_list.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  meta["tensors"] = tensor_list;

  const std::string meta_str = meta.dump();
  std::string out = kCheckpointMagic;  // 7 bytes, no terminator
  detail::append_u64le(out, meta_str.size());
  out += meta_str;
  for (const auto& t : ckpt.tensors) {
    if (t.values.size() != t.rows * t.cols)
      throw ValidationError("checkpoint: tensor '" + t.name + "' size mismatch");
    for (float v : t.values) detail::append_f32le(out, v);
  }
  return out;
}

inline Checkpoint checkpoint_from_bytes(const std::string& bytes,
                                        const std::string& origin) {
  const std::size_t magic_len = sizeof(kCheckpointMagic) - 1;
  if (bytes.size() < magic_len + 8 || bytes.compare(0, magic_len, kCheckpointMagic) != 0)
    throw ParseError(origin + ": not a checkpoint file (bad magic)");
  const std::uint64_t meta_len = detail::read_u64le(bytes, magic_len);
  if (bytes.size() < magic_len + 8 + meta_len)
    throw ParseError(origin + ": truncated metadata block");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.substr(magic_len + 8, meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": bad metadata: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.format_version = meta.at("format_version").get<int>();
    if (ckpt.format_version != 1)
      throw ParseError(origin + ": unsupported format version " +
                       std::to_string(ckpt.format_version));
    ckpt.kind = meta.at("kind").get<std::string>();
    ckpt.modality = meta.at("modality").get<std::string>();
    ckpt.loss = meta.at("loss").get<std::string>();
    ckpt.spec = detail::spec_from_json(meta.at("spec"));
    ckpt.config = detail::config_from_json(meta.at("config"));
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.dev_map = meta.at("dev_map").get<double>();
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.extra = meta.at("extra").get<std::map<std::string, std::string>>();
    std::size_t off = magic_len + 8 + meta_len;
    for (const auto& tj : meta.at("tensors")) {
      Checkpoint::TensorBlob blob;
      blob.name = tj.at("name").get<std::string>();
      blob.rows = tj.at("rows").get<std::size_t>();
      blob.cols = tj.at("cols").get<std::size_t>();
      const std::size_t count = blob.rows * blob.cols;
      if (off + count * 4 > bytes.size())
        throw ParseError(origin + ": truncated tensor '" + blob.name + "'");
      blob.values.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        blob.values[i] = detail::read_f32le(bytes, off + i * 4);
      off += count * 4;
      ckpt.tensors.push_back(std::move(blob));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(origin + ": bad metadata: " + e.what());
  }
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_file(path, checkpoint_to_bytes(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_bytes(read_file(path), path);
}

// Fills the tensor blobs from an Mlp in declared layer order.
inline std::vector<Checkpoint::TensorBlob> mlp_tensors(const Mlp<float>& model) {
  std::vector<Checkpoint::TensorBlob> blobs;
  auto infos = model.tensor_infos(true);
  auto views = const_cast<Mlp<float>&>(model).tensor_views(true);
  for (std::size_t i = 0; i < infos.size(); ++i) {
    Checkpoint::TensorBlob blob;
    blob.name = infos[i].name;
    blob.rows = infos[i].rows;
    blob.cols = infos[i].cols;
    blob.values.assign(views[i].begin(), views[i].end());
    blobs.push_back(std::move(blob));
  }
  return blobs;
}

inline Mlp<float> mlp_from_checkpoint(const Checkpoint& ckpt) {
  Mlp<float> model = Mlp<float>::init(ckpt.spec, /*seed=*/0);
  auto infos = model.tensor_infos(true);
  auto views = model.tensor_views(true);
  if (infos.size() > ckpt.tensors.size())
    throw ValidationError("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& blob = ckpt.tensor(infos[i].name);
    if (blob.rows != infos[i].rows || blob.cols != infos[i].cols)
      throw ShapeError("checkpoint: tensor '" + infos[i].name + "' shape mismatch");
    std::copy(blob.values.begin(), blob.values.end(), views[i].begin());
  }
  return model;
}

// FNV-1a over the little-endian float32 bytes of all tensors in declared
// order; the teacher-frozenness fingerprint.
inline std::string mlp_fingerprint(const Mlp<float>& model) {
  std::string bytes;
  auto views = const_cast<Mlp<float>&>(model).tensor_views(true);
  for (const auto& view : views)
    for (float v : view) detail::append_f32le(bytes, v);
  return hex64(fnv1a64(bytes));
}

// Serialized head parameters (head.w then head.b), used to assert that an
// aligned student reuses the teacher's classification layer byte-for-byte.
inline std::string head_bytes(const Mlp<float>& model) {
  std::string bytes;
  for (float v : model.head().w.data) detail::append_f32le(bytes, v);
  for (float v : model.head().b) detail::append_f32le(bytes, v);
  return bytes;
}

}  // namespace claimrank::nn
