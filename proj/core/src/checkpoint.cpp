#include "dusev/checkpoint.hpp"

#include <fstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dusev/error.hpp"

namespace dusev {

namespace {

using nlohmann::json;

json tensor_to_json(const ParamTensor& t) {
  json j;
  j["shape"] = {t.value.rows(), t.value.cols()};
  j["data"] = t.value.data();
  return j;
}

json bn_to_json(const BatchNormState& s) {
  json j;
  j["running_mean"] = s.running_mean.data();
  j["running_var"] = s.running_var.data();
  return j;
}

std::vector<double> read_double_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw CheckpointParseError("checkpoint: " + what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw CheckpointParseError("checkpoint: non-numeric entry in " + what);
    out.push_back(v.get<double>());
  }
  return out;
}

void load_tensor(const json& tensors, const std::string& name, ParamTensor& t) {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw CheckpointParseError("checkpoint: missing tensor '" + name + "'");
  }
  const json& j = *it;
  if (!j.contains("shape") || !j.contains("data")) {
    throw CheckpointParseError("checkpoint: tensor '" + name + "' missing shape or data");
  }
  const auto& shape = j["shape"];
  if (!shape.is_array() || shape.size() != 2) {
    throw CheckpointParseError("checkpoint: tensor '" + name + "' has malformed shape");
  }
  const int rows = shape[0].get<int>();
  const int cols = shape[1].get<int>();
  if (rows != t.value.rows() || cols != t.value.cols()) {
    throw ShapeError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", expected " + t.value.shape_str() +
                     " for the stored config");
  }
  std::vector<double> data = read_double_array(j["data"], "tensor '" + name + "'");
  if (data.size() != t.value.data().size()) {
    throw ShapeError("checkpoint: tensor '" + name + "' carries " + std::to_string(data.size()) +
                     " values, expected " + std::to_string(t.value.data().size()));
  }
  t.value.data() = std::move(data);
  if (!t.value.all_finite()) {
    throw CheckpointParseError("checkpoint: tensor '" + name + "' contains non-finite values");
  }
}

void load_bn(const json& stats, const std::string& name, BatchNormState& s) {
  auto it = stats.find(name);
  if (it == stats.end()) {
    throw CheckpointParseError("checkpoint: missing bn_stats entry '" + name + "'");
  }
  const json& j = *it;
  if (!j.contains("running_mean") || !j.contains("running_var")) {
    throw CheckpointParseError("checkpoint: bn_stats '" + name + "' incomplete");
  }
  std::vector<double> mean = read_double_array(j["running_mean"], name + ".running_mean");
  std::vector<double> var = read_double_array(j["running_var"], name + ".running_var");
  if (mean.size() != s.running_mean.data().size() || var.size() != s.running_var.data().size()) {
    throw ShapeError("checkpoint: bn_stats '" + name + "' size does not match the stored config");
  }
  s.running_mean.data() = std::move(mean);
  s.running_var.data() = std::move(var);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  json j;
  j["version"] = kCheckpointVersion;
  json cfg;
  cfg["d_model"] = params.config.d_model;
  cfg["n_layers"] = params.config.n_layers;
  cfg["n_heads"] = params.config.n_heads;
  cfg["ffn_dim"] = params.config.ffn_dim;
  cfg["head_widths"] = {params.config.head_dim1, params.config.head_dim2};
  cfg["score_scale"] = params.config.score_scale;
  cfg["seed"] = params.config.seed;
  j["config"] = cfg;

  json tensors;
  params.for_each_param([&tensors](const std::string& name, const ParamTensor& t) {
    tensors[name] = tensor_to_json(t);
  });
  j["tensors"] = tensors;

  json bn;
  bn["head.bn1"] = bn_to_json(params.bn1);
  bn["head.bn2"] = bn_to_json(params.bn2);
  j["bn_stats"] = bn;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
  out << j.dump();
  out << "\n";
  if (!out) throw IoError("save_checkpoint: write failed for '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw CheckpointParseError("load_checkpoint: '" + path + "' is truncated or not valid JSON (" +
                               e.what() + ")");
  }
  if (!j.contains("version") || !j["version"].is_string()) {
    throw CheckpointParseError("load_checkpoint: missing version tag");
  }
  const std::string version = j["version"].get<std::string>();
  if (version != kCheckpointVersion) {
    throw CheckpointVersionError("load_checkpoint: unsupported version '" + version +
                                 "', expected '" + kCheckpointVersion + "'");
  }
  if (!j.contains("config") || !j.contains("tensors") || !j.contains("bn_stats")) {
    throw CheckpointParseError("load_checkpoint: missing config, tensors, or bn_stats");
  }

  ModelConfig cfg;
  try {
    const json& c = j["config"];
    cfg.d_model = c.at("d_model").get<int>();
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.ffn_dim = c.at("ffn_dim").get<int>();
    cfg.head_dim1 = c.at("head_widths").at(0).get<int>();
    cfg.head_dim2 = c.at("head_widths").at(1).get<int>();
    cfg.score_scale = c.at("score_scale").get<double>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CheckpointParseError(std::string("load_checkpoint: malformed config (") + e.what() + ")");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw CheckpointParseError(std::string("load_checkpoint: invalid stored config: ") + e.what());
  }

  ModelParams params = init_model(cfg);
  const json& tensors = j["tensors"];
  params.for_each_param(
      [&tensors](const std::string& name, ParamTensor& t) { load_tensor(tensors, name, t); });
  // reject stray tensors so a corrupted file cannot half-load
  std::size_t expected = 0;
  params.for_each_param([&expected](const std::string&, ParamTensor&) { ++expected; });
  if (tensors.size() != expected) {
    throw CheckpointParseError("load_checkpoint: unexpected tensor count " +
                               std::to_string(tensors.size()) + ", expected " +
                               std::to_string(expected));
  }
  load_bn(j["bn_stats"], "head.bn1", params.bn1);
  load_bn(j["bn_stats"], "head.bn2", params.bn2);
  return params;
}

}  // namespace dusev
