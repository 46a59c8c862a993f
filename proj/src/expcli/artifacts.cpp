// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/expcli/artifacts.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "maeslab/errors.hpp"
#include "maeslab/expcli/config.hpp"

namespace maeslab::exp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad field '" + key + "': " + e.what());
  }
}

void require_format(const json& j, const char* kind, const std::string& where) {
  if (field<std::string>(j, "format", where) != kCheckpointFormat)
    throw FormatError(where + ": unsupported format " + j.at("format").dump());
  if (field<std::string>(j, "kind", where) != kind)
    throw FormatError(where + ": expected kind '" + kind + "', found " + j.at("kind").dump());
}

}  // namespace

json to_json(const Provenance& p) {
  return json{{"config_hash", p.config_hash}, {"delta", p.delta}, {"seed", p.seed}};
}

std::string provenance_comment(const Provenance& p) {
  return "# config_hash=" + p.config_hash + " delta=" + json(p.delta).dump() + " seed=" + std::to_string(p.seed);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(1) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  const auto text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void require_within(const fs::path& root, const fs::path& path) {
  const auto base = fs::weakly_canonical(fs::absolute(root));
  const auto target = fs::weakly_canonical(fs::absolute(path));
  auto b = base.begin();
  auto t = target.begin();
  for (; b != base.end(); ++b, ++t) {
    if (t == target.end() || *b != *t)
      throw ConfigError("artifact path " + path.string() + " is outside the output directory " + root.string());
  }
}

json tensors_to_json(const diff::ParamSet& params, const std::string& prefix) {
  json out = json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = params.tensor(i);
    out.push_back(json{{"name", prefix + params.name(i)},
                       {"shape", t.shape()},
                       {"values", std::vector<double>(t.values().begin(), t.values().end())}});
  }
  return out;
}

void load_tensors(diff::ParamSet& params, const json& tensors, const std::string& prefix) {
  if (!tensors.is_array()) throw FormatError("checkpoint: 'tensors' must be an array");
  std::set<std::string> loaded;
  for (const auto& entry : tensors) {
    const auto name = field<std::string>(entry, "name", "checkpoint tensor");
    if (name.rfind(prefix, 0) != 0) continue;
    const auto local = name.substr(prefix.size());
    if (!params.contains(local)) continue;
    auto tensor = params.at(local);
    const auto shape = field<diff::Shape>(entry, "shape", "checkpoint tensor " + name);
    if (shape != tensor.shape())
      throw FormatError("checkpoint tensor " + name + ": shape " + json(shape).dump() + " does not match " +
                        json(tensor.shape()).dump());
    const auto values = field<std::vector<double>>(entry, "values", "checkpoint tensor " + name);
    if (values.size() != tensor.size())
      throw FormatError("checkpoint tensor " + name + ": " + std::to_string(values.size()) + " values for shape " +
                        json(shape).dump());
    std::copy(values.begin(), values.end(), tensor.mutable_values().begin());
    loaded.insert(local);
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!loaded.contains(params.name(i))) throw FormatError("checkpoint: missing tensor " + prefix + params.name(i));
}

json lstm_checkpoint(const seq::LstmExpert& expert, const Provenance& provenance) {
  return json{{"format", kCheckpointFormat},
              {"kind", "lstm"},
              {"provenance", to_json(provenance)},
              {"spec", to_json(expert.spec())},
              {"input_dim", expert.input_dim()},
              {"init_seed", expert.params().seed()},
              {"tensors", tensors_to_json(expert.params())}};
}

seq::LstmExpert lstm_from_checkpoint(const json& j) {
  require_format(j, "lstm", "lstm checkpoint");
  seq::ExpertSpec spec;
  try {
    spec = expert_spec_from_json(field<json>(j, "spec", "lstm checkpoint"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("lstm checkpoint: ") + e.what());
  }
  seq::LstmExpert expert(spec, field<std::size_t>(j, "input_dim", "lstm checkpoint"),
                         field<std::uint64_t>(j, "init_seed", "lstm checkpoint"));
  load_tensors(expert.params(), field<json>(j, "tensors", "lstm checkpoint"));
  return expert;
}

json to_json(const maes::EnsembleSpec& spec) {
  json experts = json::array();
  for (const auto& e : spec.experts) experts.push_back(to_json(e));
  return json{{"experts", experts},
              {"context_dim", spec.context_dim},
              {"encoding_dim", spec.encoding_dim},
              {"attention_dim", spec.attention_dim},
              {"attention", gate::to_string(spec.attention)}};
}

maes::EnsembleSpec ensemble_spec_from_json(const json& j) {
  maes::EnsembleSpec spec;
  try {
    for (const auto& e : field<json>(j, "experts", "ensemble spec")) spec.experts.push_back(expert_spec_from_json(e));
    spec.context_dim = field<std::size_t>(j, "context_dim", "ensemble spec");
    spec.encoding_dim = field<std::size_t>(j, "encoding_dim", "ensemble spec");
    spec.attention_dim = field<std::size_t>(j, "attention_dim", "ensemble spec");
    spec.attention = gate::parse_attention_kind(field<std::string>(j, "attention", "ensemble spec"));
    spec.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("ensemble spec: ") + e.what());
  }
  return spec;
}

json to_json(const maes::TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"w_imp", c.w_imp},
              {"pretrain_epochs", c.pretrain_epochs},
              {"loss_kind", maes::to_string(c.loss_kind)},
              {"importance", maes::to_string(c.importance)},
              {"seed", c.seed}};
}

json maes_checkpoint(const maes::MaesModel& model, const maes::TrainConfig& config, const Provenance& provenance) {
  json tensors = json::array();
  const auto append = [&](const diff::ParamSet& params, const std::string& prefix) {
    for (auto& t : tensors_to_json(params, prefix)) tensors.push_back(std::move(t));
  };
  for (std::size_t m = 0; m < model.experts().size(); ++m)
    append(model.experts()[m].params(), "expert" + std::to_string(m) + "/");
  append(model.context().params(), "context/");
  append(model.gate().params(), "gate/");
  return json{{"format", kCheckpointFormat},
              {"kind", "maes"},
              {"provenance", to_json(provenance)},
              {"ensemble_spec", to_json(model.spec())},
              {"train_config", to_json(config)},
              {"input_dim", model.input_dim()},
              {"tensors", tensors}};
}

maes::MaesModel maes_from_checkpoint(const json& j) {
  require_format(j, "maes", "maes checkpoint");
  const auto spec = ensemble_spec_from_json(field<json>(j, "ensemble_spec", "maes checkpoint"));
  maes::MaesModel model(spec, field<std::size_t>(j, "input_dim", "maes checkpoint"), 0);
  const auto tensors = field<json>(j, "tensors", "maes checkpoint");
  for (std::size_t m = 0; m < model.experts().size(); ++m)
    load_tensors(model.experts()[m].params(), tensors, "expert" + std::to_string(m) + "/");
  load_tensors(model.context().params(), tensors, "context/");
  load_tensors(model.gate().params(), tensors, "gate/");
  return model;
}

}  // namespace maeslab::exp
