// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/expcli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "maeslab/datagen/io.hpp"
#include "maeslab/errors.hpp"

namespace maeslab::exp {

using nlohmann::json;

namespace {

// Rejects keys outside `known` so that typos in config files fail loudly.
void check_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!names.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::string read_string(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  std::string out = fallback;
  read(j, key, out, where);
  return out;
}

json fit_to_json(const seq::FitOptions& f) {
  return json{{"epochs", f.epochs}, {"batch_size", f.batch_size}, {"learning_rate", f.learning_rate}};
}

seq::FitOptions fit_from_json(const json& j, const std::string& where) {
  check_keys(j, {"epochs", "batch_size", "learning_rate"}, where);
  seq::FitOptions f;
  read(j, "epochs", f.epochs, where);
  read(j, "batch_size", f.batch_size, where);
  read(j, "learning_rate", f.learning_rate, where);
  return f;
}

MaesVariant variant_from_json(const json& j, const std::string& where) {
  check_keys(j, {"name", "attention", "loss_kind", "importance", "w_imp", "pretrain_epochs"}, where);
  MaesVariant v;
  read(j, "name", v.name, where);
  v.attention = gate::parse_attention_kind(read_string(j, "attention", to_string(v.attention), where));
  v.loss_kind = maes::parse_loss_kind(read_string(j, "loss_kind", to_string(v.loss_kind), where));
  v.importance = maes::parse_importance_kind(read_string(j, "importance", to_string(v.importance), where));
  read(j, "w_imp", v.w_imp, where);
  read(j, "pretrain_epochs", v.pretrain_epochs, where);
  return v;
}

baselines::StackingParam parse_stacking_param(const std::string& name) {
  if (name == "convex") return baselines::StackingParam::convex;
  if (name == "unconstrained") return baselines::StackingParam::unconstrained;
  throw ConfigError("unknown stacking parametrization '" + name + "' (expected convex or unconstrained)");
}

bool safe_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; });
}

}  // namespace

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names{kBestSingle, kStepwiseSelect, kAverage, kGlobalStacking,
                                              kStepwiseStacking};
  return names;
}

std::vector<double> default_w_imp_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<std::size_t> default_pretrain_grid(std::size_t epochs) {
  std::vector<std::size_t> grid;
  for (std::size_t e = 0; e <= epochs; ++e) grid.push_back(e);
  return grid;
}

ExperimentConfig toy_config() {
  ExperimentConfig c;
  c.name = "toy";
  c.data.n_train = 500;
  c.data.n_test = 500;
  c.data.steps = 20;
  c.deltas = {0.0, 0.1, 0.2, 0.3};
  c.models = baseline_names();
  c.models.push_back("maes");
  MaesVariant maes;
  maes.pretrain_epochs = 5;
  c.variants = {maes};
  c.maes.batch_size = 10;
  c.pool.size = 5;
  c.pool.hidden_min = 8;
  c.pool.hidden_max = 64;
  c.pool.fit.epochs = 15;
  c.pool.fit.batch_size = 10;
  c.pool.fit.learning_rate = 0.01;
  c.ablation.w_imp = default_w_imp_grid();
  c.ablation.pretrain_epochs = default_pretrain_grid(c.maes.epochs);
  c.ablation.attention = gate::all_attention_kinds();
  c.ablation.expert_counts = {1, 2, 3, 4, 5};
  c.search.grid_min = 10;
  c.search.grid_max = 90;
  c.search.grid_step = 20;
  c.execution.output_dir = "runs/toy";
  return c;
}

ExperimentConfig full_config() {
  ExperimentConfig c;
  c.name = "full";
  c.deltas = data::default_delta_grid();
  c.models = baseline_names();
  c.models.push_back("maes");
  c.variants = {MaesVariant{}};
  c.pool.size = 20;
  c.pool.hidden_min = 100;
  c.pool.hidden_max = 1100;
  c.pool.fit = seq::FitOptions{};
  c.ensemble.num_experts = 5;
  c.ensemble.context_dim = 100;
  c.ensemble.encoding_dim = 100;
  c.ensemble.attention_dim = 100;
  c.maes.batch_size = 100;
  c.maes.learning_rate = 1e-3;
  c.ablation.w_imp = default_w_imp_grid();
  c.ablation.pretrain_epochs = default_pretrain_grid(c.maes.epochs);
  c.ablation.attention = gate::all_attention_kinds();
  c.ablation.expert_counts = {1, 2, 3, 5, 10, 15, 20};
  c.execution.output_dir = "runs/full";
  return c;
}

const MaesVariant* ExperimentConfig::find_variant(const std::string& n) const {
  for (const auto& v : variants)
    if (v.name == n) return &v;
  return nullptr;
}

const MaesVariant* ExperimentConfig::primary_variant() const {
  for (const auto& m : models)
    if (const auto* v = find_variant(m)) return v;
  return nullptr;
}

bool ExperimentConfig::has_baselines() const {
  const auto& names = baseline_names();
  return std::any_of(models.begin(), models.end(),
                     [&](const std::string& m) { return std::find(names.begin(), names.end(), m) != names.end(); });
}

void ExperimentConfig::validate() const {
  if (!safe_name(name)) throw ConfigError("name: '" + name + "' must be 1-64 characters of [A-Za-z0-9_-]");
  data.validate();
  if (deltas.empty()) throw ConfigError("deltas: at least one delta is required");
  for (double d : deltas)
    if (!std::isfinite(d) || d < 0.0) throw ConfigError("deltas: every delta must be finite and >= 0");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds: duplicate seed");
  if (std::set<double>(deltas.begin(), deltas.end()).size() != deltas.size())
    throw ConfigError("deltas: duplicate delta");

  std::set<std::string> variant_names;
  for (const auto& v : variants) {
    if (!safe_name(v.name)) throw ConfigError("variants: name '" + v.name + "' must be 1-64 characters of [A-Za-z0-9_-]");
    const auto& b = baseline_names();
    if (std::find(b.begin(), b.end(), v.name) != b.end())
      throw ConfigError("variants: name '" + v.name + "' collides with a baseline");
    if (!variant_names.insert(v.name).second) throw ConfigError("variants: duplicate name '" + v.name + "'");
    train_config(*this, v, 0).validate();
    ensemble_spec(*this, v, std::vector<seq::ExpertSpec>(ensemble.num_experts, seq::ExpertSpec{})).validate();
  }
  if (models.empty()) throw ConfigError("models: the roster is empty");
  std::set<std::string> seen;
  for (const auto& m : models) {
    const auto& b = baseline_names();
    if (std::find(b.begin(), b.end(), m) == b.end() && !variant_names.contains(m))
      throw ConfigError("models: '" + m + "' is neither a baseline nor a defined variant");
    if (!seen.insert(m).second) throw ConfigError("models: duplicate entry '" + m + "'");
  }

  if (pool.size == 0) throw ConfigError("pool.size must be >= 1");
  if (pool.hidden_min == 0 || pool.hidden_min > pool.hidden_max)
    throw ConfigError("pool: need 1 <= hidden_min <= hidden_max");
  pool.fit.validate();
  if (ensemble.num_experts == 0) throw ConfigError("ensemble.num_experts must be >= 1");
  if (ensemble.num_experts > pool.size)
    throw ConfigError("ensemble.num_experts (" + std::to_string(ensemble.num_experts) +
                      ") exceeds pool.size (" + std::to_string(pool.size) + "); experts are drawn from the pool");
  if (stacking.steps == 0 || !(stacking.learning_rate > 0.0))
    throw ConfigError("stacking: steps and learning_rate must be positive");
  if (permutations == 0) throw ConfigError("permutations must be >= 1");

  if (!std::isfinite(ablation.delta) || ablation.delta < 0.0) throw ConfigError("ablation.delta must be >= 0");
  for (double w : ablation.w_imp)
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("ablation.w_imp: values must be >= 0");
  for (auto p : ablation.pretrain_epochs)
    if (p > maes.epochs)
      throw ConfigError("ablation.pretrain_epochs: " + std::to_string(p) + " exceeds maes.epochs (" +
                        std::to_string(maes.epochs) + ")");
  for (auto m : ablation.expert_counts)
    if (m == 0 || m > pool.size)
      throw ConfigError("ablation.expert_counts: " + std::to_string(m) + " is outside [1, pool.size]");

  if (search.samples == 0) throw ConfigError("search.samples must be >= 1");
  if (search.grid_min == 0 || search.grid_step == 0 || search.grid_min > search.grid_max)
    throw ConfigError("search: need 1 <= grid_min <= grid_max and grid_step >= 1");

  if (execution.output_dir.empty()) throw ConfigError("execution.output_dir must not be empty");
  if (execution.threads == 0) throw ConfigError("execution.threads must be >= 1");
}

json to_json(const seq::ExpertSpec& spec) {
  return json{{"hidden_dim", spec.hidden_dim},
              {"output_dim", spec.output_dim},
              {"cell_variant", seq::to_string(spec.cell_variant)}};
}

seq::ExpertSpec expert_spec_from_json(const json& j) {
  check_keys(j, {"hidden_dim", "output_dim", "cell_variant"}, "expert spec");
  seq::ExpertSpec s;
  read(j, "hidden_dim", s.hidden_dim, "expert spec");
  read(j, "output_dim", s.output_dim, "expert spec");
  s.cell_variant = seq::parse_cell_variant(read_string(j, "cell_variant", to_string(s.cell_variant), "expert spec"));
  s.validate();
  return s;
}

json to_json(const MaesVariant& v) {
  return json{{"name", v.name},
              {"attention", gate::to_string(v.attention)},
              {"loss_kind", maes::to_string(v.loss_kind)},
              {"importance", maes::to_string(v.importance)},
              {"w_imp", v.w_imp},
              {"pretrain_epochs", v.pretrain_epochs}};
}

json to_json(const ExperimentConfig& c) {
  json variants = json::array();
  for (const auto& v : c.variants) variants.push_back(to_json(v));
  json attention = json::array();
  for (auto k : c.ablation.attention) attention.push_back(gate::to_string(k));
  return json{
      {"format", kConfigFormat},
      {"name", c.name},
      {"data", data::to_json(c.data)},
      {"deltas", c.deltas},
      {"seeds", c.seeds},
      {"models", c.models},
      {"pool",
       {{"size", c.pool.size},
        {"hidden_min", c.pool.hidden_min},
        {"hidden_max", c.pool.hidden_max},
        {"cell_variant", seq::to_string(c.pool.cell_variant)},
        {"fit", fit_to_json(c.pool.fit)}}},
      {"ensemble",
       {{"num_experts", c.ensemble.num_experts},
        {"context_dim", c.ensemble.context_dim},
        {"encoding_dim", c.ensemble.encoding_dim},
        {"attention_dim", c.ensemble.attention_dim}}},
      {"maes",
       {{"epochs", c.maes.epochs}, {"batch_size", c.maes.batch_size}, {"learning_rate", c.maes.learning_rate}}},
      {"variants", variants},
      {"stacking",
       {{"steps", c.stacking.steps},
        {"learning_rate", c.stacking.learning_rate},
        {"param", baselines::to_string(c.stacking.param)}}},
      {"permutations", c.permutations},
      {"trace_sequences", c.trace_sequences},
      {"ablation",
       {{"delta", c.ablation.delta},
        {"w_imp", c.ablation.w_imp},
        {"pretrain_epochs", c.ablation.pretrain_epochs},
        {"attention", attention},
        {"expert_counts", c.ablation.expert_counts}}},
      {"search",
       {{"samples", c.search.samples},
        {"grid_min", c.search.grid_min},
        {"grid_max", c.search.grid_max},
        {"grid_step", c.search.grid_step},
        {"attention", gate::to_string(c.search.attention)},
        {"seed", c.search.seed}}},
      {"execution", {{"output_dir", c.execution.output_dir}, {"threads", c.execution.threads}}},
  };
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j,
             {"format", "name", "data", "deltas", "seeds", "models", "pool", "ensemble", "maes", "variants",
              "stacking", "permutations", "trace_sequences", "ablation", "search", "execution"},
             "config");
  if (j.contains("format") && j.at("format") != kConfigFormat)
    throw ConfigError("config: unsupported format " + j.at("format").dump() + " (expected \"" + kConfigFormat + "\")");

  ExperimentConfig c;
  read(j, "name", c.name, "config");
  if (j.contains("data")) c.data = data::shift_config_from_json(j.at("data"));
  read(j, "deltas", c.deltas, "config");
  read(j, "seeds", c.seeds, "config");
  read(j, "models", c.models, "config");
  read(j, "permutations", c.permutations, "config");
  read(j, "trace_sequences", c.trace_sequences, "config");

  if (j.contains("pool")) {
    const auto& p = j.at("pool");
    check_keys(p, {"size", "hidden_min", "hidden_max", "cell_variant", "fit"}, "pool");
    read(p, "size", c.pool.size, "pool");
    read(p, "hidden_min", c.pool.hidden_min, "pool");
    read(p, "hidden_max", c.pool.hidden_max, "pool");
    c.pool.cell_variant = seq::parse_cell_variant(read_string(p, "cell_variant", to_string(c.pool.cell_variant), "pool"));
    if (p.contains("fit")) c.pool.fit = fit_from_json(p.at("fit"), "pool.fit");
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    check_keys(e, {"num_experts", "context_dim", "encoding_dim", "attention_dim"}, "ensemble");
    read(e, "num_experts", c.ensemble.num_experts, "ensemble");
    read(e, "context_dim", c.ensemble.context_dim, "ensemble");
    read(e, "encoding_dim", c.ensemble.encoding_dim, "ensemble");
    read(e, "attention_dim", c.ensemble.attention_dim, "ensemble");
  }
  if (j.contains("maes")) {
    const auto& m = j.at("maes");
    check_keys(m, {"epochs", "batch_size", "learning_rate"}, "maes");
    read(m, "epochs", c.maes.epochs, "maes");
    read(m, "batch_size", c.maes.batch_size, "maes");
    read(m, "learning_rate", c.maes.learning_rate, "maes");
  }
  if (j.contains("variants")) {
    if (!j.at("variants").is_array()) throw ConfigError("variants: expected an array");
    std::size_t i = 0;
    for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_json(v, "variants[" + std::to_string(i++) + "]"));
  }
  if (j.contains("stacking")) {
    const auto& s = j.at("stacking");
    check_keys(s, {"steps", "learning_rate", "param"}, "stacking");
    read(s, "steps", c.stacking.steps, "stacking");
    read(s, "learning_rate", c.stacking.learning_rate, "stacking");
    c.stacking.param = parse_stacking_param(read_string(s, "param", baselines::to_string(c.stacking.param), "stacking"));
  }
  if (j.contains("ablation")) {
    const auto& a = j.at("ablation");
    check_keys(a, {"delta", "w_imp", "pretrain_epochs", "attention", "expert_counts"}, "ablation");
    read(a, "delta", c.ablation.delta, "ablation");
    read(a, "w_imp", c.ablation.w_imp, "ablation");
    read(a, "pretrain_epochs", c.ablation.pretrain_epochs, "ablation");
    std::vector<std::string> kinds;
    read(a, "attention", kinds, "ablation");
    for (const auto& k : kinds) c.ablation.attention.push_back(gate::parse_attention_kind(k));
    read(a, "expert_counts", c.ablation.expert_counts, "ablation");
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    check_keys(s, {"samples", "grid_min", "grid_max", "grid_step", "attention", "seed"}, "search");
    read(s, "samples", c.search.samples, "search");
    read(s, "grid_min", c.search.grid_min, "search");
    read(s, "grid_max", c.search.grid_max, "search");
    read(s, "grid_step", c.search.grid_step, "search");
    c.search.attention = gate::parse_attention_kind(read_string(s, "attention", to_string(c.search.attention), "search"));
    read(s, "seed", c.search.seed, "search");
  }
  if (j.contains("execution")) {
    const auto& e = j.at("execution");
    check_keys(e, {"output_dir", "threads"}, "execution");
    read(e, "output_dir", c.execution.output_dir, "execution");
    read(e, "threads", c.execution.threads, "execution");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) {
  auto j = to_json(config);
  j.erase("execution");
  return fnv1a_hex(j.dump());
}

data::ShiftConfig point_data_config(const ExperimentConfig& config, double delta, std::uint64_t seed) {
  auto c = config.data;
  c.delta = delta;
  c.seed = seed;
  return c;
}

maes::TrainConfig train_config(const ExperimentConfig& config, const MaesVariant& variant, std::uint64_t seed) {
  maes::TrainConfig t;
  t.epochs = config.maes.epochs;
  t.batch_size = config.maes.batch_size;
  t.learning_rate = config.maes.learning_rate;
  t.w_imp = variant.w_imp;
  t.pretrain_epochs = variant.pretrain_epochs;
  t.loss_kind = variant.loss_kind;
  t.importance = variant.importance;
  t.seed = seed;
  return t;
}

maes::EnsembleSpec ensemble_spec(const ExperimentConfig& config, const MaesVariant& variant,
                                 const std::vector<seq::ExpertSpec>& experts) {
  maes::EnsembleSpec s;
  s.experts = experts;
  s.context_dim = config.ensemble.context_dim;
  s.encoding_dim = config.ensemble.encoding_dim;
  s.attention_dim = config.ensemble.attention_dim;
  s.attention = variant.attention;
  return s;
}

}  // namespace maeslab::exp
