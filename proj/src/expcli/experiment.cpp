// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/expcli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "maeslab/datagen/io.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/log.hpp"
#include "maeslab/maes/train.hpp"
#include "maeslab/seeding.hpp"
#include "maeslab/seqmodels/train.hpp"

namespace maeslab::exp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_baseline(const std::string& name) {
  const auto& b = baseline_names();
  return std::find(b.begin(), b.end(), name) != b.end();
}

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

std::string header_comment(const std::string& hash, const std::vector<std::uint64_t>& seeds) {
  return "# config_hash=" + hash + " seeds=" + seeds_text(seeds) + "\n";
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad field '" + key + "': " + e.what());
  }
}

json stacking_to_json(const baselines::StackingWeights& w) {
  return json{{"mode", baselines::to_string(w.mode)},
              {"param", baselines::to_string(w.param)},
              {"rows", w.rows},
              {"members", w.members},
              {"weights", w.weights},
              {"bias", w.bias}};
}

baselines::StackingWeights stacking_from_json(const json& j) {
  baselines::StackingWeights w;
  const auto mode = field<std::string>(j, "mode", "stacking weights");
  const auto param = field<std::string>(j, "param", "stacking weights");
  if (mode != "global" && mode != "stepwise") throw FormatError("stacking weights: bad mode '" + mode + "'");
  if (param != "convex" && param != "unconstrained") throw FormatError("stacking weights: bad param '" + param + "'");
  w.mode = mode == "global" ? baselines::StackingMode::global : baselines::StackingMode::stepwise;
  w.param = param == "convex" ? baselines::StackingParam::convex : baselines::StackingParam::unconstrained;
  w.rows = field<std::size_t>(j, "rows", "stacking weights");
  w.members = field<std::size_t>(j, "members", "stacking weights");
  w.weights = field<std::vector<double>>(j, "weights", "stacking weights");
  w.bias = field<std::vector<double>>(j, "bias", "stacking weights");
  if (w.weights.size() != w.rows * w.members) throw FormatError("stacking weights: size mismatch");
  return w;
}

json config_section(const ExperimentConfig& config) {
  auto j = to_json(config);
  j.erase("execution");
  return j;
}

std::vector<seq::ExpertSpec> pick(const std::vector<seq::ExpertSpec>& specs, const std::vector<std::size_t>& idx) {
  std::vector<seq::ExpertSpec> out;
  for (auto i : idx) out.push_back(specs[i]);
  return out;
}

// Seed-averaged mean, step curve std, and seed std of per-seed reports.
AblationRow pool_reports(const std::string& setting, const std::vector<const metrics::MetricsReport*>& reports) {
  AblationRow row;
  row.setting = setting;
  row.n_seeds = reports.size();
  std::vector<double> means;
  std::map<std::size_t, std::pair<double, std::size_t>> by_step;
  for (const auto* r : reports) {
    means.push_back(r->mean_apr);
    for (std::size_t k = 0; k < r->steps.size(); ++k) {
      auto& slot = by_step[r->steps[k]];
      slot.first += r->per_step_apr[k];
      ++slot.second;
    }
  }
  std::vector<double> curve;
  for (const auto& [_, s] : by_step) curve.push_back(s.first / static_cast<double>(s.second));
  row.mean_apr = metrics::mean(means);
  row.std_apr = metrics::population_std(curve);
  row.seed_std = metrics::sample_std(means);
  return row;
}

}  // namespace

std::string format_double(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::vector<std::string> parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::pair<std::size_t, std::string>> errors;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        errors.emplace_back(i, e.what());
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  if (count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(errors.begin(), errors.end());
  std::vector<std::string> out;
  for (auto& [i, msg] : errors) out.push_back("task " + std::to_string(i) + ": " + msg);
  return out;
}

std::vector<seq::ExpertSpec> sample_pool_specs(const PoolConfig& pool, std::mt19937_64& rng) {
  std::vector<seq::ExpertSpec> specs(pool.size);
  const std::uint64_t span = pool.hidden_max - pool.hidden_min + 1;
  for (auto& s : specs) {
    s.hidden_dim = pool.hidden_min + static_cast<std::size_t>(rng() % span);
    s.cell_variant = pool.cell_variant;
  }
  return specs;
}

std::vector<std::size_t> sample_expert_indices(std::size_t pool_size, std::size_t count, std::mt19937_64& rng) {
  if (count > pool_size)
    throw ConfigError("cannot draw " + std::to_string(count) + " experts from a pool of " + std::to_string(pool_size));
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng() % (pool_size - i)]);
  idx.resize(count);
  return idx;
}

Architecture sample_architecture(const ExperimentConfig& config, std::uint64_t seed, std::size_t num_experts) {
  std::mt19937_64 rng(mix_seed(seed, kArchitectureStream));
  Architecture a;
  a.pool = sample_pool_specs(config.pool, rng);
  a.experts = sample_expert_indices(a.pool.size(), num_experts, rng);
  return a;
}

const ModelScore* PointMetrics::find(const std::string& name) const {
  for (const auto& m : models)
    if (m.name == name) return &m;
  return nullptr;
}

json to_json(const metrics::MetricsReport& r) {
  return json{{"mean_apr", r.mean_apr},
              {"std_apr", r.std_apr},
              {"steps", r.steps},
              {"per_step_apr", r.per_step_apr},
              {"skipped_steps", r.skipped_steps}};
}

metrics::MetricsReport metrics_report_from_json(const json& j) {
  metrics::MetricsReport r;
  r.mean_apr = field<double>(j, "mean_apr", "metrics");
  r.std_apr = field<double>(j, "std_apr", "metrics");
  r.steps = field<std::vector<std::size_t>>(j, "steps", "metrics");
  r.per_step_apr = field<std::vector<double>>(j, "per_step_apr", "metrics");
  r.skipped_steps = field<std::vector<std::size_t>>(j, "skipped_steps", "metrics");
  if (r.steps.size() != r.per_step_apr.size()) throw FormatError("metrics: steps and per_step_apr differ in length");
  return r;
}

json to_json(const PointResult& r, const Provenance& provenance) {
  json pool = json::array();
  for (const auto& p : r.pool)
    pool.push_back(json{{"spec", to_json(p.spec)},
                        {"init_seed", p.init_seed},
                        {"fit_seed", p.fit_seed},
                        {"best_epoch", p.best_epoch},
                        {"best_validation_apr", p.best_validation_apr}});
  json models = json::array();
  for (const auto& m : r.metrics.models) models.push_back(json{{"name", m.name}, {"test", to_json(m.report)}});
  json variants = json::array();
  for (const auto& v : r.metrics.variants)
    variants.push_back(json{{"name", v.name},
                            {"expert_indices", v.expert_indices},
                            {"expert_correlation", v.expert_correlation},
                            {"pool_correlation", v.pool_correlation},
                            {"best_epoch", v.best_epoch},
                            {"best_validation_apr", v.best_validation_apr}});
  return json{{"format", kPointFormat},
              {"provenance", to_json(provenance)},
              {"point_key", r.point_key},
              {"delta", r.delta},
              {"seed", r.seed},
              {"pool", pool},
              {"pool_correlation", r.metrics.pool_correlation},
              {"pool_test_apr", r.metrics.pool_test_apr},
              {"models", models},
              {"variants", variants}};
}

PointResult point_result_from_json(const json& j) {
  if (field<std::string>(j, "format", "point result") != kPointFormat)
    throw FormatError("point result: unsupported format " + j.at("format").dump());
  PointResult r;
  r.point_key = field<std::string>(j, "point_key", "point result");
  r.delta = field<double>(j, "delta", "point result");
  r.seed = field<std::uint64_t>(j, "seed", "point result");
  r.metrics.pool_correlation = field<double>(j, "pool_correlation", "point result");
  r.metrics.pool_test_apr = field<std::vector<double>>(j, "pool_test_apr", "point result");
  for (const auto& p : field<json>(j, "pool", "point result")) {
    PoolSummary s;
    try {
      s.spec = expert_spec_from_json(field<json>(p, "spec", "pool entry"));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("pool entry: ") + e.what());
    }
    s.init_seed = field<std::uint64_t>(p, "init_seed", "pool entry");
    s.fit_seed = field<std::uint64_t>(p, "fit_seed", "pool entry");
    s.best_epoch = field<long>(p, "best_epoch", "pool entry");
    s.best_validation_apr = field<double>(p, "best_validation_apr", "pool entry");
    r.pool.push_back(s);
  }
  for (const auto& m : field<json>(j, "models", "point result"))
    r.metrics.models.push_back({field<std::string>(m, "name", "model"), metrics_report_from_json(m.at("test"))});
  for (const auto& v : field<json>(j, "variants", "point result")) {
    VariantStats s;
    s.name = field<std::string>(v, "name", "variant");
    s.expert_indices = field<std::vector<std::size_t>>(v, "expert_indices", "variant");
    s.expert_correlation = field<double>(v, "expert_correlation", "variant");
    s.pool_correlation = field<double>(v, "pool_correlation", "variant");
    s.best_epoch = field<long>(v, "best_epoch", "variant");
    s.best_validation_apr = field<double>(v, "best_validation_apr", "variant");
    r.metrics.variants.push_back(s);
  }
  return r;
}

std::string point_key(const ExperimentConfig& config, double delta, std::uint64_t seed) {
  auto j = config_section(config);
  for (const char* k : {"name", "deltas", "seeds", "permutations", "ablation", "search"}) j.erase(k);
  j["point"] = json{{"delta", delta}, {"seed", seed}};
  return fnv1a_hex(j.dump());
}

std::string point_dir_name(double delta, std::uint64_t seed) {
  return "delta_" + json(delta).dump() + "_seed_" + std::to_string(seed);
}

PointPredictions predict_point(const ExperimentConfig& config, const PointModels& models,
                               const data::Dataset& dataset) {
  PointPredictions out;
  for (const auto& m : models.pool) out.pool.push_back(seq::predict(m, dataset.test));
  for (const auto& name : config.models) {
    if (name == kBestSingle) {
      out.models.emplace_back(name, out.pool.at(models.best_single));
    } else if (name == kStepwiseSelect) {
      out.models.emplace_back(name, baselines::selection_predict(out.pool, models.selection));
    } else if (name == kAverage) {
      out.models.emplace_back(name, baselines::average_ensemble(out.pool));
    } else if (name == kGlobalStacking || name == kStepwiseStacking) {
      const auto& w = name == kGlobalStacking ? models.global_stacking : models.stepwise_stacking;
      if (!w) throw UsageError("predict_point: no fitted weights for " + name);
      out.models.emplace_back(name, baselines::stacked_predict(out.pool, *w));
    } else {
      const auto it = std::find_if(models.maes.begin(), models.maes.end(),
                                   [&](const TrainedMaes& t) { return t.name == name; });
      if (it == models.maes.end()) throw UsageError("predict_point: no trained model for " + name);
      auto p = maes::predict(it->model, dataset.test);
      out.models.emplace_back(name, std::move(p.ensemble));
      out.maes.push_back({name, std::move(p.experts), std::move(p.alpha)});
    }
  }
  return out;
}

PointMetrics score_point(const ExperimentConfig& config, const PointModels& models, const PointPredictions& preds,
                         const data::Dataset& dataset) {
  (void)config;
  PointMetrics out;
  const auto labels = data::label_matrix(dataset.test);
  for (const auto& [name, series] : preds.models) out.models.push_back({name, metrics::stepwise_apr(series, labels, false)});
  out.pool_correlation = metrics::prediction_correlation(preds.pool).mean_off_diagonal();
  for (const auto& s : preds.pool) out.pool_test_apr.push_back(metrics::stepwise_apr(s, labels, false).mean_apr);
  for (const auto& parts : preds.maes) {
    const auto it = std::find_if(models.maes.begin(), models.maes.end(),
                                 [&](const TrainedMaes& t) { return t.name == parts.name; });
    VariantStats s;
    s.name = parts.name;
    s.expert_indices = it->expert_indices;
    s.expert_correlation = metrics::prediction_correlation(parts.experts).mean_off_diagonal();
    std::vector<Series> same;
    for (auto i : s.expert_indices) same.push_back(preds.pool.at(i));
    s.pool_correlation = metrics::prediction_correlation(same).mean_off_diagonal();
    out.variants.push_back(std::move(s));
  }
  return out;
}

void emit_reports(const ExperimentConfig& config, const PointPredictions& preds, const PointMetrics& metrics,
                  const data::Dataset& dataset, const Provenance& provenance, const fs::path& dir) {
  const std::string head = provenance_comment(provenance) + "\n";

  for (const auto& parts : preds.maes) {
    std::ostringstream out;
    out << head << "sequence,step";
    for (std::size_t m = 0; m < parts.alpha.experts; ++m) out << ",alpha_" << m;
    out << '\n';
    for (std::size_t n = 0; n < parts.alpha.rows; ++n)
      for (std::size_t t = 0; t < parts.alpha.steps; ++t) {
        out << n << ',' << t;
        for (std::size_t m = 0; m < parts.alpha.experts; ++m) out << ',' << format_double(parts.alpha.at(n, t, m));
        out << '\n';
      }
    write_text_atomic(dir / ("attention_" + parts.name + ".csv"), out.str());
  }

  const auto write_corr = [&](const std::string& file, const std::vector<Series>& series, const std::string& prefix) {
    const auto c = metrics::prediction_correlation(series);
    std::ostringstream out;
    out << head << "model";
    for (std::size_t j = 0; j < c.size; ++j) out << ',' << prefix << j;
    out << '\n';
    for (std::size_t i = 0; i < c.size; ++i) {
      out << prefix << i;
      for (std::size_t j = 0; j < c.size; ++j) out << ',' << format_double(c.at(i, j));
      out << '\n';
    }
    write_text_atomic(dir / file, out.str());
  };
  write_corr("correlation_pool.csv", preds.pool, "pool_");
  for (const auto& parts : preds.maes) write_corr("correlation_" + parts.name + ".csv", parts.experts, "expert_");

  {
    std::ostringstream out;
    out << head << "model,step,apr\n";
    for (const auto& m : metrics.models)
      for (std::size_t k = 0; k < m.report.steps.size(); ++k)
        out << m.name << ',' << m.report.steps[k] << ',' << format_double(m.report.per_step_apr[k]) << '\n';
    write_text_atomic(dir / "apr_curves.csv", out.str());
  }

  {
    const std::size_t n_traces = std::min(config.trace_sequences, dataset.test.size());
    std::ostringstream out;
    out << head << "sequence,step,label";
    for (const auto& [name, _] : preds.models) out << ',' << name;
    for (std::size_t m = 0; m < preds.pool.size(); ++m) out << ",pool_" << m;
    for (const auto& parts : preds.maes)
      for (std::size_t m = 0; m < parts.experts.size(); ++m) out << ',' << parts.name << "_expert_" << m;
    out << '\n';
    for (std::size_t n = 0; n < n_traces; ++n)
      for (std::size_t t = 0; t < dataset.test[n].steps; ++t) {
        out << n << ',' << t << ',' << static_cast<int>(dataset.test[n].y[t]);
        for (const auto& [_, s] : preds.models) out << ',' << format_double(s.at(n, t));
        for (const auto& s : preds.pool) out << ',' << format_double(s.at(n, t));
        for (const auto& parts : preds.maes)
          for (const auto& s : parts.experts) out << ',' << format_double(s.at(n, t));
        out << '\n';
      }
    write_text_atomic(dir / "traces.csv", out.str());
  }
}

PointResult run_point(const ExperimentConfig& config, double delta, std::uint64_t seed, const fs::path& dir,
                      std::size_t threads) {
  config.validate();
  const Provenance prov{config_hash(config), delta, seed};
  const auto key = point_key(config, delta, seed);
  fs::create_directories(dir);
  fs::remove(dir / "result.json");
  log::info("point delta=" + format_double(delta) + " seed=" + std::to_string(seed) + ": start");

  const auto dataset = data::generate_dataset(point_data_config(config, delta, seed));
  const auto arch = sample_architecture(config, seed, config.ensemble.num_experts);

  PointResult result;
  result.delta = delta;
  result.seed = seed;
  result.point_key = key;
  PointModels models;

  auto pool = baselines::train_pool(arch.pool, dataset, config.pool.fit, mix_seed(seed, kPoolStream), threads);
  json manifest_members = json::array();
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const auto& member = pool.members[m];
    models.pool.push_back(member.model);
    result.pool.push_back({member.spec, member.init_seed, member.fit_seed, member.history.best_epoch,
                           member.history.best_validation_apr});
    const std::string file = "checkpoints/pool_" + std::to_string(m) + ".json";
    write_json_atomic(dir / file, lstm_checkpoint(member.model, prov));
    manifest_members.push_back(json{{"checkpoint", file},
                                    {"spec", to_json(member.spec)},
                                    {"init_seed", member.init_seed},
                                    {"fit_seed", member.fit_seed},
                                    {"best_epoch", member.history.best_epoch},
                                    {"best_validation_apr", member.history.best_validation_apr},
                                    {"validation_step_loss", member.validation_step_loss}});
  }
  write_json_atomic(dir / "pool_manifest.json",
                    json{{"provenance", to_json(prov)}, {"members", manifest_members}});

  models.best_single = pool.best_member();
  models.selection = baselines::stepwise_select(pool);
  const auto val_preds = pool.validation_predictions();
  const auto val_labels = data::label_matrix(dataset.validation);
  const auto wants = [&](const char* name) {
    return std::find(config.models.begin(), config.models.end(), name) != config.models.end();
  };
  if (wants(kGlobalStacking))
    models.global_stacking =
        baselines::fit_stacking(val_preds, val_labels, baselines::StackingMode::global, config.stacking);
  if (wants(kStepwiseStacking))
    models.stepwise_stacking =
        baselines::fit_stacking(val_preds, val_labels, baselines::StackingMode::stepwise, config.stacking);
  json baseline_state{{"provenance", to_json(prov)},
                      {"best_single", models.best_single},
                      {"selection", models.selection}};
  if (models.global_stacking) baseline_state["global_stacking"] = stacking_to_json(*models.global_stacking);
  if (models.stepwise_stacking) baseline_state["stepwise_stacking"] = stacking_to_json(*models.stepwise_stacking);
  write_json_atomic(dir / "baselines.json", baseline_state);

  std::map<std::string, maes::TrainResult> histories;
  for (const auto& name : config.models) {
    const auto* variant = config.find_variant(name);
    if (!variant) continue;
    const auto spec = ensemble_spec(config, *variant, pick(arch.pool, arch.experts));
    maes::MaesModel model(spec, dataset.config.feature_dim, mix_seed(seed, kMaesInitStream));
    const auto tc = train_config(config, *variant, mix_seed(seed, kMaesTrainStream));
    auto tr = maes::train_maes(model, dataset, tc);
    std::ostringstream hist;
    hist << json{{"provenance", to_json(prov)}, {"variant", name}, {"train_config", to_json(tc)}}.dump() << '\n';
    for (const auto& e : tr.history)
      hist << json{{"epoch", e.epoch},
                   {"phase", e.phase},
                   {"train_loss", e.train_loss},
                   {"validation_loss", e.validation_loss},
                   {"validation_apr", e.validation_apr}}
                  .dump()
           << '\n';
    write_text_atomic(dir / ("history_" + name + ".jsonl"), hist.str());
    write_json_atomic(dir / ("checkpoints/maes_" + name + ".json"), maes_checkpoint(model, tc, prov));
    histories.emplace(name, std::move(tr));
    models.maes.push_back({name, std::move(model), arch.experts});
  }

  write_json_atomic(dir / "point.json", json{{"provenance", to_json(prov)},
                                              {"point_key", key},
                                              {"delta", delta},
                                              {"seed", seed},
                                              {"config", config_section(config)}});

  const auto preds = predict_point(config, models, dataset);
  result.metrics = score_point(config, models, preds, dataset);
  for (auto& v : result.metrics.variants) {
    const auto& tr = histories.at(v.name);
    v.best_epoch = tr.best_epoch;
    v.best_validation_apr = tr.best_validation_apr;
  }
  emit_reports(config, preds, result.metrics, dataset, prov, dir / "report");
  write_json_atomic(dir / "result.json", to_json(result, prov));
  log::info("point delta=" + format_double(delta) + " seed=" + std::to_string(seed) + ": done");
  return result;
}

LoadedPoint load_point(const fs::path& dir) {
  const auto point = read_json(dir / "point.json");
  LoadedPoint lp;
  try {
    lp.config = config_from_json(field<json>(point, "config", "point.json"));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("point.json: ") + e.what());
  }
  lp.delta = field<double>(point, "delta", "point.json");
  lp.seed = field<std::uint64_t>(point, "seed", "point.json");

  const auto manifest = read_json(dir / "pool_manifest.json");
  for (const auto& member : field<json>(manifest, "members", "pool_manifest.json")) {
    const fs::path file = dir / field<std::string>(member, "checkpoint", "pool member");
    require_within(dir, file);
    lp.models.pool.push_back(lstm_from_checkpoint(read_json(file)));
  }

  const auto base = read_json(dir / "baselines.json");
  lp.models.best_single = field<std::size_t>(base, "best_single", "baselines.json");
  lp.models.selection = field<std::vector<std::size_t>>(base, "selection", "baselines.json");
  if (base.contains("global_stacking")) lp.models.global_stacking = stacking_from_json(base.at("global_stacking"));
  if (base.contains("stepwise_stacking"))
    lp.models.stepwise_stacking = stacking_from_json(base.at("stepwise_stacking"));

  const auto arch = sample_architecture(lp.config, lp.seed, lp.config.ensemble.num_experts);
  for (const auto& name : lp.config.models) {
    if (!lp.config.find_variant(name)) continue;
    lp.models.maes.push_back(
        {name, maes_from_checkpoint(read_json(dir / ("checkpoints/maes_" + name + ".json"))), arch.experts});
  }
  return lp;
}

std::optional<PointResult> completed_point(const fs::path& dir, const std::string& key) {
  const auto file = dir / "result.json";
  if (!fs::exists(file)) return std::nullopt;
  try {
    auto r = point_result_from_json(read_json(file));
    if (r.point_key == key) return r;
    log::warn(file.string() + " was produced under a different configuration; recomputing");
  } catch (const std::exception& e) {
    log::warn(file.string() + " is unreadable (" + e.what() + "); recomputing");
  }
  return std::nullopt;
}

const SummaryRow* Summary::find(const std::string& model, double delta) const {
  for (const auto& r : rows)
    if (r.model == model && r.delta == delta) return &r;
  return nullptr;
}

std::vector<std::pair<std::size_t, double>> pooled_curve(const std::vector<const PointResult*>& points,
                                                         const std::string& model) {
  std::map<std::size_t, std::pair<double, std::size_t>> by_step;
  for (const auto* p : points) {
    const auto* s = p->metrics.find(model);
    if (!s) continue;
    for (std::size_t k = 0; k < s->report.steps.size(); ++k) {
      auto& slot = by_step[s->report.steps[k]];
      slot.first += s->report.per_step_apr[k];
      ++slot.second;
    }
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [t, s] : by_step) out.emplace_back(t, s.first / static_cast<double>(s.second));
  return out;
}

Summary build_summary(const ExperimentConfig& config, const std::vector<PointResult>& points) {
  Summary summary;
  const auto* reference = config.primary_variant();
  for (double delta : config.deltas) {
    std::vector<const PointResult*> at;
    for (auto seed : config.seeds)
      for (const auto& p : points)
        if (p.delta == delta && p.seed == seed) at.push_back(&p);
    if (at.empty()) continue;

    const std::size_t first = summary.rows.size();
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> curves;
    for (const auto& model : config.models) {
      std::vector<const metrics::MetricsReport*> reports;
      for (const auto* p : at) {
        if (const auto* s = p->metrics.find(model)) {
          reports.push_back(&s->report);
          summary.per_seed.push_back({model, delta, p->seed, s->report.mean_apr, s->report.std_apr});
        }
      }
      if (reports.empty()) continue;
      const auto pooled = pool_reports(model, reports);
      SummaryRow row;
      row.model = model;
      row.delta = delta;
      row.n_seeds = pooled.n_seeds;
      row.mean_apr = pooled.mean_apr;
      row.std_apr = pooled.std_apr;
      row.seed_std = pooled.seed_std;
      row.sem = pooled.seed_std / std::sqrt(static_cast<double>(pooled.n_seeds));
      summary.rows.push_back(row);
      curves[model] = pooled_curve(at, model);
    }

    SummaryRow* best = nullptr;
    for (std::size_t i = first; i < summary.rows.size(); ++i) {
      auto& r = summary.rows[i];
      if (is_baseline(r.model) && (!best || r.mean_apr > best->mean_apr)) best = &r;
    }
    if (best) best->best_baseline = true;

    if (reference && curves.contains(reference->name)) {
      const auto& ref = curves.at(reference->name);
      for (std::size_t i = first; i < summary.rows.size(); ++i) {
        auto& r = summary.rows[i];
        if (r.model == reference->name) continue;
        std::map<std::size_t, double> other(curves.at(r.model).begin(), curves.at(r.model).end());
        std::vector<double> a, b;
        for (const auto& [t, v] : ref)
          if (other.contains(t)) {
            a.push_back(v);
            b.push_back(other.at(t));
          }
        if (!a.empty()) r.p_value = metrics::permutation_test(a, b, config.permutations, 0);
      }
    }
  }
  return summary;
}

std::string summary_csv(const Summary& summary, const ExperimentConfig& config) {
  std::ostringstream out;
  out << header_comment(config_hash(config), config.seeds);
  out << "model,delta,n_seeds,mean_apr,std_apr,seed_std,sem,p_value_vs_reference,best_baseline\n";
  for (const auto& r : summary.rows) {
    out << r.model << ',' << format_double(r.delta) << ',' << r.n_seeds << ',' << format_double(r.mean_apr) << ','
        << format_double(r.std_apr) << ',' << format_double(r.seed_std) << ',' << format_double(r.sem) << ','
        << (r.p_value ? format_double(*r.p_value) : "") << ',' << (r.best_baseline ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string per_seed_csv(const Summary& summary, const ExperimentConfig& config) {
  std::ostringstream out;
  out << header_comment(config_hash(config), config.seeds);
  out << "model,delta,seed,mean_apr,std_apr\n";
  for (const auto& r : summary.per_seed)
    out << r.model << ',' << format_double(r.delta) << ',' << r.seed << ',' << format_double(r.mean_apr) << ','
        << format_double(r.std_apr) << '\n';
  return out.str();
}

SweepOutcome run_delta_sweep(const ExperimentConfig& config) {
  config.validate();
  const fs::path out = config.output_dir();
  fs::create_directories(out);
  const auto hash = config_hash(config);

  struct Task {
    double delta;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (double d : config.deltas)
    for (auto s : config.seeds) tasks.push_back({d, s});

  std::vector<std::optional<PointResult>> results(tasks.size());
  std::atomic<std::size_t> reused{0};
  const std::size_t inner = tasks.size() == 1 ? config.execution.threads : 1;
  auto failures = parallel_for(tasks.size(), config.execution.threads, [&](std::size_t i) {
    const auto& task = tasks[i];
    const auto dir = out / "points" / point_dir_name(task.delta, task.seed);
    require_within(out, dir);
    const auto key = point_key(config, task.delta, task.seed);
    if (auto done = completed_point(dir, key)) {
      results[i] = std::move(done);
      ++reused;
      return;
    }
    try {
      results[i] = run_point(config, task.delta, task.seed, dir, inner);
    } catch (const std::exception& e) {
      throw std::runtime_error(point_dir_name(task.delta, task.seed) + ": " + e.what());
    }
  });
  for (const auto& f : failures) log::error("sweep: " + f);

  SweepOutcome outcome;
  outcome.failures = std::move(failures);
  outcome.reused = reused.load();
  json point_list = json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    point_list.push_back(json{{"delta", tasks[i].delta},
                              {"seed", tasks[i].seed},
                              {"dir", "points/" + point_dir_name(tasks[i].delta, tasks[i].seed)},
                              {"status", results[i] ? "done" : "failed"}});
    if (results[i]) outcome.points.push_back(std::move(*results[i]));
  }
  outcome.summary = build_summary(config, outcome.points);
  write_json_atomic(out / "config.json", to_json(config));
  write_text_atomic(out / "summary.csv", summary_csv(outcome.summary, config));
  write_text_atomic(out / "summary_per_seed.csv", per_seed_csv(outcome.summary, config));
  write_json_atomic(out / "sweep.json", json{{"config_hash", hash},
                                             {"seeds", config.seeds},
                                             {"points", point_list},
                                             {"failures", outcome.failures}});
  return outcome;
}

std::vector<Cell> ablation_cells(const ExperimentConfig& config, const std::string& grid) {
  const MaesVariant base = config.primary_variant() ? *config.primary_variant() : MaesVariant{};
  std::vector<Cell> cells;
  if (grid == "w_imp") {
    for (double w : config.ablation.w_imp) {
      Cell c{grid, format_double(w), base, config.ensemble};
      c.variant.w_imp = w;
      cells.push_back(c);
    }
  } else if (grid == "pretrain") {
    for (auto p : config.ablation.pretrain_epochs) {
      Cell c{grid, std::to_string(p), base, config.ensemble};
      c.variant.pretrain_epochs = p;
      cells.push_back(c);
    }
  } else if (grid == "attention") {
    for (auto k : config.ablation.attention) {
      Cell c{grid, gate::to_string(k), base, config.ensemble};
      c.variant.attention = k;
      if (k == gate::AttentionKind::dot) c.dims.encoding_dim = c.dims.context_dim;
      cells.push_back(c);
    }
  } else if (grid == "experts") {
    for (auto m : config.ablation.expert_counts) {
      Cell c{grid, std::to_string(m), base, config.ensemble};
      c.dims.num_experts = m;
      cells.push_back(c);
    }
  } else {
    throw ConfigError("unknown ablation grid '" + grid + "' (expected w_imp, pretrain, attention or experts)");
  }
  return cells;
}

CellOutcome run_cells(const ExperimentConfig& config, const std::vector<Cell>& cells, const fs::path& dir) {
  config.validate();
  const auto hash = config_hash(config);
  const double delta = config.ablation.delta;
  const std::size_t n_seeds = config.seeds.size();
  CellOutcome outcome;
  outcome.results.assign(cells.size(), {});
  std::vector<std::optional<CellResult>> flat(cells.size() * n_seeds);

  outcome.failures = parallel_for(flat.size(), config.execution.threads, [&](std::size_t i) {
    const auto& cell = cells[i / n_seeds];
    const auto seed = config.seeds[i % n_seeds];
    const auto file = dir / cell.grid / cell.setting / ("seed_" + std::to_string(seed) + ".json");
    require_within(config.output_dir(), file);

    const auto data_config = point_data_config(config, delta, seed);
    const json key_source{{"variant", to_json(cell.variant)},
                          {"dims",
                           {{"num_experts", cell.dims.num_experts},
                            {"context_dim", cell.dims.context_dim},
                            {"encoding_dim", cell.dims.encoding_dim},
                            {"attention_dim", cell.dims.attention_dim}}},
                          {"data", data::to_json(data_config)},
                          {"pool", config_section(config).at("pool")},
                          {"maes", config_section(config).at("maes")}};
    const auto key = fnv1a_hex(key_source.dump());
    if (fs::exists(file)) {
      try {
        const auto j = read_json(file);
        if (field<std::string>(j, "key", "cell") == key) {
          flat[i] = CellResult{seed, metrics_report_from_json(j.at("validation"))};
          return;
        }
      } catch (const std::exception& e) {
        log::warn(file.string() + ": " + e.what() + "; recomputing");
      }
    }

    const auto dataset = data::generate_dataset(data_config);
    const auto arch = sample_architecture(config, seed, cell.dims.num_experts);
    maes::EnsembleSpec spec;
    spec.experts = pick(arch.pool, arch.experts);
    spec.context_dim = cell.dims.context_dim;
    spec.encoding_dim = cell.dims.encoding_dim;
    spec.attention_dim = cell.dims.attention_dim;
    spec.attention = cell.variant.attention;
    maes::MaesModel model(spec, dataset.config.feature_dim, mix_seed(seed, kMaesInitStream));
    maes::train_maes(model, dataset, train_config(config, cell.variant, mix_seed(seed, kMaesTrainStream)));
    const auto pred = maes::predict(model, dataset.validation);
    CellResult r{seed, metrics::stepwise_apr(pred.ensemble, data::label_matrix(dataset.validation), false)};
    write_json_atomic(file, json{{"format", kCellFormat},
                                 {"provenance", to_json(Provenance{hash, delta, seed})},
                                 {"key", key},
                                 {"grid", cell.grid},
                                 {"setting", cell.setting},
                                 {"validation", to_json(r.validation)}});
    flat[i] = std::move(r);
  });
  for (const auto& f : outcome.failures) log::error("cells: " + f);
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (flat[i]) outcome.results[i / n_seeds].push_back(std::move(*flat[i]));
  return outcome;
}

AblationRow pool_cell(const std::string& setting, const std::vector<CellResult>& results) {
  std::vector<const metrics::MetricsReport*> reports;
  for (const auto& r : results) reports.push_back(&r.validation);
  return pool_reports(setting, reports);
}

namespace {

std::string rows_csv(const std::vector<AblationRow>& rows, const std::string& head) {
  std::ostringstream out;
  out << head << "setting,n_seeds,mean_apr,std_apr,seed_std\n";
  for (const auto& r : rows)
    out << r.setting << ',' << r.n_seeds << ',' << format_double(r.mean_apr) << ',' << format_double(r.std_apr)
        << ',' << format_double(r.seed_std) << '\n';
  return out.str();
}

}  // namespace

AblationOutcome run_ablations(const ExperimentConfig& config, const std::vector<std::string>& grids) {
  config.validate();
  const fs::path out = config.output_dir();
  const std::string head = "# config_hash=" + config_hash(config) + " delta=" + json(config.ablation.delta).dump() +
                           " seeds=" + seeds_text(config.seeds) + "\n";
  AblationOutcome outcome;
  for (const auto& grid : grids) {
    const auto cells = ablation_cells(config, grid);
    auto run = run_cells(config, cells, out / "ablations");
    AblationTable table{grid, {}};
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!run.results[c].empty()) table.rows.push_back(pool_cell(cells[c].setting, run.results[c]));
    for (auto& f : run.failures) outcome.failures.push_back(grid + ": " + f);
    write_text_atomic(out / ("ablation_" + grid + ".csv"), rows_csv(table.rows, head));
    outcome.tables.push_back(std::move(table));
  }
  return outcome;
}

std::vector<std::size_t> search_grid(const SearchConfig& search) {
  std::vector<std::size_t> grid;
  for (std::size_t v = search.grid_min; v <= search.grid_max; v += search.grid_step) grid.push_back(v);
  if (grid.empty() || grid.back() != search.grid_max) grid.push_back(search.grid_max);
  return grid;
}

std::vector<SearchSample> random_search(const SearchConfig& search, std::size_t n_samples, std::uint64_t seed,
                                        gate::AttentionKind kind) {
  const auto grid = search_grid(search);
  std::mt19937_64 rng(seed);
  const auto draw = [&] { return grid[rng() % grid.size()]; };
  std::vector<SearchSample> out;
  while (out.size() < n_samples) {
    SearchSample s;
    s.context_dim = draw();
    s.attention_dim = draw();
    s.encoding_dim = draw();
    if (kind == gate::AttentionKind::dot && s.encoding_dim != s.context_dim) continue;
    out.push_back(s);
  }
  return out;
}

SearchOutcome run_search(const ExperimentConfig& config, bool evaluate) {
  config.validate();
  const fs::path out = config.output_dir();
  SearchOutcome outcome;
  outcome.samples = random_search(config.search, config.search.samples, config.search.seed, config.search.attention);

  std::vector<Cell> cells;
  MaesVariant base = config.primary_variant() ? *config.primary_variant() : MaesVariant{};
  base.attention = config.search.attention;
  for (std::size_t i = 0; i < outcome.samples.size(); ++i) {
    const auto& s = outcome.samples[i];
    EnsembleDims dims = config.ensemble;
    dims.context_dim = s.context_dim;
    dims.attention_dim = s.attention_dim;
    dims.encoding_dim = s.encoding_dim;
    cells.push_back({"search", "sample_" + std::to_string(i), base, dims});
  }
  std::vector<std::optional<AblationRow>> rows(cells.size());
  if (evaluate) {
    auto run = run_cells(config, cells, out / "search");
    outcome.failures = std::move(run.failures);
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!run.results[c].empty()) {
        rows[c] = pool_cell(cells[c].setting, run.results[c]);
        outcome.rows.push_back(*rows[c]);
      }
  }

  std::ostringstream csv;
  csv << "# config_hash=" << config_hash(config) << " search_seed=" << config.search.seed
      << " delta=" << json(config.ablation.delta).dump() << " seeds=" << seeds_text(config.seeds) << "\n";
  csv << "sample,attention,context_dim,attention_dim,encoding_dim";
  if (evaluate) csv << ",n_seeds,mean_apr,std_apr,seed_std";
  csv << '\n';
  for (std::size_t i = 0; i < outcome.samples.size(); ++i) {
    const auto& s = outcome.samples[i];
    csv << i << ',' << gate::to_string(config.search.attention) << ',' << s.context_dim << ',' << s.attention_dim
        << ',' << s.encoding_dim;
    if (evaluate) {
      if (rows[i])
        csv << ',' << rows[i]->n_seeds << ',' << format_double(rows[i]->mean_apr) << ','
            << format_double(rows[i]->std_apr) << ',' << format_double(rows[i]->seed_std);
      else
        csv << ",0,,,";
    }
    csv << '\n';
  }
  write_text_atomic(out / "search.csv", csv.str());
  return outcome;
}

}  // namespace maeslab::exp
