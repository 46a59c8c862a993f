// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maeslab/datagen/io.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/expcli/artifacts.hpp"
#include "maeslab/expcli/config.hpp"
#include "maeslab/expcli/experiment.hpp"
#include "maeslab/log.hpp"

namespace fs = std::filesystem;
using namespace maeslab;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::string preset = "toy";
  std::string out;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "Built-in config used when --config is absent")
      ->check(CLI::IsMember({"toy", "full"}));
  cmd->add_option("-o,--out", c.out, "Output directory (overrides the config)");
  cmd->add_option("-j,--threads", c.threads, "Worker threads (overrides the config)");
  cmd->add_option("-s,--seed", c.seed, "Run this seed only");
  cmd->add_option("--log-level", c.log_level, "debug, info, warning, error or off")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "off"}));
}

log::Level parse_level(const std::string& s) {
  if (s == "debug") return log::Level::debug;
  if (s == "warning") return log::Level::warning;
  if (s == "error") return log::Level::error;
  if (s == "off") return log::Level::off;
  return log::Level::info;
}

exp::ExperimentConfig resolve(const Common& c) {
  log::set_level(parse_level(c.log_level));
  auto config = c.config_path.empty() ? (c.preset == "full" ? exp::full_config() : exp::toy_config())
                                      : exp::load_config(c.config_path);
  if (!c.out.empty()) config.execution.output_dir = c.out;
  if (c.threads > 0) config.execution.threads = c.threads;
  if (c.seed) config.seeds = {*c.seed};
  config.validate();
  return config;
}

double pick_delta(const exp::ExperimentConfig& config, const std::optional<double>& delta) {
  return delta ? *delta : config.deltas.front();
}

void print_rows(const std::vector<exp::SummaryRow>& rows) {
  std::printf("%-20s %7s %6s %9s %9s %9s %9s\n", "model", "delta", "seeds", "mean_apr", "std_apr", "sem", "p");
  for (const auto& r : rows) {
    std::printf("%-20s %7.3f %6zu %9.4f %9.4f %9.4f %9s%s\n", r.model.c_str(), r.delta, r.n_seeds, r.mean_apr,
                r.std_apr, r.sem, r.p_value ? exp::format_double(*r.p_value).c_str() : "-",
                r.best_baseline ? "  (best baseline)" : "");
  }
}

void print_table(const exp::AblationTable& t) {
  std::printf("[%s]\n%-16s %6s %9s %9s %9s\n", t.grid.c_str(), "setting", "seeds", "mean_apr", "std_apr",
              "seed_std");
  for (const auto& r : t.rows)
    std::printf("%-16s %6zu %9.4f %9.4f %9.4f\n", r.setting.c_str(), r.n_seeds, r.mean_apr, r.std_apr, r.seed_std);
}

json metrics_json(const exp::PointMetrics& m, const exp::Provenance& prov) {
  json models = json::array();
  for (const auto& s : m.models) models.push_back(json{{"name", s.name}, {"test", exp::to_json(s.report)}});
  json variants = json::array();
  for (const auto& v : m.variants)
    variants.push_back(json{{"name", v.name},
                            {"expert_indices", v.expert_indices},
                            {"expert_correlation", v.expert_correlation},
                            {"pool_correlation", v.pool_correlation}});
  return json{{"provenance", exp::to_json(prov)},
              {"pool_correlation", m.pool_correlation},
              {"pool_test_apr", m.pool_test_apr},
              {"models", models},
              {"variants", variants}};
}

int run(int argc, char** argv) {
  CLI::App app{"maeslab: mixtures of LSTM experts under temporal conditional shift"};
  app.require_subcommand(1);

  Common common;
  std::optional<double> delta;
  std::string point_dir;
  std::string report_to;
  std::vector<std::string> grids;
  bool evaluate = false;
  std::string config_out;

  auto* gen = app.add_subcommand("gen-data", "Generate a dataset as JSONL files");
  add_common(gen, common);
  gen->add_option("-d,--delta", delta, "Shift magnitude (default: first delta of the config)");

  auto* train = app.add_subcommand("train", "Train pool, baselines and MAES for one (delta, seed) point");
  add_common(train, common);
  train->add_option("-d,--delta", delta, "Shift magnitude (default: first delta of the config)");

  auto* eval = app.add_subcommand("evaluate", "Re-evaluate a trained point from its checkpoints");
  eval->add_option("-p,--point", point_dir, "Point directory written by train or sweep-delta")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--log-level", common.log_level, "Log level");

  auto* sweep = app.add_subcommand("sweep-delta", "Run every (delta, seed) point and write the summary table");
  add_common(sweep, common);

  auto* ablate = app.add_subcommand("ablate", "Run ablation grids on validation data");
  add_common(ablate, common);
  ablate->add_option("-g,--grid", grids, "w_imp, pretrain, attention or experts (default: all)")
      ->check(CLI::IsMember(exp::ablation_grids()));

  auto* search = app.add_subcommand("search", "Random search over gate dimensions");
  add_common(search, common);
  search->add_flag("--evaluate", evaluate, "Train and score every sampled configuration");

  auto* report = app.add_subcommand("report", "Regenerate report files of a point from its checkpoints");
  report->add_option("-p,--point", point_dir, "Point directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--to", report_to, "Destination (default: <point>/report)");
  report->add_option("--log-level", common.log_level, "Log level");

  auto* show = app.add_subcommand("config", "Write a built-in config as JSON");
  show->add_option("--preset", common.preset, "toy or full")->check(CLI::IsMember({"toy", "full"}));
  show->add_option("-o,--out", config_out, "File to write (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    const auto config = resolve(common);
    const double d = pick_delta(config, delta);
    const fs::path root = config.output_dir();
    for (auto s : config.seeds) {
      const auto dir = root / "data" / exp::point_dir_name(d, s);
      exp::require_within(root, dir);
      const auto ds = data::generate_dataset(exp::point_data_config(config, d, s));
      data::write_dataset(ds, dir);
      exp::write_json_atomic(dir / "provenance.json", exp::to_json(exp::Provenance{exp::config_hash(config), d, s}));
      std::printf("wrote %s (%zu/%zu/%zu sequences)\n", dir.string().c_str(), ds.train.size(), ds.validation.size(),
                  ds.test.size());
    }
    return 0;
  }

  if (*train) {
    const auto config = resolve(common);
    const double d = pick_delta(config, delta);
    const fs::path root = config.output_dir();
    for (auto s : config.seeds) {
      const auto dir = root / "points" / exp::point_dir_name(d, s);
      exp::require_within(root, dir);
      const auto r = exp::run_point(config, d, s, dir, config.execution.threads);
      std::printf("%s\n", dir.string().c_str());
      for (const auto& m : r.metrics.models)
        std::printf("  %-20s mean_apr %.4f  std_apr %.4f\n", m.name.c_str(), m.report.mean_apr, m.report.std_apr);
    }
    return 0;
  }

  if (*eval || *report) {
    log::set_level(parse_level(common.log_level));
    const fs::path dir = point_dir;
    const auto lp = exp::load_point(dir);
    const auto dataset = data::generate_dataset(exp::point_data_config(lp.config, lp.delta, lp.seed));
    const exp::Provenance prov{exp::config_hash(lp.config), lp.delta, lp.seed};
    const auto preds = exp::predict_point(lp.config, lp.models, dataset);
    const auto metrics = exp::score_point(lp.config, lp.models, preds, dataset);
    if (*eval) {
      exp::write_json_atomic(dir / "evaluation.json", metrics_json(metrics, prov));
      for (const auto& m : metrics.models)
        std::printf("%-20s mean_apr %.4f  std_apr %.4f\n", m.name.c_str(), m.report.mean_apr, m.report.std_apr);
    } else {
      const fs::path to = report_to.empty() ? dir / "report" : fs::path(report_to);
      exp::emit_reports(lp.config, preds, metrics, dataset, prov, to);
      std::printf("wrote reports to %s\n", to.string().c_str());
    }
    return 0;
  }

  if (*sweep) {
    const auto outcome = exp::run_delta_sweep(resolve(common));
    print_rows(outcome.summary.rows);
    std::printf("%zu points, %zu reused, %zu failed\n", outcome.points.size() + outcome.failures.size(),
                outcome.reused, outcome.failures.size());
    return outcome.failures.empty() ? 0 : 1;
  }

  if (*ablate) {
    const auto config = resolve(common);
    const auto outcome = exp::run_ablations(config, grids.empty() ? exp::ablation_grids() : grids);
    for (const auto& t : outcome.tables) print_table(t);
    for (const auto& f : outcome.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
    return outcome.failures.empty() ? 0 : 1;
  }

  if (*search) {
    const auto config = resolve(common);
    const auto outcome = exp::run_search(config, evaluate);
    std::printf("%zu samples written to %s\n", outcome.samples.size(),
                (config.output_dir() / "search.csv").string().c_str());
    for (const auto& f : outcome.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
    return outcome.failures.empty() ? 0 : 1;
  }

  if (*show) {
    const auto text = exp::to_json(common.preset == "full" ? exp::full_config() : exp::toy_config()).dump(2) + "\n";
    if (config_out.empty())
      std::cout << text;
    else
      exp::write_text_atomic(config_out, text);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
