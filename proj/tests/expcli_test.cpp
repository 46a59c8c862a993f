// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "maeslab/errors.hpp"
#include "maeslab/expcli/artifacts.hpp"
#include "maeslab/expcli/config.hpp"
#include "maeslab/expcli/experiment.hpp"
#include "maeslab/seqmodels/lstm.hpp"
#include "support/quiet_logs.hpp"

using namespace maeslab;
using namespace maeslab::exp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("maeslab_expcli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A result whose per-step APR is `base + 0.01 * t` on steps 1..T-1.
PointResult fake_point(const ExperimentConfig& config, double delta, std::uint64_t seed, double base) {
  PointResult r;
  r.delta = delta;
  r.seed = seed;
  double offset = 0.0;
  for (const auto& name : config.models) {
    metrics::MetricsReport rep;
    rep.skipped_steps = {0};
    for (std::size_t t = 1; t < 6; ++t) {
      rep.steps.push_back(t);
      rep.per_step_apr.push_back(base + offset + 0.01 * static_cast<double>(t));
    }
    rep.mean_apr = metrics::mean(rep.per_step_apr);
    rep.std_apr = metrics::population_std(rep.per_step_apr);
    r.metrics.models.push_back({name, rep});
    offset += 0.05;
  }
  return r;
}

}  // namespace

TEST_CASE("config JSON round trip is exact") {
  for (const auto& c : {toy_config(), full_config()}) {
    const auto j = to_json(c);
    const auto back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(to_json(back).dump() == j.dump());
    CHECK(config_hash(back) == config_hash(c));
  }
  auto c = toy_config();
  c.variants.push_back({"maes_dot", gate::AttentionKind::dot, maes::LossKind::bce,
                        maes::ImportanceKind::cv_squared, 0.3, 2});
  c.models.push_back("maes_dot");
  c.data.label_mode = data::LabelMode::bernoulli;
  c.stacking.param = baselines::StackingParam::unconstrained;
  c.deltas = {0.0, 0.025, 1.0 / 3.0};
  const auto back = config_from_json(json::parse(to_json(c).dump()));
  CHECK(back.deltas == c.deltas);
  CHECK(back.variants == c.variants);
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("config validation") {
  SUBCASE("full-scale delta grid is accepted") {
    auto c = toy_config();
    c.deltas = data::default_delta_grid();
    CHECK_NOTHROW(c.validate());
    CHECK_NOTHROW(full_config().validate());
  }
  SUBCASE("unknown keys are rejected") {
    auto j = to_json(toy_config());
    j["pool"]["hiden_max"] = 10;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    j = to_json(toy_config());
    j["extra"] = 1;
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
  }
  SUBCASE("missing keys take defaults") {
    const auto c = config_from_json(json{{"deltas", {0.0}}, {"models", {"average"}}});
    CHECK(c.seeds.size() == 3);
    CHECK(c.models == std::vector<std::string>{"average"});
  }
  SUBCASE("bad values") {
    const auto bad = [](auto mutate) {
      auto c = toy_config();
      mutate(c);
      CHECK_THROWS_AS(c.validate(), ConfigError);
    };
    bad([](ExperimentConfig& c) { c.deltas.clear(); });
    bad([](ExperimentConfig& c) { c.deltas = {-0.1}; });
    bad([](ExperimentConfig& c) { c.seeds = {1, 1}; });
    bad([](ExperimentConfig& c) { c.models.push_back("nonexistent"); });
    bad([](ExperimentConfig& c) { c.ensemble.num_experts = c.pool.size + 1; });
    bad([](ExperimentConfig& c) { c.pool.hidden_min = 0; });
    bad([](ExperimentConfig& c) { c.variants[0].name = "../escape"; });
    bad([](ExperimentConfig& c) { c.variants[0].pretrain_epochs = 99; });
    bad([](ExperimentConfig& c) { c.ablation.pretrain_epochs.push_back(16); });
    bad([](ExperimentConfig& c) { c.execution.threads = 0; });
    bad([](ExperimentConfig& c) {
      c.variants[0].attention = gate::AttentionKind::dot;
      c.ensemble.encoding_dim = c.ensemble.context_dim + 1;
    });
  }
}

TEST_CASE("config hash ignores execution settings only") {
  auto a = toy_config();
  auto b = a;
  b.execution.output_dir = "elsewhere";
  b.execution.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.pool.fit.learning_rate = 0.02;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("point keys isolate sweep points") {
  auto c = toy_config();
  CHECK(point_key(c, 0.0, 0) != point_key(c, 0.0, 1));
  CHECK(point_key(c, 0.0, 0) != point_key(c, 0.3, 0));
  auto more = c;
  more.seeds.push_back(9);
  more.deltas.push_back(0.4);
  CHECK(point_key(more, 0.0, 0) == point_key(c, 0.0, 0));
  more.maes.epochs = 3;
  CHECK(point_key(more, 0.0, 0) != point_key(c, 0.0, 0));
  CHECK(point_dir_name(0.025, 3) == "delta_0.025_seed_3");
}

TEST_CASE("ablation grids") {
  const auto c = toy_config();
  CHECK(ablation_cells(c, "w_imp").size() == 11);
  CHECK(ablation_cells(c, "pretrain").size() == 16);
  const auto att = ablation_cells(c, "attention");
  REQUIRE(att.size() == 4);
  std::vector<std::string> names;
  for (const auto& cell : att) names.push_back(cell.setting);
  CHECK(names == std::vector<std::string>{"additive", "concatenation", "dot", "general"});
  for (const auto& cell : att) CHECK(cell.variant.attention == gate::parse_attention_kind(cell.setting));
  const auto experts = ablation_cells(c, "experts");
  CHECK(std::any_of(experts.begin(), experts.end(), [](const Cell& e) { return e.dims.num_experts == 5; }));
  const auto full_experts = ablation_cells(full_config(), "experts");
  CHECK(std::any_of(full_experts.begin(), full_experts.end(),
                    [](const Cell& e) { return e.dims.num_experts == 5; }));
  CHECK_THROWS_AS(ablation_cells(c, "nope"), ConfigError);

  auto dotty = c;
  dotty.ensemble.encoding_dim = 7;
  for (const auto& cell : ablation_cells(dotty, "attention"))
    if (cell.variant.attention == gate::AttentionKind::dot) CHECK(cell.dims.encoding_dim == cell.dims.context_dim);
}

TEST_CASE("random search") {
  SearchConfig s;  // 10, 30, ..., 1090 and 1100
  const auto grid = search_grid(s);
  CHECK(grid.size() == 56);
  CHECK(grid.front() == 10);
  CHECK(grid[54] == 1090);
  CHECK(grid.back() == 1100);
  const std::set<std::size_t> members(grid.begin(), grid.end());

  for (auto kind : gate::all_attention_kinds()) {
    const auto samples = random_search(s, 20, 42, kind);
    CHECK(samples.size() == 20);
    for (const auto& x : samples) {
      CHECK(members.contains(x.context_dim));
      CHECK(members.contains(x.attention_dim));
      CHECK(members.contains(x.encoding_dim));
      if (kind == gate::AttentionKind::dot) CHECK(x.encoding_dim == x.context_dim);
    }
    CHECK(random_search(s, 20, 42, kind) == samples);
  }
  CHECK(random_search(s, 20, 1, gate::AttentionKind::additive) !=
        random_search(s, 20, 2, gate::AttentionKind::additive));

  SearchConfig exact{.samples = 3, .grid_min = 10, .grid_max = 50, .grid_step = 20};
  CHECK(search_grid(exact) == std::vector<std::size_t>{10, 30, 50});
}

TEST_CASE("architecture sampling") {
  auto c = toy_config();
  const auto a = sample_architecture(c, 3, 3);
  CHECK(a.pool.size() == c.pool.size);
  for (const auto& s : a.pool) {
    CHECK(s.hidden_dim >= c.pool.hidden_min);
    CHECK(s.hidden_dim <= c.pool.hidden_max);
  }
  CHECK(std::set<std::size_t>(a.experts.begin(), a.experts.end()).size() == 3);
  const auto five = sample_architecture(c, 3, 5);
  CHECK(std::equal(a.experts.begin(), a.experts.end(), five.experts.begin()));
  CHECK(five.pool == a.pool);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_expert_indices(2, 3, rng), ConfigError);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const auto dir = scratch("ckpt");
  data::ShiftConfig dc;
  dc.n_train = 40;
  dc.n_test = 20;
  dc.steps = 6;
  dc.window = 3;
  const auto ds = data::generate_dataset(dc);

  const seq::LstmExpert expert({.hidden_dim = 5}, dc.feature_dim, 17);
  write_json_atomic(dir / "lstm.json", lstm_checkpoint(expert, {"abc", 0.2, 4}));
  const auto loaded = lstm_from_checkpoint(read_json(dir / "lstm.json"));
  CHECK(loaded.spec() == expert.spec());
  CHECK(loaded.params().snapshot() == expert.params().snapshot());
  CHECK(seq::predict(loaded, ds.test).values == seq::predict(expert, ds.test).values);

  maes::EnsembleSpec spec;
  spec.experts = {{.hidden_dim = 3}, {.hidden_dim = 4, .cell_variant = seq::CellVariant::squashed}};
  spec.context_dim = 5;
  spec.encoding_dim = 6;
  spec.attention_dim = 7;
  spec.attention = gate::AttentionKind::general;
  const maes::MaesModel model(spec, dc.feature_dim, 9);
  write_json_atomic(dir / "maes.json", maes_checkpoint(model, maes::TrainConfig{}, {"abc", 0.2, 4}));
  const auto back = maes_from_checkpoint(read_json(dir / "maes.json"));
  CHECK(back.snapshot() == model.snapshot());
  CHECK(back.spec().attention == spec.attention);
  CHECK(maes::predict(back, ds.test).alpha.alpha == maes::predict(model, ds.test).alpha.alpha);

  auto broken = read_json(dir / "maes.json");
  broken["tensors"].erase(0);
  CHECK_THROWS_AS(maes_from_checkpoint(broken), FormatError);
  broken = read_json(dir / "lstm.json");
  broken["tensors"][0]["shape"] = {1, 1};
  CHECK_THROWS_AS(lstm_from_checkpoint(broken), FormatError);
  broken = read_json(dir / "lstm.json");
  broken["kind"] = "maes";
  CHECK_THROWS_AS(lstm_from_checkpoint(broken), FormatError);
  CHECK_THROWS_AS(read_json(dir / "missing.json"), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("artifact paths stay inside the output directory") {
  const auto dir = scratch("within");
  CHECK_NOTHROW(require_within(dir, dir / "points" / "a.json"));
  CHECK_THROWS_AS(require_within(dir, dir / ".." / "x.json"), ConfigError);
  CHECK_THROWS_AS(require_within(dir / "a", dir / "ab" / "x.json"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("summary table from sweep points") {
  auto c = toy_config();
  c.deltas = {0.0, 0.2};
  c.seeds = {0, 1};
  c.permutations = 200;
  std::vector<PointResult> points;
  for (double d : c.deltas)
    for (auto s : c.seeds) points.push_back(fake_point(c, d, s, 0.3 + 0.01 * static_cast<double>(s)));

  const auto summary = build_summary(c, points);
  CHECK(summary.rows.size() == 2 * c.models.size());
  for (const auto& m : c.models)
    for (double d : c.deltas) REQUIRE(summary.find(m, d) != nullptr);
  CHECK(summary.per_seed.size() == 4 * c.models.size());

  const auto* avg = summary.find("average", 0.0);
  CHECK(avg->n_seeds == 2);
  // model offsets are 0.05 apart; seed offsets 0.01
  CHECK(avg->mean_apr == doctest::Approx(0.3 + 0.005 + 0.10 + 0.03).epsilon(1e-12));
  CHECK(avg->seed_std == doctest::Approx(std::sqrt(0.00005)).epsilon(1e-9));
  CHECK(avg->sem == doctest::Approx(avg->seed_std / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(!summary.find("maes", 0.0)->p_value.has_value());
  CHECK(avg->p_value.has_value());
  // the last baseline in the roster has the largest offset
  CHECK(summary.find(kStepwiseStacking, 0.2)->best_baseline);
  CHECK(!summary.find(kAverage, 0.2)->best_baseline);

  const auto csv = summary_csv(summary, c);
  CHECK(csv.rfind("# config_hash=" + config_hash(c) + " seeds=0,1\n", 0) == 0);
  CHECK(csv == summary_csv(build_summary(c, points), c));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + static_cast<long>(summary.rows.size()));

  auto missing = points;
  missing.pop_back();
  CHECK(build_summary(c, missing).find("maes", 0.2)->n_seeds == 1);
}

TEST_CASE("point results round trip through JSON") {
  auto c = toy_config();
  auto p = fake_point(c, 0.3, 2, 0.4);
  p.point_key = point_key(c, 0.3, 2);
  p.pool.push_back({{.hidden_dim = 9}, 11, 12, 4, 0.5});
  p.metrics.variants.push_back({"maes", {2, 0, 1}, 0.25, 0.75, 3, 0.6});
  const auto j = to_json(p, {config_hash(c), 0.3, 2});
  const auto back = point_result_from_json(json::parse(j.dump()));
  CHECK(to_json(back, {config_hash(c), 0.3, 2}) == j);
  auto bad = j;
  bad["format"] = "other";
  CHECK_THROWS_AS(point_result_from_json(bad), FormatError);
}

TEST_CASE("parallel_for reports failures in index order") {
  std::vector<int> hit(20, 0);
  const auto errors = parallel_for(20, 4, [&](std::size_t i) {
    hit[i] = 1;
    if (i % 7 == 3) throw std::runtime_error("boom");
  });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK(errors == std::vector<std::string>{"task 3: boom", "task 10: boom", "task 17: boom"});
}

TEST_CASE("atomic writes leave no temporary files") {
  const auto dir = scratch("atomic");
  write_text_atomic(dir / "sub" / "a.txt", "one");
  write_text_atomic(dir / "sub" / "a.txt", "two");
  CHECK(read_text(dir / "sub" / "a.txt") == "two");
  CHECK(!fs::exists(dir / "sub" / "a.txt.tmp"));
  fs::remove_all(dir);
}

namespace {

ExperimentConfig tiny_config(const fs::path& out) {
  auto c = toy_config();
  c.name = "tiny";
  c.data.n_train = 60;
  c.data.n_test = 40;
  c.data.steps = 8;
  c.data.window = 3;
  c.deltas = {0.0, 0.2};
  c.seeds = {5};
  c.pool.size = 3;
  c.pool.hidden_min = 3;
  c.pool.hidden_max = 6;
  c.pool.fit.epochs = 2;
  c.ensemble.num_experts = 2;
  c.ensemble.context_dim = 4;
  c.ensemble.encoding_dim = 4;
  c.ensemble.attention_dim = 4;
  c.maes.epochs = 2;
  c.variants[0].pretrain_epochs = 1;
  c.permutations = 100;
  c.trace_sequences = 2;
  c.ablation.pretrain_epochs = {0, 2};
  c.ablation.w_imp = {0.0, 0.5};
  c.ablation.expert_counts = {1, 3};
  c.search.samples = 2;
  c.search.grid_min = 2;
  c.search.grid_max = 6;
  c.search.grid_step = 2;
  c.execution.output_dir = out.string();
  return c;
}

std::vector<std::string> csv_lines(const fs::path& file) {
  std::vector<std::string> lines;
  std::istringstream in(read_text(file));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<double> csv_numbers(const std::string& line, std::size_t skip) {
  std::vector<double> out;
  std::istringstream in(line);
  std::size_t col = 0;
  for (std::string cell; std::getline(in, cell, ','); ++col)
    if (col >= skip) out.push_back(std::stod(cell));
  return out;
}

}  // namespace

TEST_CASE("tiny sweep: resume, reruns, reports and provenance") {
  testing::QuietLogs quiet;
  const auto a = scratch("sweep_a");
  const auto b = scratch("sweep_b");
  const auto config = tiny_config(a);
  const auto hash = config_hash(config);

  const auto first = run_delta_sweep(config);
  REQUIRE(first.failures.empty());
  CHECK(first.reused == 0);
  CHECK(first.summary.rows.size() == 2 * config.models.size());
  const auto summary = read_text(a / "summary.csv");

  SUBCASE("resume reuses completed points") {
    const auto again = run_delta_sweep(config);
    CHECK(again.reused == 2);
    CHECK(read_text(a / "summary.csv") == summary);
  }
  SUBCASE("a fresh rerun is byte-identical") {
    auto other = config;
    other.execution.output_dir = b.string();
    other.execution.threads = 2;
    run_delta_sweep(other);
    for (const char* f : {"summary.csv", "summary_per_seed.csv"}) CHECK(read_text(b / f) == read_text(a / f));
    const auto pa = a / "points" / point_dir_name(0.2, 5);
    const auto pb = b / "points" / point_dir_name(0.2, 5);
    for (const auto& entry : fs::recursive_directory_iterator(pa)) {
      if (!entry.is_regular_file()) continue;
      INFO(entry.path().string());
      CHECK(read_text(entry.path()) == read_text(pb / fs::relative(entry.path(), pa)));
    }
  }
  SUBCASE("reports regenerate from checkpoints") {
    const auto point = a / "points" / point_dir_name(0.2, 5);
    const auto lp = load_point(point);
    CHECK(config_hash(lp.config) == hash);
    const auto ds = data::generate_dataset(point_data_config(lp.config, lp.delta, lp.seed));
    const auto preds = predict_point(lp.config, lp.models, ds);
    const auto metrics = score_point(lp.config, lp.models, preds, ds);
    const auto regen = b / "regen";
    emit_reports(lp.config, preds, metrics, ds, {config_hash(lp.config), lp.delta, lp.seed}, regen);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(point / "report")) {
      INFO(entry.path().filename().string());
      CHECK(read_text(entry.path()) == read_text(regen / entry.path().filename()));
      ++files;
    }
    CHECK(files == 5);  // attention, two correlation files, curves, traces

    const auto stored = point_result_from_json(read_json(point / "result.json"));
    for (std::size_t i = 0; i < metrics.models.size(); ++i) {
      CHECK(metrics.models[i].name == stored.metrics.models[i].name);
      CHECK(metrics.models[i].report.per_step_apr == stored.metrics.models[i].report.per_step_apr);
    }
  }
  SUBCASE("report contents") {
    const auto report = a / "points" / point_dir_name(0.0, 5) / "report";
    const auto att = csv_lines(report / "attention_maes.csv");
    REQUIRE(att.size() == 2 + config.data.n_test * config.data.steps);
    for (std::size_t i = 2; i < att.size(); ++i) {
      const auto row = csv_numbers(att[i], 2);
      REQUIRE(row.size() == config.ensemble.num_experts);
      double total = 0.0;
      for (double v : row) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
    for (const char* f : {"correlation_pool.csv", "correlation_maes.csv"}) {
      const auto lines = csv_lines(report / f);
      std::vector<std::vector<double>> m;
      for (std::size_t i = 2; i < lines.size(); ++i) m.push_back(csv_numbers(lines[i], 1));
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) CHECK(m[i][j] == m[j][i]);
    }
  }
  SUBCASE("every output file carries the config hash") {
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file()) continue;
      INFO(entry.path().string());
      const auto name = entry.path().filename().string();
      if (name == "config.json") continue;  // the config itself
      CHECK(read_text(entry.path()).find(hash) != std::string::npos);
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("failed points are reported and the sweep carries on") {
  testing::QuietLogs quiet;
  const auto dir = scratch("sweep_fail");
  auto config = tiny_config(dir);
  config.data.sparsity = 0.0;  // every score ties, so labelling fails
  const auto outcome = run_delta_sweep(config);
  CHECK(outcome.failures.size() == 2);
  CHECK(outcome.points.empty());
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(read_json(dir / "sweep.json").at("points").at(0).at("status") == "failed");
  fs::remove_all(dir);
}

TEST_CASE("ablation and search tables") {
  testing::QuietLogs quiet;
  const auto dir = scratch("ablate");
  const auto config = tiny_config(dir);
  const auto outcome = run_ablations(config, {"w_imp", "attention", "experts"});
  REQUIRE(outcome.failures.empty());
  REQUIRE(outcome.tables.size() == 3);
  CHECK(outcome.tables[0].rows.size() == 2);
  CHECK(outcome.tables[1].rows.size() == 4);
  CHECK(outcome.tables[2].rows.size() == 2);
  CHECK(csv_lines(dir / "ablation_attention.csv").size() == 2 + 4);
  for (const auto& t : outcome.tables)
    for (const auto& r : t.rows) {
      CHECK(r.mean_apr >= 0.0);
      CHECK(r.mean_apr <= 1.0);
    }
  const auto before = read_text(dir / "ablation_w_imp.csv");
  run_ablations(config, {"w_imp"});
  CHECK(read_text(dir / "ablation_w_imp.csv") == before);

  const auto search = run_search(config, true);
  CHECK(search.samples.size() == 2);
  CHECK(search.rows.size() == 2);
  CHECK(csv_lines(dir / "search.csv").size() == 2 + 2);
  fs::remove_all(dir);
}
