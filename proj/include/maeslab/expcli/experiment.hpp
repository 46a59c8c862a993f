// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "maeslab/baselines/baselines.hpp"
#include "maeslab/datagen/datagen.hpp"
#include "maeslab/expcli/artifacts.hpp"
#include "maeslab/expcli/config.hpp"
#include "maeslab/maes/model.hpp"
#include "maeslab/metrics/metrics.hpp"

namespace maeslab::exp {

inline constexpr const char* kPointFormat = "maeslab-point/1";
inline constexpr const char* kCellFormat = "maeslab-cell/1";

/// Seed streams derived from a run seed with mix_seed.
inline constexpr std::uint64_t kArchitectureStream = 101;
inline constexpr std::uint64_t kPoolStream = 102;
inline constexpr std::uint64_t kMaesInitStream = 103;
inline constexpr std::uint64_t kMaesTrainStream = 104;

/// Hidden sizes of the pool, drawn uniformly from [hidden_min, hidden_max].
std::vector<seq::ExpertSpec> sample_pool_specs(const PoolConfig& pool, std::mt19937_64& rng);
/// `count` distinct indices from [0, pool_size), in draw order.
std::vector<std::size_t> sample_expert_indices(std::size_t pool_size, std::size_t count, std::mt19937_64& rng);

/// Architecture draw of one run: the pool specs and the pool members whose
/// architectures the MAES experts reuse.
struct Architecture {
  std::vector<seq::ExpertSpec> pool;
  std::vector<std::size_t> experts;
};
Architecture sample_architecture(const ExperimentConfig& config, std::uint64_t seed, std::size_t num_experts);

struct ModelScore {
  std::string name;
  metrics::MetricsReport report;
};

struct VariantStats {
  std::string name;
  std::vector<std::size_t> expert_indices;
  /// Mean off-diagonal Pearson r of the MAES experts' test predictions.
  double expert_correlation = 0.0;
  /// The same for the pool members with the experts' architectures.
  double pool_correlation = 0.0;
  long best_epoch = -1;
  double best_validation_apr = 0.0;
};

struct PointMetrics {
  std::vector<ModelScore> models;  // roster order
  std::vector<VariantStats> variants;
  double pool_correlation = 0.0;  // whole pool
  std::vector<double> pool_test_apr;  // step-averaged test APR per member

  const ModelScore* find(const std::string& name) const;
};

struct PoolSummary {
  seq::ExpertSpec spec;
  std::uint64_t init_seed = 0;
  std::uint64_t fit_seed = 0;
  long best_epoch = -1;
  double best_validation_apr = 0.0;
};

struct PointResult {
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string point_key;
  std::vector<PoolSummary> pool;
  PointMetrics metrics;
};

nlohmann::json to_json(const metrics::MetricsReport& report);
metrics::MetricsReport metrics_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PointResult& result, const Provenance& provenance);
PointResult point_result_from_json(const nlohmann::json& j);

/// Hash of the settings that determine one sweep point's results.
std::string point_key(const ExperimentConfig& config, double delta, std::uint64_t seed);
std::string point_dir_name(double delta, std::uint64_t seed);

/// Everything needed to evaluate a trained point and write its reports.
struct TrainedMaes {
  std::string name;
  maes::MaesModel model;
  std::vector<std::size_t> expert_indices;
};

struct PointModels {
  std::vector<seq::LstmExpert> pool;
  std::size_t best_single = 0;
  std::vector<std::size_t> selection;
  std::optional<baselines::StackingWeights> global_stacking;
  std::optional<baselines::StackingWeights> stepwise_stacking;
  std::vector<TrainedMaes> maes;
};

/// Test-split predictions of every roster model plus the MAES internals.
struct PointPredictions {
  std::vector<std::pair<std::string, Series>> models;
  std::vector<Series> pool;
  struct MaesParts {
    std::string name;
    std::vector<Series> experts;
    gate::GateWeights alpha;
  };
  std::vector<MaesParts> maes;
};

PointPredictions predict_point(const ExperimentConfig& config, const PointModels& models,
                               const data::Dataset& dataset);
PointMetrics score_point(const ExperimentConfig& config, const PointModels& models, const PointPredictions& preds,
                         const data::Dataset& dataset);

/// Writes attention weights (N x T x M), correlation matrices, per-step APR
/// curves and prediction traces as CSV files into `dir`.
void emit_reports(const ExperimentConfig& config, const PointPredictions& preds, const PointMetrics& metrics,
                  const data::Dataset& dataset, const Provenance& provenance, const std::filesystem::path& dir);

/// Generates the dataset, trains pool, baselines and MAES variants, writes
/// checkpoints and reports under `dir`, and writes result.json last.
PointResult run_point(const ExperimentConfig& config, double delta, std::uint64_t seed,
                      const std::filesystem::path& dir, std::size_t threads = 1);

/// Loads the models saved by run_point from `dir`.
struct LoadedPoint {
  ExperimentConfig config;
  double delta = 0.0;
  std::uint64_t seed = 0;
  PointModels models;
};
LoadedPoint load_point(const std::filesystem::path& dir);

/// The result of `dir` if it was completed under the same point key.
std::optional<PointResult> completed_point(const std::filesystem::path& dir, const std::string& key);

struct SeedRow {
  std::string model;
  double delta = 0.0;
  std::uint64_t seed = 0;
  double mean_apr = 0.0;
  double std_apr = 0.0;
};

/// Pooled over seeds. mean_apr averages the per-seed means; std_apr is the
/// std across steps of the seed-averaged per-step curve; seed_std is the
/// sample std of the per-seed means and sem = seed_std / sqrt(n_seeds).
struct SummaryRow {
  std::string model;
  double delta = 0.0;
  std::size_t n_seeds = 0;
  double mean_apr = 0.0;
  double std_apr = 0.0;
  double seed_std = 0.0;
  double sem = 0.0;
  /// Two-sided permutation p-value of the primary MAES variant against this
  /// model on the seed-averaged per-step curves; unset for the reference.
  std::optional<double> p_value;
  bool best_baseline = false;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::vector<SeedRow> per_seed;
  const SummaryRow* find(const std::string& model, double delta) const;
};

/// Seed-averaged per-step APR for one model at one delta, keyed by step.
std::vector<std::pair<std::size_t, double>> pooled_curve(const std::vector<const PointResult*>& points,
                                                         const std::string& model);
Summary build_summary(const ExperimentConfig& config, const std::vector<PointResult>& points);
std::string summary_csv(const Summary& summary, const ExperimentConfig& config);
std::string per_seed_csv(const Summary& summary, const ExperimentConfig& config);

struct SweepOutcome {
  Summary summary;
  std::vector<PointResult> points;
  std::vector<std::string> failures;
  std::size_t reused = 0;
};

/// Runs every (delta, seed) point, reusing points completed under the same
/// key, and writes summary.csv and summary_per_seed.csv. Failed points are
/// logged and listed; the sweep carries on.
SweepOutcome run_delta_sweep(const ExperimentConfig& config);

/// One MAES training evaluated on the validation split.
struct Cell {
  std::string grid;
  std::string setting;
  MaesVariant variant;
  EnsembleDims dims;
};

struct CellResult {
  std::uint64_t seed = 0;
  metrics::MetricsReport validation;
};

struct AblationRow {
  std::string setting;
  std::size_t n_seeds = 0;
  double mean_apr = 0.0;
  double std_apr = 0.0;
  double seed_std = 0.0;
};

struct AblationTable {
  std::string grid;
  std::vector<AblationRow> rows;
};

inline const std::vector<std::string>& ablation_grids() {
  static const std::vector<std::string> grids{"w_imp", "pretrain", "attention", "experts"};
  return grids;
}

std::vector<Cell> ablation_cells(const ExperimentConfig& config, const std::string& grid);

struct CellOutcome {
  std::vector<std::vector<CellResult>> results;  // [cell][seed]
  std::vector<std::string> failures;
};

/// Trains every cell for every seed at the ablation delta, reusing cached
/// cell results under `dir`.
CellOutcome run_cells(const ExperimentConfig& config, const std::vector<Cell>& cells, const std::filesystem::path& dir);

AblationRow pool_cell(const std::string& setting, const std::vector<CellResult>& results);

struct AblationOutcome {
  std::vector<AblationTable> tables;
  std::vector<std::string> failures;
};

/// Writes ablation_<grid>.csv for each requested grid.
AblationOutcome run_ablations(const ExperimentConfig& config, const std::vector<std::string>& grids);

struct SearchSample {
  std::size_t context_dim = 0;
  std::size_t attention_dim = 0;
  std::size_t encoding_dim = 0;
  bool operator==(const SearchSample&) const = default;
};

/// {grid_min, grid_min + step, ...} up to grid_max, plus grid_max itself.
std::vector<std::size_t> search_grid(const SearchConfig& search);
/// Uniform draws from search_grid for each dimension. For dot attention a
/// draw is repeated until encoding_dim equals context_dim.
std::vector<SearchSample> random_search(const SearchConfig& search, std::size_t n_samples, std::uint64_t seed,
                                        gate::AttentionKind kind);

struct SearchOutcome {
  std::vector<SearchSample> samples;
  std::vector<AblationRow> rows;  // empty unless evaluated
  std::vector<std::string> failures;
};

/// Writes search.csv; with `evaluate`, also trains MAES for every sample.
SearchOutcome run_search(const ExperimentConfig& config, bool evaluate);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Returns the
/// messages of tasks that threw, prefixed by their index.
std::vector<std::string> parallel_for(std::size_t n, std::size_t threads,
                                      const std::function<void(std::size_t)>& fn);

std::string format_double(double x);

}  // namespace maeslab::exp
