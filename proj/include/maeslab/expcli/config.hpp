// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "maeslab/baselines/baselines.hpp"
#include "maeslab/datagen/datagen.hpp"
#include "maeslab/gate/gate.hpp"
#include "maeslab/maes/train.hpp"
#include "maeslab/seqmodels/lstm.hpp"
#include "maeslab/seqmodels/train.hpp"

namespace maeslab::exp {

inline constexpr const char* kConfigFormat = "maeslab-experiment/1";

/// Baseline names accepted in the model roster.
inline constexpr const char* kBestSingle = "best_single";
inline constexpr const char* kStepwiseSelect = "stepwise_select";
inline constexpr const char* kAverage = "average";
inline constexpr const char* kGlobalStacking = "global_stacking";
inline constexpr const char* kStepwiseStacking = "stepwise_stacking";
const std::vector<std::string>& baseline_names();

/// Independently trained LSTMs; member hidden sizes are drawn uniformly
/// from [hidden_min, hidden_max].
struct PoolConfig {
  std::size_t size = 5;
  std::size_t hidden_min = 8;
  std::size_t hidden_max = 64;
  seq::CellVariant cell_variant = seq::CellVariant::standard;
  seq::FitOptions fit;  // fit.seed is ignored; member seeds derive from the run seed
};

struct EnsembleDims {
  std::size_t num_experts = 3;
  std::size_t context_dim = 16;
  std::size_t encoding_dim = 16;
  std::size_t attention_dim = 16;
};

/// A named MAES configuration in the roster. Shares the ensemble dimensions
/// and the epoch/batch/learning-rate settings of the experiment.
struct MaesVariant {
  std::string name = "maes";
  gate::AttentionKind attention = gate::AttentionKind::additive;
  maes::LossKind loss_kind = maes::LossKind::maes;
  maes::ImportanceKind importance = maes::ImportanceKind::squared_mass;
  double w_imp = 0.0;
  std::size_t pretrain_epochs = 0;

  bool operator==(const MaesVariant&) const = default;
};

struct MaesTraining {
  std::size_t epochs = 15;
  std::size_t batch_size = 20;
  double learning_rate = 0.01;
};

struct AblationConfig {
  double delta = 0.2;
  std::vector<double> w_imp;
  std::vector<std::size_t> pretrain_epochs;
  std::vector<gate::AttentionKind> attention;
  std::vector<std::size_t> expert_counts;
};

/// Uniform draws of gate dimensions from {min, min + step, ...} plus max.
struct SearchConfig {
  std::size_t samples = 20;
  std::size_t grid_min = 10;
  std::size_t grid_max = 1100;
  std::size_t grid_step = 20;
  gate::AttentionKind attention = gate::AttentionKind::additive;
  std::uint64_t seed = 0;
};

/// Settings that change where and how fast a run executes but never its
/// results. They are excluded from the config hash.
struct Execution {
  std::string output_dir = "runs/default";
  std::size_t threads = 1;
};

struct ExperimentConfig {
  std::string name = "default";
  data::ShiftConfig data;  // data.delta and data.seed are set per point
  std::vector<double> deltas;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::string> models;
  PoolConfig pool;
  EnsembleDims ensemble;
  MaesTraining maes;
  std::vector<MaesVariant> variants;
  baselines::StackingOptions stacking;
  std::size_t permutations = 10'000;
  std::size_t trace_sequences = 5;
  AblationConfig ablation;
  SearchConfig search;
  Execution execution;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  const MaesVariant* find_variant(const std::string& name) const;
  /// First MAES variant in the roster, the reference for p-values.
  const MaesVariant* primary_variant() const;
  bool has_baselines() const;
  std::filesystem::path output_dir() const { return execution.output_dir; }
};

/// Small but complete settings for quick runs (N=500, T=20).
ExperimentConfig toy_config();
/// The full protocol: 5000 sequences of 48 steps, a 20-model pool with hidden
/// sizes in [100, 1100] and the complete delta grid.
ExperimentConfig full_config();

std::vector<double> default_w_imp_grid();
std::vector<std::size_t> default_pretrain_grid(std::size_t epochs);

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys take their defaults; unknown keys are rejected. The result is
/// validated.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

nlohmann::json to_json(const seq::ExpertSpec& spec);
seq::ExpertSpec expert_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MaesVariant& v);

/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
/// Hash of everything except the execution section.
std::string config_hash(const ExperimentConfig& config);

/// Shift config for one sweep point.
data::ShiftConfig point_data_config(const ExperimentConfig& config, double delta, std::uint64_t seed);
maes::TrainConfig train_config(const ExperimentConfig& config, const MaesVariant& variant, std::uint64_t seed);
maes::EnsembleSpec ensemble_spec(const ExperimentConfig& config, const MaesVariant& variant,
                                 const std::vector<seq::ExpertSpec>& experts);

}  // namespace maeslab::exp
