// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "maeslab/diffcore/params.hpp"
#include "maeslab/maes/model.hpp"
#include "maeslab/maes/train.hpp"
#include "maeslab/seqmodels/lstm.hpp"

// Checkpoints and file helpers. See docs/formats.md.

namespace maeslab::exp {

inline constexpr const char* kCheckpointFormat = "maeslab-checkpoint/1";

/// Identifies the run that produced an artifact.
struct Provenance {
  std::string config_hash;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const Provenance& p);
std::string provenance_comment(const Provenance& p);

/// Writes to a sibling temporary file, then renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);
/// Throws FormatError when the file is missing or is not valid JSON.
nlohmann::json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Throws ConfigError unless `path` stays inside `root` after normalization.
void require_within(const std::filesystem::path& root, const std::filesystem::path& path);

/// [{"name", "shape", "values"}, ...] in insertion order, names prefixed.
nlohmann::json tensors_to_json(const diff::ParamSet& params, const std::string& prefix = "");
/// Copies values by name; every tensor of `params` must be present with the
/// same shape.
void load_tensors(diff::ParamSet& params, const nlohmann::json& tensors, const std::string& prefix = "");

nlohmann::json lstm_checkpoint(const seq::LstmExpert& expert, const Provenance& provenance);
seq::LstmExpert lstm_from_checkpoint(const nlohmann::json& j);

nlohmann::json to_json(const maes::EnsembleSpec& spec);
maes::EnsembleSpec ensemble_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const maes::TrainConfig& config);

nlohmann::json maes_checkpoint(const maes::MaesModel& model, const maes::TrainConfig& config,
                               const Provenance& provenance);
maes::MaesModel maes_from_checkpoint(const nlohmann::json& j);

}  // namespace maeslab::exp
