// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "maeslab/datagen/datagen.hpp"

// Line-delimited dataset files. See docs/formats.md.

namespace maeslab::data {

inline constexpr const char* kDatasetFormat = "maeslab-dataset/1";

nlohmann::json to_json(const ShiftConfig& config);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
ShiftConfig shift_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ShiftWeights& weights);
ShiftWeights shift_weights_from_json(const nlohmann::json& j);

enum class Split { train, validation, test };
std::string to_string(Split split);

void write_split(std::ostream& out, const Dataset& ds, Split split);
/// Writes train.jsonl, validation.jsonl and test.jsonl into `dir`.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
/// Throws FormatError on malformed input.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace maeslab::data
