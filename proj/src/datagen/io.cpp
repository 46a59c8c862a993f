// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/datagen/io.hpp"

#include <fstream>
#include <set>

#include "maeslab/errors.hpp"

namespace maeslab::data {

using nlohmann::json;

namespace {

std::vector<SequenceInstance>& split_of(Dataset& ds, Split s) {
  return s == Split::train ? ds.train : s == Split::validation ? ds.validation : ds.test;
}
const std::vector<SequenceInstance>& split_of(const Dataset& ds, Split s) {
  return s == Split::train ? ds.train : s == Split::validation ? ds.validation : ds.test;
}
LabelCalibration& calibration_of(Dataset& ds, Split s) {
  return s == Split::train       ? ds.train_calibration
         : s == Split::validation ? ds.validation_calibration
                                  : ds.test_calibration;
}
const LabelCalibration& calibration_of(const Dataset& ds, Split s) {
  return s == Split::train       ? ds.train_calibration
         : s == Split::validation ? ds.validation_calibration
                                  : ds.test_calibration;
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const ShiftConfig& c) {
  return json{{"delta", c.delta},
              {"feature_dim", c.feature_dim},
              {"window", c.window},
              {"steps", c.steps},
              {"n_train", c.n_train},
              {"n_test", c.n_test},
              {"positive_ratio", c.positive_ratio},
              {"sparsity", c.sparsity},
              {"validation_fraction", c.validation_fraction},
              {"label_mode", to_string(c.label_mode)},
              {"seed", c.seed}};
}

ShiftConfig shift_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("shift config must be a JSON object");
  static const std::set<std::string> known{"delta",  "feature_dim",    "window",   "steps",
                                           "n_train", "n_test",        "positive_ratio",
                                           "sparsity", "validation_fraction", "label_mode", "seed"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("shift config: unknown key '" + key + "'");
  ShiftConfig c;
  try {
    c.delta = j.value("delta", c.delta);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.window = j.value("window", c.window);
    c.steps = j.value("steps", c.steps);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    c.positive_ratio = j.value("positive_ratio", c.positive_ratio);
    c.sparsity = j.value("sparsity", c.sparsity);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    if (j.contains("label_mode")) c.label_mode = parse_label_mode(j.at("label_mode").get<std::string>());
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("shift config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ShiftWeights& w) {
  json window = json::array(), feature = json::array();
  for (std::size_t t = 0; t < w.steps; ++t) {
    const auto wl = w.window_at(t);
    const auto wd = w.feature_at(t);
    window.push_back(std::vector<double>(wl.begin(), wl.end()));
    feature.push_back(std::vector<double>(wd.begin(), wd.end()));
  }
  return json{{"window", std::move(window)}, {"feature", std::move(feature)}};
}

ShiftWeights shift_weights_from_json(const json& j) {
  const auto window = field<std::vector<std::vector<double>>>(j, "window", "shift weights");
  const auto feature = field<std::vector<std::vector<double>>>(j, "feature", "shift weights");
  if (window.size() != feature.size() || window.empty())
    throw FormatError("shift weights: window and feature tables must have the same nonzero step count");
  ShiftWeights w;
  w.steps = window.size();
  w.window = window[0].size();
  w.feature_dim = feature[0].size();
  for (std::size_t t = 0; t < w.steps; ++t) {
    if (window[t].size() != w.window || feature[t].size() != w.feature_dim)
      throw FormatError("shift weights: ragged row at step " + std::to_string(t));
    w.window_weights.insert(w.window_weights.end(), window[t].begin(), window[t].end());
    w.feature_weights.insert(w.feature_weights.end(), feature[t].begin(), feature[t].end());
  }
  return w;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

void write_split(std::ostream& out, const Dataset& ds, Split split) {
  const auto& seqs = split_of(ds, split);
  const auto& cal = calibration_of(ds, split);
  const json header{{"format", kDatasetFormat},
                    {"split", to_string(split)},
                    {"count", seqs.size()},
                    {"n_classes", ds.n_classes},
                    {"config", to_json(ds.config)},
                    {"label_calibration", {{"mode", to_string(cal.mode)}, {"value", cal.value}}},
                    {"shift_weights", to_json(ds.weights)}};
  out << header.dump() << '\n';
  for (const auto& seq : seqs) {
    json rec{{"x", seq.x}, {"y", seq.y}, {"static", seq.static_features}};
    out << rec.dump() << '\n';
  }
  if (!out) throw FormatError("write_split: stream failure while writing " + to_string(split));
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (auto s : {Split::train, Split::validation, Split::test}) {
    const auto path = dir / (to_string(s) + ".jsonl");
    const auto tmp = dir / (to_string(s) + ".jsonl.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
      write_split(out, ds, s);
    }
    std::filesystem::rename(tmp, path);
  }
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  bool have_header = false;
  for (auto s : {Split::train, Split::validation, Split::test}) {
    const auto path = dir / (to_string(s) + ".jsonl");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    json header;
    try {
      header = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": header: " + e.what());
    }
    const std::string where = path.string();
    if (field<std::string>(header, "format", where) != kDatasetFormat)
      throw FormatError(where + ": unsupported format " + header["format"].dump());
    if (field<std::string>(header, "split", where) != to_string(s))
      throw FormatError(where + ": header names split " + header["split"].dump());
    ShiftConfig config;
    try {
      config = shift_config_from_json(header.at("config"));
    } catch (const std::exception& e) {
      throw FormatError(where + ": config: " + e.what());
    }
    if (!have_header) {
      ds.config = config;
      ds.weights = shift_weights_from_json(header.at("shift_weights"));
      ds.n_classes = field<std::size_t>(header, "n_classes", where);
      have_header = true;
    } else if (to_json(config) != to_json(ds.config)) {
      throw FormatError(where + ": config differs from the train split's config");
    }
    const auto& cal = header.at("label_calibration");
    calibration_of(ds, s) = {parse_label_mode(field<std::string>(cal, "mode", where)),
                             field<double>(cal, "value", where)};

    const auto count = field<std::size_t>(header, "count", where);
    auto& seqs = split_of(ds, s);
    seqs.reserve(count);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::string at = where + ":" + std::to_string(lineno);
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception& e) {
        throw FormatError(at + ": " + e.what());
      }
      SequenceInstance seq;
      seq.steps = config.steps;
      seq.feature_dim = config.feature_dim;
      seq.x = field<std::vector<double>>(rec, "x", at);
      seq.y = field<std::vector<std::uint8_t>>(rec, "y", at);
      seq.static_features = rec.contains("static") ? field<std::vector<double>>(rec, "static", at)
                                                   : std::vector<double>{};
      if (seq.x.size() != seq.steps * seq.feature_dim || seq.y.size() != seq.steps)
        throw FormatError(at + ": record has " + std::to_string(seq.x.size()) + " features and " +
                          std::to_string(seq.y.size()) + " labels, expected " +
                          std::to_string(seq.steps * seq.feature_dim) + " and " + std::to_string(seq.steps));
      for (auto v : seq.y)
        if (v > 1) throw FormatError(at + ": label outside {0, 1}");
      seqs.push_back(std::move(seq));
    }
    if (seqs.size() != count)
      throw FormatError(where + ": header count " + std::to_string(count) + " but " +
                        std::to_string(seqs.size()) + " records");
  }
  return ds;
}

}  // namespace maeslab::data
