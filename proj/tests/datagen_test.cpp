// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "maeslab/datagen/datagen.hpp"
#include "maeslab/datagen/io.hpp"
#include "maeslab/errors.hpp"

using namespace maeslab;
using namespace maeslab::data;

namespace {

ShiftConfig small_config(double delta, std::uint64_t seed = 3) {
  ShiftConfig c;
  c.delta = delta;
  c.steps = 20;
  c.n_train = 300;
  c.n_test = 100;
  c.seed = seed;
  return c;
}

// Independent re-evaluation of the bilinear score straight from the
// definition, building the l x d history matrix explicitly.
double reference_score(const SequenceInstance& seq, const ShiftWeights& w, std::size_t t) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.window; ++k) {
    const long row = static_cast<long>(t) - static_cast<long>(w.window) + static_cast<long>(k);
    for (std::size_t j = 0; j < w.feature_dim; ++j) {
      const double x = row < 0 ? 0.0 : seq.feature(static_cast<std::size_t>(row), j);
      s += w.window_at(t)[k] * x * w.feature_at(t)[j];
    }
  }
  return s;
}

}  // namespace

TEST_CASE("config validation") {
  ShiftConfig c;
  CHECK_NOTHROW(c.validate());
  c.window = c.steps + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.positive_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.delta = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sparsity = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("shift weights") {
  SUBCASE("zero shift keeps weights constant") {
    const auto w = generate_shift_weights(small_config(0.0));
    for (std::size_t t = 1; t < w.steps; ++t) {
      for (std::size_t k = 0; k < w.window; ++k) CHECK(w.window_at(t)[k] == w.window_at(0)[k]);
      for (std::size_t j = 0; j < w.feature_dim; ++j) CHECK(w.feature_at(t)[j] == w.feature_at(0)[j]);
    }
  }
  SUBCASE("increments bounded by delta") {
    for (double delta : default_delta_grid()) {
      const auto w = generate_shift_weights(small_config(delta, 17));
      CHECK(max_weight_increment(w) <= delta);
      if (delta > 0) CHECK(max_weight_increment(w) > 0.5 * delta);
    }
  }
  SUBCASE("determinism") {
    const auto a = generate_shift_weights(small_config(0.2));
    const auto b = generate_shift_weights(small_config(0.2));
    CHECK(a.window_weights == b.window_weights);
    CHECK(a.feature_weights == b.feature_weights);
    CHECK(a.window_weights != generate_shift_weights(small_config(0.2, 4)).window_weights);
  }
}

TEST_CASE("raw scores follow the bilinear form with zero-padded history") {
  const auto ds = generate_dataset(small_config(0.3));
  for (std::size_t n = 0; n < 10; ++n) {
    const auto& seq = ds.train[n];
    CHECK(raw_score(seq, ds.weights, 0) == 0.0);
    for (std::size_t t = 0; t < seq.steps; ++t)
      CHECK(raw_score(seq, ds.weights, t) == doctest::Approx(reference_score(seq, ds.weights, t)).epsilon(1e-12));
  }
}

TEST_CASE("features are masked gaussians") {
  auto c = small_config(0.1);
  c.sparsity = 0.3;
  const auto ds = generate_dataset(c);
  std::size_t nonzero = 0, total = 0;
  for (const auto& seq : ds.train)
    for (double v : seq.x) {
      nonzero += v != 0.0;
      ++total;
    }
  CHECK(static_cast<double>(nonzero) / static_cast<double>(total) == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("full-scale dataset") {
  ShiftConfig c;
  c.delta = 0.2;
  c.seed = 1;
  const auto ds = generate_dataset(c);
  CHECK(ds.train.size() == 4000);
  CHECK(ds.validation.size() == 1000);
  CHECK(ds.test.size() == 1000);
  CHECK(ds.n_classes == 2);
  for (const auto* split : {&ds.train, &ds.validation, &ds.test}) {
    CHECK(std::abs(positive_ratio(*split) - 0.25) <= 0.01);
    for (const auto& seq : *split) {
      REQUIRE(seq.x.size() == 48 * 3);
      REQUIRE(seq.y.size() == 48);
      CHECK(seq.static_features.empty());
    }
  }
}

TEST_CASE("every grid value generates a balanced dataset") {
  for (double delta : default_delta_grid()) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      INFO("delta ", delta, " seed ", seed);
      const auto ds = generate_dataset(small_config(delta, seed));
      CHECK(std::abs(positive_ratio(ds.train) - 0.25) <= 0.01);
      CHECK(std::abs(positive_ratio(ds.validation) - 0.25) <= 0.01);
      CHECK(std::abs(positive_ratio(ds.test) - 0.25) <= 0.01);
    }
  }
}

TEST_CASE("relabeling from features and weights reproduces labels") {
  const auto ds = generate_dataset(small_config(0.0));
  for (const auto& seq : ds.test) CHECK(threshold_labels(seq, ds.weights, ds.test_calibration.value) == seq.y);
}

TEST_CASE("zero sparsity is degenerate") {
  auto c = small_config(0.2);
  c.sparsity = 0.0;
  CHECK_THROWS_AS(generate_dataset(c), GenerationError);
}

TEST_CASE("bernoulli labels approximately hit the ratio") {
  auto c = small_config(0.2);
  c.label_mode = LabelMode::bernoulli;
  c.n_train = 1000;
  const auto ds = generate_dataset(c);
  CHECK(std::abs(positive_ratio(ds.train) - 0.25) <= 0.03);
}

TEST_CASE("JSONL round trip") {
  const auto ds = generate_dataset(small_config(0.1));
  const auto dir = std::filesystem::temp_directory_path() / "maeslab_datagen_test";
  std::filesystem::remove_all(dir);
  write_dataset(ds, dir);
  const auto back = read_dataset(dir);
  CHECK(to_json(back.config) == to_json(ds.config));
  CHECK(back.weights.window_weights == ds.weights.window_weights);
  CHECK(back.weights.feature_weights == ds.weights.feature_weights);
  REQUIRE(back.test.size() == ds.test.size());
  for (std::size_t n = 0; n < ds.test.size(); ++n) {
    CHECK(back.test[n].x == ds.test[n].x);
    CHECK(back.test[n].y == ds.test[n].y);
  }
  CHECK(back.validation_calibration.value == ds.validation_calibration.value);

  std::ostringstream a, b;
  write_split(a, ds, Split::train);
  write_split(b, back, Split::train);
  CHECK(a.str() == b.str());
  std::filesystem::remove_all(dir);
}

TEST_CASE("config JSON rejects unknown keys") {
  CHECK_THROWS_AS(shift_config_from_json(nlohmann::json{{"delta", 0.1}, {"deltaa", 0.2}}), ConfigError);
  const auto c = shift_config_from_json(nlohmann::json{{"delta", 0.3}, {"steps", 12}});
  CHECK(c.delta == 0.3);
  CHECK(c.steps == 12);
  CHECK(c.window == 10);
}
