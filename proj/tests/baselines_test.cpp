// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <cmath>
#include <random>

#include "doctest.h"
#include "maeslab/baselines/baselines.hpp"
#include "maeslab/errors.hpp"
#include "support/quiet_logs.hpp"

using namespace maeslab;
using namespace maeslab::baselines;

namespace {

data::ShiftConfig toy(double delta, std::uint64_t seed) {
  data::ShiftConfig c;
  c.delta = delta;
  c.steps = 10;
  c.n_train = 150;
  c.n_test = 50;
  c.seed = seed;
  return c;
}

const seq::FitOptions kFit{.epochs = 2, .batch_size = 25, .learning_rate = 0.01};

Series random_series(std::size_t n, std::size_t t, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Series s(n, t);
  for (auto& v : s.values) v = u(rng);
  return s;
}

}  // namespace

TEST_CASE("pool training") {
  testing::QuietLogs quiet;
  const auto ds = data::generate_dataset(toy(0.1, 2));
  const std::vector<seq::ExpertSpec> specs{{.hidden_dim = 4}, {.hidden_dim = 6}, {.hidden_dim = 4}};

  SUBCASE("deterministic and independent of thread count") {
    const auto a = train_pool(specs, ds, kFit, 11, 1);
    const auto b = train_pool(specs, ds, kFit, 11, 3);
    REQUIRE(a.size() == 3);
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(a.members[m].model.params().snapshot() == b.members[m].model.params().snapshot());
      CHECK(a.members[m].validation_step_loss == b.members[m].validation_step_loss);
      CHECK(a.members[m].validation_step_loss.size() == 10);
    }
    CHECK(a.members[0].init_seed != a.members[2].init_seed);
  }
  SUBCASE("pool of one") {
    const auto pool = train_pool(std::span(specs).first(1), ds, kFit, 5);
    const auto preds = predict_all(pool, ds.test);
    CHECK(average_ensemble(preds).values == preds[0].values);
    for (auto s : stepwise_select(pool)) CHECK(s == 0);
    const auto w = fit_stacking(pool.validation_predictions(), data::label_matrix(ds.validation), StackingMode::global,
                                {.steps = 50});
    REQUIRE(w.weights.size() == 1);
    CHECK(w.weights[0] == 1.0);
    const auto stacked = stacked_predict(preds, w);
    for (std::size_t k = 0; k < stacked.values.size(); ++k)
      CHECK(stacked.values[k] == doctest::Approx(preds[0].values[k]).epsilon(1e-15));
    CHECK(pool.best_member() == 0);
  }
}

TEST_CASE("step-wise selection") {
  const std::vector<std::vector<double>> single{{0.3, 0.2, 0.4}};
  CHECK(stepwise_select(single) == std::vector<std::size_t>{0, 0, 0});

  const std::vector<std::vector<double>> dominated{{0.5, 0.6, 0.7}, {0.1, 0.2, 0.3}, {0.4, 0.4, 0.4}};
  CHECK(stepwise_select(dominated) == std::vector<std::size_t>{1, 1, 1});

  // losses cross between steps 2 and 3
  const std::vector<std::vector<double>> crossing{{0.1, 0.2, 0.3, 0.4, 0.5}, {0.5, 0.4, 0.3, 0.2, 0.1}};
  CHECK(stepwise_select(crossing) == std::vector<std::size_t>{0, 0, 0, 1, 1});

  std::mt19937_64 rng(1);
  const std::vector<Series> preds{random_series(4, 5, rng), random_series(4, 5, rng)};
  const auto sel = selection_predict(preds, stepwise_select(crossing));
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(sel.at(n, 1) == preds[0].at(n, 1));
    CHECK(sel.at(n, 4) == preds[1].at(n, 4));
  }
}

TEST_CASE("average ensemble") {
  Series a(1, 2, 0.2), b(1, 2, 0.8);
  const std::vector<Series> two{a, b};
  for (double v : average_ensemble(two).values) CHECK(v == 0.5);
  const std::vector<Series> same{a, a, a};
  for (std::size_t k = 0; k < 2; ++k) CHECK(average_ensemble(same).values[k] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(average_ensemble(std::vector<Series>{}), UsageError);
}

TEST_CASE("stacking") {
  std::mt19937_64 rng(3);
  const std::size_t n = 200, t = 4;
  LabelMatrix labels(n, t);
  for (auto& v : labels.values) v = rng() % 4 == 0;
  // member 0 is informative, the rest are constant 0.5
  Series good(n, t);
  for (std::size_t k = 0; k < good.values.size(); ++k) good.values[k] = labels.values[k] ? 0.9 : 0.1;
  const std::vector<Series> preds{Series(n, t, 0.5), good, Series(n, t, 0.5)};

  SUBCASE("informative member gets the largest weight") {
    for (auto mode : {StackingMode::global, StackingMode::stepwise}) {
      const auto w = fit_stacking(preds, labels, mode);
      for (std::size_t r = 0; r < w.rows; ++r) {
        const auto row = w.row_for_step(r);
        CHECK(row[1] > row[0]);
        CHECK(row[1] > row[2]);
        double total = 0.0;
        for (double x : row) {
          CHECK(x >= 0.0);
          total += x;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("uniform step-wise weights reproduce the average") {
    StackingWeights w{StackingMode::stepwise, StackingParam::convex, t, 3, std::vector<double>(t * 3, 1.0 / 3.0), {}};
    const auto s = stacked_predict(preds, w);
    const auto avg = average_ensemble(preds);
    for (std::size_t k = 0; k < s.values.size(); ++k) CHECK(s.values[k] == doctest::Approx(avg.values[k]).epsilon(1e-15));
  }
  SUBCASE("global stacking is tied step-wise stacking") {
    const auto g = fit_stacking(preds, labels, StackingMode::global, {.steps = 100});
    StackingWeights tied{StackingMode::stepwise, StackingParam::convex, t, 3, {}, {}};
    for (std::size_t r = 0; r < t; ++r) tied.weights.insert(tied.weights.end(), g.weights.begin(), g.weights.end());
    CHECK(stacked_predict(preds, g).values == stacked_predict(preds, tied).values);
  }
  SUBCASE("permutation invariance and convex hull") {
    const std::vector<Series> mixed{random_series(n, t, rng), good, random_series(n, t, rng)};
    const auto w = fit_stacking(mixed, labels, StackingMode::stepwise, {.steps = 100});
    const std::vector<std::size_t> perm{2, 0, 1};
    std::vector<Series> permuted;
    StackingWeights pw = w;
    for (std::size_t m = 0; m < 3; ++m) permuted.push_back(mixed[perm[m]]);
    for (std::size_t r = 0; r < w.rows; ++r)
      for (std::size_t m = 0; m < 3; ++m) pw.weights[r * 3 + m] = w.weights[r * 3 + perm[m]];
    const auto a = stacked_predict(mixed, w);
    const auto b = stacked_predict(permuted, pw);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      CHECK(b.values[k] == doctest::Approx(a.values[k]).epsilon(1e-14));
      const double lo = std::min({mixed[0].values[k], mixed[1].values[k], mixed[2].values[k]});
      const double hi = std::max({mixed[0].values[k], mixed[1].values[k], mixed[2].values[k]});
      CHECK(a.values[k] >= lo - 1e-15);
      CHECK(a.values[k] <= hi + 1e-15);
    }
  }
  SUBCASE("unconstrained mode") {
    const auto w = fit_stacking(preds, labels, StackingMode::global,
                                {.steps = 300, .learning_rate = 0.05, .param = StackingParam::unconstrained});
    CHECK(w.bias.size() == 1);
    CHECK(w.weights[1] > w.weights[0]);
  }
  SUBCASE("missing predictions") {
    CHECK_THROWS_AS(fit_stacking(std::vector<Series>{}, labels, StackingMode::global), UsageError);
  }
}
