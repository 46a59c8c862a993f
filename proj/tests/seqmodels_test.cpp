// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <cmath>
#include <random>

#include "doctest.h"
#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/seqmodels/loss.hpp"
#include "maeslab/seqmodels/lstm.hpp"
#include "maeslab/seqmodels/rnn.hpp"
#include "maeslab/seqmodels/train.hpp"
#include "support/gradcheck.hpp"
#include "support/quiet_logs.hpp"

using namespace maeslab;
using namespace maeslab::seq;
using diff::Tensor;
using maeslab::testing::check_gradients;
using maeslab::testing::random_constant;

namespace {

void zero_all(diff::ParamSet& params) {
  for (auto& t : params.tensors()) std::fill(t.mutable_values().begin(), t.mutable_values().end(), 0.0);
}

// Rescales every parameter into [-scale, scale] with fresh random values.
void randomize(diff::ParamSet& params, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& t : params.tensors())
    for (auto& v : t.mutable_values()) v = u(rng);
}

std::vector<Tensor> random_inputs(std::size_t steps, std::size_t batch, std::size_t d, std::mt19937_64& rng) {
  std::vector<Tensor> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_constant({batch, d}, rng));
  return xs;
}

data::ShiftConfig toy_config(double delta, std::uint64_t seed) {
  data::ShiftConfig c;
  c.delta = delta;
  c.steps = 20;
  c.n_train = 500;
  c.n_test = 200;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("lstm_step with zero parameters") {
  const auto x = Tensor::zeros({3});
  SUBCASE("standard cell") {
    LstmExpert e(ExpertSpec{.hidden_dim = 4}, 3, 1);
    zero_all(e.params());
    const auto s = e.step(x, e.initial_state(0));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(s.i.value(k) == 0.5);
      CHECK(s.f.value(k) == 0.5);
      CHECK(s.o.value(k) == 0.5);
      CHECK(s.c_tilde.value(k) == 0.0);
      CHECK(s.C.value(k) == 0.0);
      CHECK(s.h.value(k) == 0.0);
    }
    CHECK(e.head(s.h).value(0) == 0.5);
  }
  SUBCASE("sigmoid-wrapped cell") {
    LstmExpert e(ExpertSpec{.hidden_dim = 4, .cell_variant = CellVariant::squashed}, 3, 1);
    zero_all(e.params());
    const auto s = e.step(x, e.initial_state(0));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(s.C.value(k) == 0.5);
      CHECK(s.h.value(k) == doctest::Approx(std::tanh(0.5) * 0.5).epsilon(1e-15));
    }
    CHECK(s.h.value(0) == doctest::Approx(0.231).epsilon(1e-3));
  }
}

TEST_CASE("dimension mismatches are configuration errors") {
  LstmExpert e(ExpertSpec{.hidden_dim = 4}, 3, 1);
  CHECK_THROWS_AS(e.step(Tensor::zeros({2, 5}), e.initial_state(2)), ConfigError);
  CHECK_THROWS_AS(e.step(Tensor::zeros({2, 3}), e.initial_state(0)), ConfigError);
  CHECK_THROWS_AS(LstmExpert(ExpertSpec{.hidden_dim = 0}, 3, 1), ConfigError);
  CHECK_THROWS_AS(LstmExpert(ExpertSpec{.hidden_dim = 2, .output_dim = 2}, 3, 1), ConfigError);
  ContextRnn rnn(5, 3, 1);
  CHECK_THROWS_AS(rnn.step(Tensor::zeros({2, 4}), rnn.initial_state(2)), ConfigError);
}

TEST_CASE("zero-parameter expert predicts one half; zero-parameter RNN gives zero contexts") {
  std::mt19937_64 rng(3);
  const auto xs = random_inputs(6, 4, 3, rng);
  LstmExpert e(ExpertSpec{.hidden_dim = 5}, 3, 2);
  zero_all(e.params());
  for (const auto& p : e.forward(xs))
    for (double v : p.values()) CHECK(v == 0.5);
  ContextRnn rnn(6, 3, 2);
  zero_all(rnn.params());
  for (const auto& c : rnn.forward(xs))
    for (double v : c.values()) CHECK(v == 0.0);
}

TEST_CASE("gate activations stay in range") {
  std::mt19937_64 rng(8);
  LstmExpert e(ExpertSpec{.hidden_dim = 6}, 3, 4);
  randomize(e.params(), 9, 2.0);
  auto s = e.initial_state(5);
  for (const auto& x : random_inputs(10, 5, 3, rng)) {
    s = e.step(x, s);
    for (std::size_t k = 0; k < s.h.size(); ++k) {
      CHECK(s.i.value(k) > 0.0);
      CHECK(s.i.value(k) < 1.0);
      CHECK(s.f.value(k) > 0.0);
      CHECK(s.f.value(k) < 1.0);
      CHECK(s.o.value(k) > 0.0);
      CHECK(s.o.value(k) < 1.0);
      CHECK(std::abs(s.c_tilde.value(k)) < 1.0);
      CHECK(std::abs(s.h.value(k)) < 1.0);
    }
  }
}

TEST_CASE("causality") {
  std::mt19937_64 rng(5);
  auto xs = random_inputs(8, 3, 3, rng);
  LstmExpert e(ExpertSpec{.hidden_dim = 7}, 3, 6);
  ContextRnn rnn(4, 3, 6);
  const auto p0 = e.forward(xs);
  const auto c0 = rnn.forward(xs);
  const std::size_t t0 = 5;
  xs[t0] = random_constant({3, 3}, rng, -5.0, 5.0);
  const auto p1 = e.forward(xs);
  const auto c1 = rnn.forward(xs);
  for (std::size_t t = 0; t < t0; ++t) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(p0[t].value(k) == p1[t].value(k));
    for (std::size_t k = 0; k < c0[t].size(); ++k) CHECK(c0[t].value(k) == c1[t].value(k));
  }
  CHECK(p0[t0].value(0) != p1[t0].value(0));
}

TEST_CASE("LSTM and RNN gradients match finite differences") {
  std::mt19937_64 rng(21);
  for (auto variant : {CellVariant::standard, CellVariant::squashed}) {
    for (int trial = 0; trial < 3; ++trial) {
      LstmExpert e(ExpertSpec{.hidden_dim = 3, .cell_variant = variant}, 2, rng());
      randomize(e.params(), rng(), 0.8);
      const auto xs = random_inputs(4, 2, 2, rng);
      SUBCASE("squared norm of the final hidden state") {
        const auto loss = [&] {
          auto s = e.initial_state(2);
          for (const auto& x : xs) s = e.step(x, s);
          return diff::sum(diff::mul(s.h, s.h));
        };
        const auto r = check_gradients(loss, e.params().tensors());
        INFO(to_string(variant), " ", r.worst);
        CHECK(r.max_rel_error < 1e-4);
      }
      SUBCASE("BCE through the head") {
        std::vector<Tensor> ys;
        for (std::size_t t = 0; t < xs.size(); ++t) ys.push_back(Tensor::constant({2}, {double(t % 2), 1.0}));
        const auto r = check_gradients([&] { return bce_loss(e.forward(xs), ys); }, e.params().tensors());
        INFO(to_string(variant), " ", r.worst);
        CHECK(r.max_rel_error < 1e-4);
      }
    }
  }
  for (int trial = 0; trial < 3; ++trial) {
    ContextRnn rnn(3, 2, rng());
    randomize(rnn.params(), rng(), 0.8);
    const auto xs = random_inputs(4, 2, 2, rng);
    const std::uint64_t probe = rng();
    const auto r = check_gradients(
        [&] { return maeslab::testing::probe_loss(rnn.forward(xs).back(), probe); }, rnn.params().tensors());
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("bce values") {
  const auto p = Tensor::constant({3}, {0.8, 0.3, 1.0});
  const auto y = Tensor::constant({3}, {1.0, 0.0, 0.0});
  const std::vector<Tensor> ps{p}, ys{y};
  const double expected = -(std::log(0.8) + std::log(0.7) + std::log(1.0 - (1.0 - kProbFloor)));
  CHECK(bce_loss(ps, ys).item() == doctest::Approx(expected).epsilon(1e-14));

  Series s(2, 2);
  s.values = {0.8, 0.5, 0.3, 0.5};
  LabelMatrix l(2, 2);
  l.values = {1, 0, 0, 1};
  const auto per_step = stepwise_bce(s, l);
  CHECK(per_step[0] == doctest::Approx(-(std::log(0.8) + std::log(0.7)) / 2).epsilon(1e-14));
  CHECK(per_step[1] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(mean_bce(s, l) == doctest::Approx((per_step[0] + per_step[1]) / 2).epsilon(1e-14));
}

TEST_CASE("reproducibility") {
  const auto ds = data::generate_dataset(toy_config(0.0, 4));
  const auto run = [&] {
    LstmExpert e(ExpertSpec{.hidden_dim = 6}, 3, 12);
    const auto h = train_expert(e, ds, FitOptions{.epochs = 2, .batch_size = 50, .learning_rate = 0.01, .seed = 3});
    return std::make_pair(predict(e, ds.test).values, h.epochs.back().train_loss);
  };
  CHECK(run() == run());
  LstmExpert a(ExpertSpec{.hidden_dim = 6}, 3, 12), b(ExpertSpec{.hidden_dim = 6}, 3, 12);
  CHECK(a.params().snapshot() == b.params().snapshot());
  LstmExpert copy = a;
  copy.params().tensors()[0].mutable_values()[0] += 1.0;
  CHECK(predict(copy, ds.test).values != predict(a, ds.test).values);
}

TEST_CASE("training learns the zero-shift task") {
  testing::QuietLogs quiet;
  const auto ds = data::generate_dataset(toy_config(0.0, 7));
  LstmExpert e(ExpertSpec{.hidden_dim = 16}, 3, 1);
  const auto h = train_expert(e, ds, FitOptions{.epochs = 6, .batch_size = 20, .learning_rate = 0.01, .seed = 1});
  const auto labels = data::label_matrix(ds.test);
  const double apr = validation_apr(predict(e, ds.test), labels);
  MESSAGE("test APR ", apr, " best val APR ", h.best_validation_apr);
  CHECK(apr > 0.25 + 0.15);
  // best-model selection keeps the maximum recorded validation APR
  double max_apr = 0.0;
  for (const auto& r : h.epochs) max_apr = std::max(max_apr, r.validation_apr);
  CHECK(h.best_validation_apr == max_apr);
  CHECK(validation_apr(predict(e, ds.validation), data::label_matrix(ds.validation)) == max_apr);
}
