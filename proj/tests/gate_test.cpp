// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include <cmath>
#include <random>

#include "doctest.h"
#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/gate/gate.hpp"
#include "support/gradcheck.hpp"

using namespace maeslab;
using namespace maeslab::gate;
using diff::Tensor;
using maeslab::testing::check_gradients;
using maeslab::testing::random_constant;
using maeslab::testing::random_parameter;

namespace {

GateSpec spec_for(AttentionKind kind, std::size_t m = 4) {
  GateSpec s;
  s.kind = kind;
  s.num_experts = m;
  s.context_dim = 3;
  s.encoding_dim = kind == AttentionKind::dot ? 3 : 2;
  s.attention_dim = 5;
  return s;
}

void set(const Tensor& t, std::vector<double> values) {
  auto dst = t.node().value.begin();
  std::copy(values.begin(), values.end(), dst);
}

Tensor row(const Tensor& m, std::size_t i) {
  const std::size_t k = m.dim(1);
  return Tensor::constant({k}, std::vector<double>(m.values().begin() + static_cast<long>(i * k),
                                                   m.values().begin() + static_cast<long>((i + 1) * k)));
}

}  // namespace

TEST_CASE("scoring examples") {
  GateSpec dot{.kind = AttentionKind::dot, .num_experts = 2, .context_dim = 2, .encoding_dim = 2};
  AttentionGate g(dot, 1);
  const auto c = Tensor::constant({2}, {1.0, 0.0});
  CHECK(g.score(c, Tensor::constant({2}, {1.0, 0.0})).item() == 1.0);
  CHECK(g.score(c, Tensor::constant({2}, {0.0, 1.0})).item() == 0.0);

  GateSpec general = dot;
  general.kind = AttentionKind::general;
  AttentionGate gg(general, 1);
  set(gg.params().at("W"), {1, 0, 0, 1});
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto ci = random_constant({2}, rng);
    const auto ui = random_constant({2}, rng);
    CHECK(gg.score(ci, ui).item() == doctest::Approx(g.score(ci, ui).item()).epsilon(1e-15));
  }

  AttentionGate add(spec_for(AttentionKind::additive), 3);
  set(add.params().at("v"), std::vector<double>(5, 0.0));
  for (int i = 0; i < 10; ++i) CHECK(add.score(random_constant({3}, rng), random_constant({2}, rng)).item() == 0.0);
}

TEST_CASE("dot attention with mismatched dims fails at construction") {
  GateSpec s{.kind = AttentionKind::dot, .num_experts = 3, .context_dim = 4, .encoding_dim = 5};
  CHECK_THROWS_AS(AttentionGate(s, 0), ConfigError);
  s.kind = AttentionKind::general;
  CHECK_NOTHROW(AttentionGate(s, 0));
}

TEST_CASE("batched scores agree with pairwise scores") {
  std::mt19937_64 rng(9);
  for (auto kind : all_attention_kinds()) {
    AttentionGate g(spec_for(kind), rng());
    const auto ctx = random_constant({5, 3}, rng);
    const auto s = g.scores(ctx);
    REQUIRE(s.shape() == diff::Shape{5, 4});
    for (std::size_t b = 0; b < 5; ++b)
      for (std::size_t m = 0; m < 4; ++m)
        CHECK(s.value(b * 4 + m) ==
              doctest::Approx(g.score(row(ctx, b), row(g.encodings(), m)).item()).epsilon(1e-13));
    const auto single = g.scores(row(ctx, 2));
    REQUIRE(single.shape() == diff::Shape{4});
    for (std::size_t m = 0; m < 4; ++m) CHECK(single.value(m) == doctest::Approx(s.value(8 + m)).epsilon(1e-14));
  }
}

TEST_CASE("softmax weights") {
  for (double w : softmax_weights(std::vector<double>{3.0, 3.0, 3.0, 3.0})) CHECK(w == 0.25);
  const auto w = softmax_weights(std::vector<double>{1.0, 0.0});
  CHECK(w[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(1.0 / (std::exp(1.0) + 1.0)).epsilon(1e-15));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(6);
    for (auto& x : s) x = u(rng);
    const auto a = softmax_weights(s);
    const double shift = u(rng);
    for (auto& x : s) x += shift;
    const auto b = softmax_weights(s);
    require_simplex(a, kSimplexTolerance, "softmax");
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("hard selection") {
  CHECK(select_hard(std::vector<double>{0.1, 0.7, 0.2}) == 1);
  CHECK(select_hard(std::vector<double>{0.25, 0.25, 0.25, 0.25}) == 0);
  CHECK(select_hard(std::vector<double>{0.0, 0.0, 1.0}) == 2);
}

TEST_CASE("gate weights are simplex and permutation equivariant") {
  std::mt19937_64 rng(31);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  for (auto kind : all_attention_kinds()) {
    AttentionGate g(spec_for(kind), rng());
    AttentionGate permuted = g;
    {
      const auto u = g.encodings().values();
      const std::size_t v = g.spec().encoding_dim;
      auto dst = permuted.params().at("U").node().value.begin();
      for (std::size_t m = 0; m < 4; ++m)
        std::copy_n(u.begin() + static_cast<long>(perm[m] * v), v, dst + static_cast<long>(m * v));
    }
    const auto ctx = random_constant({6, 3}, rng, -3.0, 3.0);
    const auto w = g.weights(ctx);
    const auto wp = permuted.weights(ctx);
    for (std::size_t b = 0; b < 6; ++b) {
      const std::span<const double> slice = w.values().subspan(b * 4, 4);
      CHECK_NOTHROW(require_simplex(slice, kSimplexTolerance, "gate"));
      for (std::size_t m = 0; m < 4; ++m) CHECK(wp.value(b * 4 + m) == doctest::Approx(w.value(b * 4 + perm[m])).epsilon(1e-14));
    }
  }
}

TEST_CASE("scoring functions match finite differences") {
  std::mt19937_64 rng(77);
  for (auto kind : all_attention_kinds()) {
    for (int trial = 0; trial < 4; ++trial) {
      AttentionGate g(spec_for(kind, 3), rng());
      auto ctx = random_parameter({2, 3}, rng);
      const std::uint64_t probe = rng();
      auto wrt = g.params().tensors();
      wrt.push_back(ctx);
      const auto r = check_gradients([&] { return testing::probe_loss(g.weights(ctx), probe); }, wrt);
      INFO(to_string(kind), " ", r.worst);
      CHECK(r.max_rel_error < 1e-4);
      const auto rs = check_gradients([&] { return testing::probe_loss(g.scores(ctx), probe); }, wrt);
      CHECK(rs.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("GateWeights validation") {
  GateWeights w(2, 3, 2);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 3; ++t) {
      w.at(n, t, 0) = 0.3;
      w.at(n, t, 1) = 0.7;
    }
  CHECK_NOTHROW(w.validate());
  w.at(1, 2, 1) = 0.71;
  CHECK_THROWS_AS(w.validate(), UsageError);
  w.at(1, 2, 1) = 0.7;
  w.at(0, 0, 0) = -0.1;
  w.at(0, 0, 1) = 1.1;
  CHECK_THROWS_AS(w.validate(), UsageError);
}

TEST_CASE("attention kind names round trip") {
  for (auto k : all_attention_kinds()) CHECK(parse_attention_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_attention_kind("bilinear"), ConfigError);
}
