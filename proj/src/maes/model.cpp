// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#include "maeslab/maes/model.hpp"

#include <algorithm>

#include "maeslab/diffcore/ops.hpp"
#include "maeslab/errors.hpp"
#include "maeslab/seeding.hpp"

namespace maeslab::maes {

using namespace diff;

namespace {
constexpr std::uint64_t kContextStream = 1;
constexpr std::uint64_t kGateStream = 2;
constexpr std::uint64_t kExpertStreamBase = 16;

const EnsembleSpec& checked(const EnsembleSpec& spec) {
  spec.validate();
  return spec;
}
}  // namespace

gate::GateSpec EnsembleSpec::gate_spec() const {
  return gate::GateSpec{.kind = attention,
                        .num_experts = experts.size(),
                        .context_dim = context_dim,
                        .encoding_dim = encoding_dim,
                        .attention_dim = attention_dim};
}

void EnsembleSpec::validate() const {
  if (experts.empty()) throw ConfigError("EnsembleSpec: needs at least one expert");
  for (const auto& e : experts) e.validate();
  gate_spec().validate();
}

MaesModel::MaesModel(const EnsembleSpec& spec, std::size_t input_dim, std::uint64_t seed)
    : spec_(checked(spec)),
      input_dim_(input_dim),
      context_(spec.context_dim, input_dim, mix_seed(seed, kContextStream)),
      gate_(spec.gate_spec(), mix_seed(seed, kGateStream)) {
  experts_.reserve(spec.experts.size());
  for (std::size_t m = 0; m < spec.experts.size(); ++m)
    experts_.emplace_back(spec.experts[m], input_dim, mix_seed(seed, kExpertStreamBase + m));
}

std::vector<Tensor> MaesModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& e : experts_) {
    const auto ts = e.params().tensors();
    out.insert(out.end(), ts.begin(), ts.end());
  }
  for (const auto* ps : {&context_.params(), &gate_.params()}) {
    const auto ts = ps->tensors();
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

std::size_t MaesModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameters()) n += t.size();
  return n;
}

MaesModel::Snapshot MaesModel::snapshot() const {
  Snapshot out;
  for (const auto& t : parameters()) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void MaesModel::restore(const Snapshot& snapshot) {
  auto params = parameters();
  if (snapshot.size() != params.size()) throw UsageError("MaesModel::restore: snapshot has wrong tensor count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].mutable_values();
    if (snapshot[i].size() != dst.size()) throw UsageError("MaesModel::restore: snapshot tensor size mismatch");
    std::copy(snapshot[i].begin(), snapshot[i].end(), dst.begin());
  }
}

MaesOutput MaesModel::forward(std::span<const Tensor> inputs) const {
  MaesOutput out;
  const std::size_t m_count = experts_.size();
  out.expert_probs.reserve(m_count);
  for (const auto& e : experts_) out.expert_probs.push_back(e.forward(inputs));
  const auto contexts = context_.forward(inputs);
  std::vector<Tensor> columns(m_count);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Tensor s = gate_.scores(contexts[t]);
    const Tensor a = softmax(s);
    Shape col_shape = out.expert_probs[0][t].shape();
    col_shape.push_back(1);
    for (std::size_t m = 0; m < m_count; ++m) columns[m] = reshape(out.expert_probs[m][t], col_shape);
    const Tensor p = concat(columns);  // [B, M]
    out.ensemble.push_back(sum_last(mul(a, p)));
    out.scores.push_back(s);
    out.alpha.push_back(a);
  }
  return out;
}

Prediction predict(const MaesModel& model, std::span<const data::SequenceInstance> split,
                   std::size_t batch_size) {
  NoGradGuard no_grad;
  Prediction pred;
  if (split.empty()) return pred;
  const std::size_t n = split.size(), steps = split[0].steps, m_count = model.experts().size();
  pred.ensemble = Series(n, steps);
  pred.experts.assign(m_count, Series(n, steps));
  pred.alpha = gate::GateWeights(n, steps, m_count);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    const auto batch = seq::make_batch(split.subspan(start, end - start));
    const auto out = model.forward(batch.inputs);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t r = 0; r < batch.size; ++r) {
        pred.ensemble.at(start + r, t) = out.ensemble[t].value(r);
        for (std::size_t m = 0; m < m_count; ++m) {
          pred.experts[m].at(start + r, t) = out.expert_probs[m][t].value(r);
          pred.alpha.at(start + r, t, m) = out.alpha[t].value(r * m_count + m);
        }
      }
  }
  return pred;
}

}  // namespace maeslab::maes
