// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "maeslab/datagen/datagen.hpp"
#include "maeslab/gate/gate.hpp"
#include "maeslab/seqmodels/lstm.hpp"
#include "maeslab/seqmodels/rnn.hpp"

namespace maeslab::maes {

struct EnsembleSpec {
  std::vector<seq::ExpertSpec> experts;
  std::size_t context_dim = 16;
  std::size_t encoding_dim = 16;
  std::size_t attention_dim = 16;
  gate::AttentionKind attention = gate::AttentionKind::additive;

  std::size_t num_experts() const noexcept { return experts.size(); }
  gate::GateSpec gate_spec() const;
  void validate() const;
};

/// Graph outputs for one batch. All per-step tensors have a leading batch
/// axis B.
struct MaesOutput {
  std::vector<diff::Tensor> ensemble;                   // [t] -> [B]
  std::vector<std::vector<diff::Tensor>> expert_probs;  // [m][t] -> [B]
  std::vector<diff::Tensor> scores;                     // [t] -> [B, M]
  std::vector<diff::Tensor> alpha;                      // [t] -> [B, M]
};

/// Experts, context RNN and attention gate wired together.
class MaesModel {
 public:
  MaesModel(const EnsembleSpec& spec, std::size_t input_dim, std::uint64_t seed);

  const EnsembleSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::vector<seq::LstmExpert>& experts() noexcept { return experts_; }
  const std::vector<seq::LstmExpert>& experts() const noexcept { return experts_; }
  seq::ContextRnn& context() noexcept { return context_; }
  const seq::ContextRnn& context() const noexcept { return context_; }
  gate::AttentionGate& gate() noexcept { return gate_; }
  const gate::AttentionGate& gate() const noexcept { return gate_; }

  /// Every trainable tensor: experts in order, then context, then gate.
  std::vector<diff::Tensor> parameters() const;
  std::size_t parameter_count() const;

  using Snapshot = std::vector<std::vector<double>>;
  Snapshot snapshot() const;
  void restore(const Snapshot& snapshot);

  MaesOutput forward(std::span<const diff::Tensor> inputs) const;

 private:
  EnsembleSpec spec_;
  std::size_t input_dim_;
  std::vector<seq::LstmExpert> experts_;
  seq::ContextRnn context_;
  gate::AttentionGate gate_;
};

struct Prediction {
  Series ensemble;
  std::vector<Series> experts;
  gate::GateWeights alpha;
};

/// Inference over a split without recording a graph.
Prediction predict(const MaesModel& model, std::span<const data::SequenceInstance> split,
                   std::size_t batch_size = 256);

}  // namespace maeslab::maes
