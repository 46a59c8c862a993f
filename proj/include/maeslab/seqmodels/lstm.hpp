// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The maeslab Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maeslab/diffcore/params.hpp"
#include "maeslab/seqmodels/batch.hpp"

namespace maeslab::seq {

enum class CellVariant {
  /// C_t = f * C_{t-1} + i * C~_t
  standard,
  /// C_t = sigmoid(f * C_{t-1} + i * C~_t)
  squashed,
};

std::string to_string(CellVariant variant);
CellVariant parse_cell_variant(const std::string& name);

struct ExpertSpec {
  std::size_t hidden_dim = 32;
  /// Only binary targets (one sigmoid output) are supported.
  std::size_t output_dim = 1;
  CellVariant cell_variant = CellVariant::standard;

  void validate() const;
  bool operator==(const ExpertSpec&) const = default;
};

struct LstmState {
  diff::Tensor h;
  diff::Tensor C;
  diff::Tensor i;
  diff::Tensor f;
  diff::Tensor o;
  diff::Tensor c_tilde;
};

/// Single-layer LSTM with a time-distributed sigmoid head.
///
/// Parameters: W_ix, W_fx, W_ox, W_cx are [h, d]; W_ih, W_fh, W_oh, W_ch are
/// [h, h]; b_i, b_f, b_o, b_c are [h]; head_W is [1, h] and head_b is [1].
/// Inputs may be a single [d] vector or a [B, d] batch.
class LstmExpert {
 public:
  LstmExpert(const ExpertSpec& spec, std::size_t input_dim, std::uint64_t seed);
  LstmExpert(const LstmExpert& other);
  LstmExpert& operator=(const LstmExpert& other);
  LstmExpert(LstmExpert&&) noexcept = default;
  LstmExpert& operator=(LstmExpert&&) noexcept = default;

  const ExpertSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  diff::ParamSet& params() noexcept { return params_; }
  const diff::ParamSet& params() const noexcept { return params_; }

  /// Zero state for a batch of `batch` rows, or unbatched when batch == 0.
  LstmState initial_state(std::size_t batch) const;
  LstmState step(const diff::Tensor& x, const LstmState& prev) const;
  /// Class-1 probability from a hidden state: [B, h] -> [B].
  diff::Tensor head(const diff::Tensor& h) const;

  /// Per-step class-1 probabilities, each [B].
  std::vector<diff::Tensor> forward(std::span<const diff::Tensor> inputs) const;
  std::vector<diff::Tensor> forward(const SequenceBatch& batch) const { return forward(batch.inputs); }

 private:
  ExpertSpec spec_;
  std::size_t input_dim_;
  diff::ParamSet params_;
  diff::Tensor w_ix_, w_ih_, w_fx_, w_fh_, w_ox_, w_oh_, w_cx_, w_ch_;
  diff::Tensor b_i_, b_f_, b_o_, b_c_;
  diff::Tensor head_w_, head_b_;

  void bind();
};

/// Inference over a whole split without recording a graph.
Series predict(const LstmExpert& expert, std::span<const data::SequenceInstance> split,
               std::size_t batch_size = 256);

}  // namespace maeslab::seq
