#pragma once

// Differentiable operations over Graph nodes. Matrices are rank-2 row-major;
// a leading "batch" axis B indexes independent examples. Every op checks its
// operand shapes and throws Error(kShapeMismatch) naming them.

#include <cstdint>
#include <vector>

#include "hedmod/graph.hpp"

namespace hedmod::ad {

/// Row-major [B x L] validity mask; 1 = real position.
struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(std::size_t r, std::size_t c, std::uint8_t fill = 1)
      : rows(r), cols(c), bits(r * c, fill) {}
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return bits[r * cols + c]; }
};

Var matmul(Var a, Var b);
/// x[B x in] * W[out x in]^T (+ bias[out])
Var linear(Var x, Var weight);
Var linear(Var x, Var weight, Var bias);

/// Elementwise; `b` may also be a row vector broadcast over the rows of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// alpha * a + beta
Var affine(Var a, double alpha, double beta);
Var scale(Var a, double alpha);
Var sum(Var a);

/// Concatenate rank-2 operands along axis 0 (rows) or 1 (columns).
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var reshape(Var a, Shape shape);

Var sigmoid(Var a);
Var tanh(Var a);
/// Row-wise over the last axis.
Var softmax(Var a);
Var log_softmax(Var a);
/// Row-wise softmax over [B x L] with masked entries forced to probability 0.
/// Each row needs at least one valid entry.
Var masked_softmax(Var scores, const Mask& mask);

/// Gather rows of table[V x d] -> [n x d].
Var embedding(Var table, const std::vector<int>& ids);

/// Sum over rows of -log softmax(logits)[target]; rows with target < 0 skipped.
Var cross_entropy(Var logits, const std::vector<int>& targets);

/// Stack L tensors of shape [B x d] into a memory of shape [B x L x d].
Var stack(const std::vector<Var>& steps);
/// memory[B x L x d], query[B x d] -> scores[B x L], scores[b,i] = <m[b,i], q[b]>.
Var row_dot(Var memory, Var query);
/// memory[B x L x d], weights[B x L] -> [B x d], sum_i w[b,i] m[b,i].
Var weighted_sum(Var memory, Var weights);

/// GRU update with gates stacked [z; r; h] in W[3h x in], U[3h x h], b[3h]:
///   z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br)
///   n = tanh(Wh x + Uh (r * h) + bh), h' = (1 - z) * h + z * n
/// Rows whose `row_mask` entry is 0 pass h through unchanged.
Var gru_cell(Var x, Var h, Var w, Var u, Var b);
Var gru_cell(Var x, Var h, Var w, Var u, Var b, const std::vector<std::uint8_t>& row_mask);

/// Supervision for one row of a copy/generate mixture.
struct MixtureTarget {
  int gen_id = -1;                          // < 0: not reachable by generation
  std::vector<std::size_t> copy_positions;  // source positions holding the word
  bool active = true;
};

/// Sum over active rows of -log p(y), where
///   p(y) = q * softmax(gen_logits)[gen_id] + (1 - q) * sum_{i in copy} softmax_mask(copy_scores)[i]
/// and q = sigmoid(switch_logit). Computed in log space.
Var mixture_nll(Var gen_logits, Var copy_scores, Var switch_logit,
                const Mask& source_mask, const std::vector<MixtureTarget>& targets);

}  // namespace hedmod::ad
