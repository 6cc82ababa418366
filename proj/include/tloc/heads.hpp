#pragma once

#include <cstdint>
#include <vector>

#include "tloc/span.hpp"
#include "tloc/tape.hpp"

namespace tloc {

// Two-layer regressor on the final attention weights:
//   (s, e) = relu(W2 relu(W1 a + b1) + b2)
// ReLU on the output keeps raw coordinates nonnegative; sanitize_span handles
// the rest.
struct AwHeadVars {
  Var W1;  // [d_r x M]
  Var b1;  // [d_r]
  Var W2;  // [2 x d_r]
  Var b2;  // [2]
};

template <typename T>
Var regress_on_weights(Tape<T>& tape, const AwHeadVars& p, Var a_v) {
  Var hidden = tape.relu(tape.add(tape.matmul(p.W1, a_v), p.b1));
  return tape.relu(tape.add(tape.matmul(p.W2, hidden), p.b2));
}

// Regressor on the attended features: the video and sentence summaries are
// fused with one relu layer before the same two-layer head.
struct AfHeadVars {
  Var W_f;  // [h x 2h]
  Var b_f;  // [h]
  Var W1;   // [d_r x h]
  Var b1;   // [d_r]
  Var W2;   // [2 x d_r]
  Var b2;   // [2]
};

template <typename T>
Var regress_on_features(Tape<T>& tape, const AfHeadVars& p, Var v_tilde, Var s_tilde) {
  Var fused_in = tape.concat(0, {v_tilde, s_tilde});
  Var fused = tape.relu(tape.add(tape.matmul(p.W_f, fused_in), p.b_f));
  Var hidden = tape.relu(tape.add(tape.matmul(p.W1, fused), p.b1));
  return tape.relu(tape.add(tape.matmul(p.W2, hidden), p.b2));
}

// Span directly from attention weights, no regression: keep clips whose
// weight reaches threshold_fraction of the peak, take the contiguous run
// containing the argmax, and convert clip indices to normalized time.
inline TemporalSpan localize_by_attention(const std::vector<double>& weights,
                                          double threshold_fraction) {
  if (weights.empty()) throw UsageError("localize_by_attention: empty weights");
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw UsageError("localize_by_attention: threshold_fraction must be in (0, 1)");
  const std::int64_t m = static_cast<std::int64_t>(weights.size());
  std::int64_t peak = 0;
  for (std::int64_t j = 1; j < m; ++j)
    if (weights[static_cast<std::size_t>(j)] > weights[static_cast<std::size_t>(peak)]) peak = j;
  const double cutoff = threshold_fraction * weights[static_cast<std::size_t>(peak)];
  std::int64_t lo = peak, hi = peak;
  while (lo > 0 && weights[static_cast<std::size_t>(lo - 1)] >= cutoff) --lo;
  while (hi + 1 < m && weights[static_cast<std::size_t>(hi + 1)] >= cutoff) ++hi;
  const double md = static_cast<double>(m);
  return TemporalSpan{static_cast<double>(lo) / md, static_cast<double>(hi + 1) / md};
}

}  // namespace tloc
