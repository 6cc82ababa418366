#pragma once

#include <utility>

#include "tloc/tape.hpp"

namespace tloc {

// One soft-attention block: Z [h x L] attended under guidance g [h] through a
// k-dimensional score space.
//   H = tanh(U_z Z + (U_g g) 1^T + b_a 1^T)
//   a = softmax(u_a^T H)
//   attended = sum_j a_j Z[:,j]
struct AttentionVars {
  Var U_z;  // [k x h]
  Var U_g;  // [k x h]
  Var b_a;  // [k]
  Var u_a;  // [k]
};

struct Attended {
  Var weights;   // [L]
  Var attended;  // [h]
};

template <typename T>
Attended attend(Tape<T>& tape, const AttentionVars& p, Var Z, Var g) {
  Var scores_in = tape.add(tape.add(tape.matmul(p.U_z, Z), tape.matmul(p.U_g, g)), p.b_a);
  Var H = tape.tanh(scores_in);
  Var a = tape.softmax(tape.matmul(p.u_a, H));
  Var z = tape.weighted_sum(Z, a);
  return {a, z};
}

struct CoAttentionVars {
  AttentionVars step1, step2, step3;
};

// Full three-step pass: the sentence mean guides a first look at the video,
// the attended video vector re-weights the sentence, and the attended
// sentence vector produces the final video attention.
struct CoAttentionTrace {
  Var a_v1, v_tilde1;  // first video pass
  Var a_s, s_tilde;    // sentence pass
  Var a_v, v_tilde;    // final video pass
};

template <typename T>
CoAttentionTrace co_attention(Tape<T>& tape, const CoAttentionVars& p, Var V, Var S) {
  Var g0 = tape.mean_cols(S);
  Attended first = attend(tape, p.step1, V, g0);
  Attended sent = attend(tape, p.step2, S, first.attended);
  Attended final_pass = attend(tape, p.step3, V, sent.attended);
  return {first.weights, first.attended, sent.weights, sent.attended,
          final_pass.weights, final_pass.attended};
}

// Value-level record of the same pass, kept with predictions so callers can
// inspect where the model looked.
struct CoAttentionOutput {
  std::vector<double> a_v1, a_s, a_v;
};

}  // namespace tloc
