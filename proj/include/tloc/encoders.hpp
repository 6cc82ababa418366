#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tloc/params.hpp"
#include "tloc/rng.hpp"
#include "tloc/tape.hpp"

namespace tloc {

// Standard LSTM cell: sigmoid input/forget/output gates, tanh candidate,
// with the four gate weight blocks [h x (d_in + h)] applied to (x || h_prev).
struct LstmVars {
  Var W_i, W_f, W_o, W_g;
  Var b_i, b_f, b_o, b_g;
};

struct BiEncoderVars {
  LstmVars fwd, bwd;
  Var proj_W;  // [h x 2h]
  Var proj_b;  // [h]
};

template <typename T>
std::pair<Var, Var> lstm_step(Tape<T>& tape, const LstmVars& p, Var x, Var h_prev, Var c_prev) {
  Var xh = tape.concat(0, {x, h_prev});
  Var i = tape.sigmoid(tape.add(tape.matmul(p.W_i, xh), p.b_i));
  Var f = tape.sigmoid(tape.add(tape.matmul(p.W_f, xh), p.b_f));
  Var o = tape.sigmoid(tape.add(tape.matmul(p.W_o, xh), p.b_o));
  Var g = tape.tanh(tape.add(tape.matmul(p.W_g, xh), p.b_g));
  Var c = tape.add(tape.mul(f, c_prev), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

// Runs both directions over the columns of input [d_in x L] and projects the
// concatenated hidden states: column j = relu(W (h_f_j || h_b_j) + b).
// An optional per-element mask (inverted dropout, built by the caller) is
// multiplied onto the output.
template <typename T>
Var bi_encode(Tape<T>& tape, const BiEncoderVars& p, Var input, std::int64_t hidden,
              Var dropout_mask = Var{}) {
  const Shape& s = tape.shape(input);
  if (s.rank != 2 || s.d1 < 1) throw UsageError("bi_encode: need a [d x L] input with L >= 1");
  const std::int64_t L = s.d1;

  std::vector<Var> cols(static_cast<std::size_t>(L));
  for (std::int64_t j = 0; j < L; ++j) cols[static_cast<std::size_t>(j)] = tape.slice(input, 1, j, 1);

  Var zero = tape.constant(Tensor<T>(Shape::vec(hidden)));
  std::vector<Var> hf(static_cast<std::size_t>(L)), hb(static_cast<std::size_t>(L));
  Var h = zero, c = zero;
  for (std::int64_t j = 0; j < L; ++j) {
    auto [hn, cn] = lstm_step(tape, p.fwd, cols[static_cast<std::size_t>(j)], h, c);
    h = hn;
    c = cn;
    hf[static_cast<std::size_t>(j)] = hn;
  }
  h = zero;
  c = zero;
  for (std::int64_t j = L - 1; j >= 0; --j) {
    auto [hn, cn] = lstm_step(tape, p.bwd, cols[static_cast<std::size_t>(j)], h, c);
    h = hn;
    c = cn;
    hb[static_cast<std::size_t>(j)] = hn;
  }

  Var hf_mat = tape.concat(1, std::span<const Var>(hf));
  Var hb_mat = tape.concat(1, std::span<const Var>(hb));
  Var both = tape.concat(0, {hf_mat, hb_mat});  // [2h x L]
  Var out = tape.relu(tape.add(tape.matmul(p.proj_W, both), p.proj_b));
  if (dropout_mask.valid()) out = tape.mul(out, dropout_mask);
  return out;
}

// Inverted-dropout mask: each element is 0 with probability `rate`, else
// 1/(1-rate), so inference needs no rescaling.
template <typename T>
Tensor<T> dropout_mask(Shape shape, double rate, Rng& rng) {
  Tensor<T> mask(shape);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::int64_t i = 0; i < mask.numel(); ++i)
    mask[i] = uniform(rng) < rate ? T(0) : keep_scale;
  return mask;
}

// ---- value-level wrappers (tests, baseline) ----

template <typename T>
struct LstmWeights {
  Tensor<T> W_i, W_f, W_o, W_g;
  Tensor<T> b_i, b_f, b_o, b_g;
};

template <typename T>
struct BiEncoderWeights {
  LstmWeights<T> fwd, bwd;
  Tensor<T> proj_W, proj_b;  // [h x 2h], [h]

  std::int64_t hidden() const { return proj_b.numel(); }
};

template <typename T>
LstmVars bind_lstm(Tape<T>& tape, const LstmWeights<T>& w, bool trainable = false) {
  auto lf = [&](const Tensor<T>& t) { return trainable ? tape.param(t) : tape.constant(t); };
  return LstmVars{lf(w.W_i), lf(w.W_f), lf(w.W_o), lf(w.W_g),
                  lf(w.b_i), lf(w.b_f), lf(w.b_o), lf(w.b_g)};
}

template <typename T>
BiEncoderVars bind_bi_encoder(Tape<T>& tape, const BiEncoderWeights<T>& w, bool trainable = false) {
  auto lf = [&](const Tensor<T>& t) { return trainable ? tape.param(t) : tape.constant(t); };
  return BiEncoderVars{bind_lstm(tape, w.fwd, trainable), bind_lstm(tape, w.bwd, trainable),
                       lf(w.proj_W), lf(w.proj_b)};
}

template <typename T>
LstmWeights<T> extract_lstm(const ParamSet<T>& p, const std::string& prefix) {
  return LstmWeights<T>{p.at(prefix + ".W_i"), p.at(prefix + ".W_f"), p.at(prefix + ".W_o"),
                        p.at(prefix + ".W_g"), p.at(prefix + ".b_i"), p.at(prefix + ".b_f"),
                        p.at(prefix + ".b_o"), p.at(prefix + ".b_g")};
}

template <typename T>
BiEncoderWeights<T> extract_bi_encoder(const ParamSet<T>& p, const std::string& prefix) {
  return BiEncoderWeights<T>{extract_lstm(p, prefix + ".fwd"), extract_lstm(p, prefix + ".bwd"),
                             p.at(prefix + ".proj.W"), p.at(prefix + ".proj.b")};
}

// Encode a sequence outside any training graph.  With training=true a fresh
// dropout mask is drawn from rng; inference passes training=false.
template <typename T>
Tensor<T> encode_sequence(const Tensor<T>& input, const BiEncoderWeights<T>& w, double dropout_rate,
                          bool training, Rng& rng) {
  if (input.shape().rank != 2 || input.cols() < 1)
    throw UsageError("encode_sequence: need a [d x L] input with L >= 1");
  Tape<T> tape;
  BiEncoderVars p = bind_bi_encoder(tape, w);
  Var in = tape.constant(input);
  Var mask{};
  if (training && dropout_rate > 0.0)
    mask = tape.constant(dropout_mask<T>(Shape::mat(w.hidden(), input.cols()), dropout_rate, rng));
  Var out = bi_encode(tape, p, in, w.hidden(), mask);
  return tape.val(out);
}

}  // namespace tloc
