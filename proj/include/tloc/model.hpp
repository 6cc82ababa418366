#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tloc/attention.hpp"
#include "tloc/encoders.hpp"
#include "tloc/heads.hpp"
#include "tloc/losses.hpp"
#include "tloc/params.hpp"
#include "tloc/rng.hpp"
#include "tloc/span.hpp"

namespace tloc {

// Ablation variants.  Suffix -aw regresses from attention weights, -af from
// attended features.  reg-* drops the calibration loss, c3d-* replaces the
// video Bi-LSTM with a plain linear projection, stv-* collapses the sentence
// to its mean encoded vector (single attention pass), and ablp drops the
// regression head entirely and localizes by thresholding attention.
enum class Variant {
  kFullAw,
  kFullAf,
  kRegAw,
  kRegAf,
  kC3dAw,
  kC3dAf,
  kStvAw,
  kStvAf,
  kAblp,
};

inline const std::vector<std::pair<Variant, std::string>>& variant_table() {
  static const std::vector<std::pair<Variant, std::string>> table = {
      {Variant::kFullAw, "full-aw"}, {Variant::kFullAf, "full-af"}, {Variant::kRegAw, "reg-aw"},
      {Variant::kRegAf, "reg-af"},   {Variant::kC3dAw, "c3d-aw"},   {Variant::kC3dAf, "c3d-af"},
      {Variant::kStvAw, "stv-aw"},   {Variant::kStvAf, "stv-af"},   {Variant::kAblp, "ablp"}};
  return table;
}

inline std::string variant_name(Variant v) {
  for (const auto& [var, name] : variant_table())
    if (var == v) return name;
  throw UsageError("unknown variant value");
}

inline Variant parse_variant(const std::string& name) {
  for (const auto& [var, vname] : variant_table())
    if (vname == name) return var;
  std::string valid;
  for (const auto& [var, vname] : variant_table()) {
    if (!valid.empty()) valid += ", ";
    valid += vname;
  }
  throw UsageError("unknown variant \"" + name + "\" (valid: " + valid + ")");
}

inline std::vector<Variant> all_variants() {
  std::vector<Variant> out;
  for (const auto& [var, name] : variant_table()) out.push_back(var);
  return out;
}

enum class HeadKind { kWeights, kFeatures, kNone };

inline HeadKind head_kind(Variant v) {
  switch (v) {
    case Variant::kFullAw:
    case Variant::kRegAw:
    case Variant::kC3dAw:
    case Variant::kStvAw:
      return HeadKind::kWeights;
    case Variant::kFullAf:
    case Variant::kRegAf:
    case Variant::kC3dAf:
    case Variant::kStvAf:
      return HeadKind::kFeatures;
    case Variant::kAblp:
      return HeadKind::kNone;
  }
  throw UsageError("unknown variant value");
}

inline bool video_uses_bilstm(Variant v) {
  return v != Variant::kC3dAw && v != Variant::kC3dAf;
}
inline bool sentence_is_sequence(Variant v) {
  return v != Variant::kStvAw && v != Variant::kStvAf;
}
// reg-* trains with the regression loss only.
inline bool forces_beta_zero(Variant v) {
  return v == Variant::kRegAw || v == Variant::kRegAf;
}

struct ModelDims {
  std::int64_t h = 64;       // encoder hidden size
  std::int64_t k = 64;       // attention score size
  std::int64_t d_r = 64;     // head hidden width
  std::int64_t d_w = 50;     // word embedding dim
  std::int64_t d_v = 16;     // clip feature dim
  std::int64_t M = 32;       // clips per video
  std::int64_t vocab = 1;    // vocabulary size

  void validate() const {
    if (h < 1 || k < 1 || d_r < 1 || d_w < 1 || d_v < 1 || M < 1 || vocab < 1)
      throw ValidationError("model dims must all be >= 1");
  }
};

constexpr double kAblpThreshold = 0.5;

// ---- initialization ----

namespace detail {

inline void fill_uniform(TensorF& t, double limit, Rng& rng) {
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>((2.0 * uniform(rng) - 1.0) * limit);
}

inline double glorot_limit(std::int64_t fan_in, std::int64_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline void add_weight(ParamSet<float>& p, const std::string& name, std::int64_t rows,
                       std::int64_t cols, Rng& rng) {
  TensorF t(Shape::mat(rows, cols));
  fill_uniform(t, glorot_limit(cols, rows), rng);
  p.add(name, std::move(t));
}

inline void add_weight_vec(ParamSet<float>& p, const std::string& name, std::int64_t n, Rng& rng) {
  TensorF t(Shape::vec(n));
  fill_uniform(t, glorot_limit(n, 1), rng);
  p.add(name, std::move(t));
}

inline void add_bias(ParamSet<float>& p, const std::string& name, std::int64_t n,
                     float value = 0.0f) {
  TensorF t(Shape::vec(n));
  t.fill(value);
  p.add(name, std::move(t));
}

inline void add_lstm(ParamSet<float>& p, const std::string& prefix, std::int64_t h,
                     std::int64_t d_in, Rng& rng) {
  for (const char* gate : {"W_i", "W_f", "W_o", "W_g"})
    add_weight(p, prefix + "." + gate, h, d_in + h, rng);
  add_bias(p, prefix + ".b_i", h);
  add_bias(p, prefix + ".b_f", h, 1.0f);  // open forget gates at init
  add_bias(p, prefix + ".b_o", h);
  add_bias(p, prefix + ".b_g", h);
}

inline void add_bi_encoder(ParamSet<float>& p, const std::string& prefix, std::int64_t h,
                           std::int64_t d_in, Rng& rng) {
  add_lstm(p, prefix + ".fwd", h, d_in, rng);
  add_lstm(p, prefix + ".bwd", h, d_in, rng);
  add_weight(p, prefix + ".proj.W", h, 2 * h, rng);
  add_bias(p, prefix + ".proj.b", h);
}

inline void add_attention(ParamSet<float>& p, const std::string& prefix, std::int64_t k,
                          std::int64_t h, Rng& rng) {
  add_weight(p, prefix + ".U_z", k, h, rng);
  add_weight(p, prefix + ".U_g", k, h, rng);
  add_bias(p, prefix + ".b_a", k);
  add_weight_vec(p, prefix + ".u_a", k, rng);
}

}  // namespace detail

// Fresh parameters for a variant: uniform(+-sqrt(6/(fan_in+fan_out)))
// weights, zero biases, LSTM forget-gate biases 1.0.  Insertion order is the
// checkpoint layout and must stay stable.
inline ParamSet<float> init_params(Variant variant, const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ParamSet<float> p;
  Rng rng = make_rng(mix64(seed, 0xA11D0ULL));
  if (video_uses_bilstm(variant)) {
    detail::add_bi_encoder(p, "venc", dims.h, dims.d_v, rng);
  } else {
    detail::add_weight(p, "vproj.W", dims.h, dims.d_v, rng);
    detail::add_bias(p, "vproj.b", dims.h);
  }
  detail::add_weight(p, "embed.E", dims.d_w, dims.vocab, rng);
  detail::add_bi_encoder(p, "senc", dims.h, dims.d_w, rng);
  detail::add_attention(p, "att1", dims.k, dims.h, rng);
  if (sentence_is_sequence(variant)) {
    detail::add_attention(p, "att2", dims.k, dims.h, rng);
    detail::add_attention(p, "att3", dims.k, dims.h, rng);
  }
  switch (head_kind(variant)) {
    case HeadKind::kWeights:
      detail::add_weight(p, "head.W1", dims.d_r, dims.M, rng);
      detail::add_bias(p, "head.b1", dims.d_r);
      detail::add_weight(p, "head.W2", 2, dims.d_r, rng);
      detail::add_bias(p, "head.b2", 2);
      break;
    case HeadKind::kFeatures:
      detail::add_weight(p, "head.Wf", dims.h, 2 * dims.h, rng);
      detail::add_bias(p, "head.bf", dims.h);
      detail::add_weight(p, "head.W1", dims.d_r, dims.h, rng);
      detail::add_bias(p, "head.b1", dims.d_r);
      detail::add_weight(p, "head.W2", 2, dims.d_r, rng);
      detail::add_bias(p, "head.b2", 2);
      break;
    case HeadKind::kNone:
      break;
  }
  return p;
}

// ---- graph building ----

template <typename T>
struct ModelGraph {
  Variant variant = Variant::kFullAw;
  BiEncoderVars venc;
  Var vproj_W, vproj_b;
  Var embed;
  BiEncoderVars senc;
  CoAttentionVars coatt;
  AwHeadVars aw;
  AfHeadVars af;
};

namespace detail {

template <typename T>
LstmVars bind_lstm_vars(const ParamVars<T>& pv, const std::string& prefix) {
  return LstmVars{pv(prefix + ".W_i"), pv(prefix + ".W_f"), pv(prefix + ".W_o"),
                  pv(prefix + ".W_g"), pv(prefix + ".b_i"), pv(prefix + ".b_f"),
                  pv(prefix + ".b_o"), pv(prefix + ".b_g")};
}

template <typename T>
BiEncoderVars bind_encoder_vars(const ParamVars<T>& pv, const std::string& prefix) {
  return BiEncoderVars{bind_lstm_vars(pv, prefix + ".fwd"), bind_lstm_vars(pv, prefix + ".bwd"),
                       pv(prefix + ".proj.W"), pv(prefix + ".proj.b")};
}

template <typename T>
AttentionVars bind_attention_vars(const ParamVars<T>& pv, const std::string& prefix) {
  return AttentionVars{pv(prefix + ".U_z"), pv(prefix + ".U_g"), pv(prefix + ".b_a"),
                       pv(prefix + ".u_a")};
}

}  // namespace detail

template <typename T>
ModelGraph<T> bind_model(const BoundParams<T>& bound, Variant variant) {
  ParamVars<T> pv(bound);
  ModelGraph<T> g;
  g.variant = variant;
  if (video_uses_bilstm(variant)) {
    g.venc = detail::bind_encoder_vars(pv, "venc");
  } else {
    g.vproj_W = pv("vproj.W");
    g.vproj_b = pv("vproj.b");
  }
  g.embed = pv("embed.E");
  g.senc = detail::bind_encoder_vars(pv, "senc");
  g.coatt.step1 = detail::bind_attention_vars(pv, "att1");
  if (sentence_is_sequence(variant)) {
    g.coatt.step2 = detail::bind_attention_vars(pv, "att2");
    g.coatt.step3 = detail::bind_attention_vars(pv, "att3");
  }
  switch (head_kind(variant)) {
    case HeadKind::kWeights:
      g.aw = AwHeadVars{pv("head.W1"), pv("head.b1"), pv("head.W2"), pv("head.b2")};
      break;
    case HeadKind::kFeatures:
      g.af = AfHeadVars{pv("head.Wf"), pv("head.bf"), pv("head.W1"),
                        pv("head.b1"), pv("head.W2"), pv("head.b2")};
      break;
    case HeadKind::kNone:
      break;
  }
  return g;
}

// Per-sample forward pass.  Masks are optional inverted-dropout constants
// ([h x M] video, [h x N] sentence); pass nullptr at inference.
struct SampleForward {
  Var raw;                 // [2] head output; invalid for ablp
  Var a_v;                 // attention used for localization and calibration
  Var a_v1, a_s;           // intermediate attentions (invalid for stv-*)
  Var v_tilde, s_tilde, v_tilde1;
};

template <typename T>
SampleForward build_forward(Tape<T>& tape, const ModelGraph<T>& g, const ModelDims& dims,
                            const Tensor<T>& clips, const std::vector<int>& tokens,
                            const Tensor<T>* video_mask = nullptr,
                            const Tensor<T>* sent_mask = nullptr) {
  if (clips.shape().rank != 2 || clips.rows() != dims.d_v || clips.cols() != dims.M)
    throw ShapeError("build_forward: clip features " +
                     (clips.shape().rank == 2 ? clips.shape().str() : std::string("(non-matrix)")) +
                     " do not match model dims [" + std::to_string(dims.d_v) + " x " +
                     std::to_string(dims.M) + "]");
  if (tokens.empty()) throw UsageError("build_forward: empty token sequence");
  for (int tok : tokens)
    if (tok < 0 || tok >= dims.vocab)
      throw ValidationError("build_forward: token id " + std::to_string(tok) +
                            " outside vocabulary of size " + std::to_string(dims.vocab));

  // video
  Var clips_v = tape.constant(clips);
  Var V;
  if (video_uses_bilstm(g.variant)) {
    V = bi_encode(tape, g.venc, clips_v, dims.h,
                  video_mask ? tape.constant(*video_mask) : Var{});
  } else {
    V = tape.add(tape.matmul(g.vproj_W, clips_v), g.vproj_b);
    if (video_mask) V = tape.mul(V, tape.constant(*video_mask));
  }

  // sentence
  std::vector<Var> word_cols(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    word_cols[i] = tape.slice(g.embed, 1, tokens[i], 1);
  Var words = tape.concat(1, std::span<const Var>(word_cols));
  Var S = bi_encode(tape, g.senc, words, dims.h, sent_mask ? tape.constant(*sent_mask) : Var{});

  SampleForward out;
  if (sentence_is_sequence(g.variant)) {
    CoAttentionTrace tr = co_attention(tape, g.coatt, V, S);
    out.a_v1 = tr.a_v1;
    out.v_tilde1 = tr.v_tilde1;
    out.a_s = tr.a_s;
    out.s_tilde = tr.s_tilde;
    out.a_v = tr.a_v;
    out.v_tilde = tr.v_tilde;
  } else {
    Var s_vec = tape.mean_cols(S);
    Attended att = attend(tape, g.coatt.step1, V, s_vec);
    out.a_v = att.weights;
    out.v_tilde = att.attended;
    out.s_tilde = s_vec;
  }

  switch (head_kind(g.variant)) {
    case HeadKind::kWeights:
      out.raw = regress_on_weights(tape, g.aw, out.a_v);
      break;
    case HeadKind::kFeatures:
      out.raw = regress_on_features(tape, g.af, out.v_tilde, out.s_tilde);
      break;
    case HeadKind::kNone:
      break;
  }
  return out;
}

// Raw per-sample loss terms; the trainer scales and averages them.
struct SampleLossVars {
  Var l_reg;  // invalid for ablp
  Var l_cal;
};

template <typename T>
SampleLossVars build_sample_loss(Tape<T>& tape, const SampleForward& fwd, const TemporalSpan& gt,
                                 std::int64_t M) {
  SampleLossVars out;
  if (fwd.raw.valid()) out.l_reg = sample_regression_loss(tape, fwd.raw, gt);
  out.l_cal = sample_calibration_loss(tape, fwd.a_v, clip_mask(gt, M));
  return out;
}

// One scalar for a whole batch on a single tape:
//   total = (alpha * sum l_reg + beta * sum l_cal) / B
// Used by the gradient checker; the trainer gets the same result from
// per-sample tapes.
template <typename T>
struct ForwardInput {
  const Tensor<T>* clips = nullptr;
  const std::vector<int>* tokens = nullptr;
  TemporalSpan gt;
};

template <typename T>
Var build_batch_loss(Tape<T>& tape, const ModelGraph<T>& g, const ModelDims& dims,
                     const std::vector<ForwardInput<T>>& batch, double alpha, double beta) {
  if (batch.empty()) throw UsageError("build_batch_loss: empty batch");
  Var sum_reg, sum_cal;
  for (const ForwardInput<T>& in : batch) {
    SampleForward fwd = build_forward(tape, g, dims, *in.clips, *in.tokens);
    SampleLossVars ls = build_sample_loss(tape, fwd, in.gt, dims.M);
    if (ls.l_reg.valid()) sum_reg = sum_reg.valid() ? tape.add(sum_reg, ls.l_reg) : ls.l_reg;
    sum_cal = sum_cal.valid() ? tape.add(sum_cal, ls.l_cal) : ls.l_cal;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Var total;
  if (sum_reg.valid()) total = tape.mul(sum_reg, tape.scalar(static_cast<T>(alpha * inv_b)));
  Var cal_term = tape.mul(sum_cal, tape.scalar(static_cast<T>(beta * inv_b)));
  total = total.valid() ? tape.add(total, cal_term) : cal_term;
  return total;
}

// ---- inference ----

struct Prediction {
  TemporalSpan span;                   // clip-aligned final span
  std::pair<double, double> raw;       // head output before sanitation
  CoAttentionOutput attention;
};

template <typename T>
std::vector<double> to_doubles(const Tensor<T>& t) {
  std::vector<double> out(static_cast<std::size_t>(t.numel()));
  for (std::int64_t i = 0; i < t.numel(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(t[i]);
  return out;
}

inline Prediction predict(const ParamSet<float>& params, Variant variant, const ModelDims& dims,
                          const TensorF& clips, const std::vector<int>& tokens) {
  Tape<float> tape;
  BoundParams<float> bound = bind(tape, params);
  ModelGraph<float> g = bind_model(bound, variant);
  SampleForward fwd = build_forward(tape, g, dims, clips, tokens);

  Prediction out;
  out.attention.a_v = to_doubles(tape.val(fwd.a_v));
  if (fwd.a_v1.valid()) out.attention.a_v1 = to_doubles(tape.val(fwd.a_v1));
  if (fwd.a_s.valid()) out.attention.a_s = to_doubles(tape.val(fwd.a_s));

  TemporalSpan span;
  if (fwd.raw.valid()) {
    const TensorF& raw = tape.val(fwd.raw);
    out.raw = {static_cast<double>(raw[0]), static_cast<double>(raw[1])};
    span = sanitize_span(out.raw.first, out.raw.second, dims.M);
  } else {
    span = localize_by_attention(out.attention.a_v, kAblpThreshold);
    out.raw = {span.start, span.end};
  }
  out.span = trim_to_clips(span, dims.M);
  return out;
}

}  // namespace tloc
