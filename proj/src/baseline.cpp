#include "tloc/baseline.hpp"

#include <cmath>
#include <string>

namespace tloc {

void ScanConfig::validate() const {
  if (window_lengths.empty()) throw ValidationError("scan config: no window lengths");
  for (std::int64_t len : window_lengths)
    if (len < 1) throw ValidationError("scan config: window length must be >= 1");
  if (stride < 1) throw ValidationError("scan config: stride must be >= 1");
}

std::vector<ClipWindow> enumerate_windows(std::int64_t clip_count, const ScanConfig& cfg) {
  cfg.validate();
  std::vector<ClipWindow> out;
  for (std::int64_t len : cfg.window_lengths)
    for (std::int64_t start = 0; start + len <= clip_count; start += cfg.stride)
      out.push_back(ClipWindow{start, start + len});
  return out;
}

ScanWeights init_scan_weights(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  // Reuse the model's initialization rules through a throwaway ParamSet.
  ParamSet<float> p;
  Rng rng = make_rng(mix64(seed, 0x5CA7ULL));
  detail::add_bi_encoder(p, "venc", dims.h, dims.d_v, rng);
  detail::add_bi_encoder(p, "senc", dims.h, dims.d_w, rng);
  detail::add_weight(p, "embed.E", dims.d_w, dims.vocab, rng);
  detail::add_weight(p, "score.V", dims.h, dims.h, rng);
  detail::add_weight(p, "score.S", dims.h, dims.h, rng);
  ScanWeights w;
  w.venc = extract_bi_encoder(p, "venc");
  w.senc = extract_bi_encoder(p, "senc");
  w.embed = p.at("embed.E");
  w.score_v = p.at("score.V");
  w.score_s = p.at("score.S");
  return w;
}

namespace {

TensorF embed_tokens(const TensorF& embed, const std::vector<int>& tokens) {
  if (tokens.empty()) throw UsageError("scan_localize: empty token sequence");
  TensorF out(Shape::mat(embed.rows(), static_cast<std::int64_t>(tokens.size())));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int tok = tokens[i];
    if (tok < 0 || tok >= embed.cols())
      throw ValidationError("scan_localize: token id " + std::to_string(tok) +
                            " outside vocabulary of size " + std::to_string(embed.cols()));
    for (std::int64_t d = 0; d < embed.rows(); ++d)
      out.at(d, static_cast<std::int64_t>(i)) = embed.at(d, tok);
  }
  return out;
}

std::vector<double> mean_columns(const TensorF& m, std::int64_t c0, std::int64_t c1) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()), 0.0);
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::int64_t j = c0; j < c1; ++j) acc += static_cast<double>(m.at(i, j));
    out[static_cast<std::size_t>(i)] = acc / static_cast<double>(c1 - c0);
  }
  return out;
}

std::vector<double> project(const TensorF& w, const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(w.rows()), 0.0);
  for (std::int64_t i = 0; i < w.rows(); ++i) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < w.cols(); ++j)
      acc += static_cast<double>(w.at(i, j)) * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

TensorF submatrix(const TensorF& m, std::int64_t c0, std::int64_t c1) {
  TensorF out(Shape::mat(m.rows(), c1 - c0));
  for (std::int64_t i = 0; i < m.rows(); ++i)
    for (std::int64_t j = c0; j < c1; ++j) out.at(i, j - c0) = m.at(i, j);
  return out;
}

TemporalSpan window_span(const ClipWindow& w, std::int64_t clip_count) {
  const double m = static_cast<double>(clip_count);
  return TemporalSpan{static_cast<double>(w.begin) / m, static_cast<double>(w.end) / m};
}

}  // namespace

TemporalSpan scan_localize(const Sample& sample, const ScanWeights& w, const ScanConfig& cfg) {
  const std::int64_t M = sample.clip_features.cols();
  const std::vector<ClipWindow> windows = enumerate_windows(M, cfg);
  if (windows.empty())
    throw UsageError("scan_localize: no window fits a video of " + std::to_string(M) + " clips");

  Rng unused = make_rng(0);
  const TensorF sent = encode_sequence(embed_tokens(w.embed, sample.tokens), w.senc, 0.0, false, unused);
  const std::vector<double> query = project(w.score_s, mean_columns(sent, 0, sent.cols()));

  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const ClipWindow& win = windows[i];
    // Each window pays for its own full encode; nothing is shared.
    const TensorF enc = encode_sequence(submatrix(sample.clip_features, win.begin, win.end),
                                        w.venc, 0.0, false, unused);
    const double score = dot(project(w.score_v, mean_columns(enc, 0, enc.cols())), query);
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return window_span(windows[best], M);
}

TemporalSpan scan_localize_oracle(const Sample& sample, const TensorF& concept_embeddings,
                                  int concept_id, const ScanConfig& cfg) {
  const std::int64_t M = sample.clip_features.cols();
  const std::vector<ClipWindow> windows = enumerate_windows(M, cfg);
  if (windows.empty())
    throw UsageError("scan_localize_oracle: no window fits a video of " + std::to_string(M) +
                     " clips");
  if (concept_id < 0 || concept_id >= concept_embeddings.cols())
    throw UsageError("scan_localize_oracle: concept index out of range");

  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const ClipWindow& win = windows[i];
    const std::vector<double> mean = mean_columns(sample.clip_features, win.begin, win.end);
    double d = 0.0, norm = 0.0;
    for (std::int64_t r = 0; r < concept_embeddings.rows(); ++r) {
      const double e = static_cast<double>(concept_embeddings.at(r, concept_id));
      d += mean[static_cast<std::size_t>(r)] * e;
      norm += mean[static_cast<std::size_t>(r)] * mean[static_cast<std::size_t>(r)];
    }
    const double score = d / std::sqrt(std::max(norm, 1e-30));
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return window_span(windows[best], M);
}

}  // namespace tloc
