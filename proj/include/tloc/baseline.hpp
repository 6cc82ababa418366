#pragma once

#include <cstdint>
#include <vector>

#include "tloc/data.hpp"
#include "tloc/encoders.hpp"
#include "tloc/model.hpp"

namespace tloc {

struct ClipWindow {
  std::int64_t begin = 0;  // clip indices, [begin, end)
  std::int64_t end = 0;

  bool operator==(const ClipWindow& o) const { return begin == o.begin && end == o.end; }
};

struct ScanConfig {
  std::vector<std::int64_t> window_lengths = {4, 8, 16};
  std::int64_t stride = 1;

  void validate() const;
};

// All (start, start + len) with start stepped by stride, in window_lengths
// order; lengths longer than the video contribute nothing.
std::vector<ClipWindow> enumerate_windows(std::int64_t clip_count, const ScanConfig& cfg);

// Architecture-matched but untrained weights for the sliding-window scorer.
// The baseline realizes the cost profile of scan-and-localize designs; its
// accuracy is not a target, so random projections suffice.
struct ScanWeights {
  BiEncoderWeights<float> venc, senc;
  TensorF embed;    // [d_w x vocab]
  TensorF score_v;  // [h x h]
  TensorF score_s;  // [h x h]
};

ScanWeights init_scan_weights(const ModelDims& dims, std::uint64_t seed);

// Encodes the sentence once, then re-runs the video Bi-LSTM on every
// candidate window independently, scoring by inner product of the projected
// mean encodings.  Work deliberately scales with the window count.
TemporalSpan scan_localize(const Sample& sample, const ScanWeights& w, const ScanConfig& cfg);

// Same scan harness driven by a perfect scorer: cosine between the window's
// mean raw feature and the planted concept embedding.  Measures corpus
// recoverability independent of any learned weights.
TemporalSpan scan_localize_oracle(const Sample& sample, const TensorF& concept_embeddings,
                                  int concept_id, const ScanConfig& cfg);

}  // namespace tloc
