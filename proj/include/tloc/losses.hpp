#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "tloc/span.hpp"
#include "tloc/tape.hpp"

namespace tloc {

// Which clips count as inside the ground-truth span: clip j is in when its
// midpoint (j + 0.5)/M falls inside [start, end].  A span too narrow to catch
// any midpoint falls back to the single clip nearest the span midpoint, so the
// mask is never empty.
struct ClipMask {
  std::vector<std::uint8_t> in_span;
  std::int64_t set_count = 0;
};

inline ClipMask clip_mask(const TemporalSpan& gt, std::int64_t clip_count) {
  if (clip_count < 1) throw ValidationError("clip_mask: clip_count must be >= 1");
  if (!gt.valid() || gt.start < 0.0 || gt.end > 1.0)
    throw ValidationError("clip_mask: span must satisfy 0 <= start < end <= 1");
  ClipMask m;
  m.in_span.assign(static_cast<std::size_t>(clip_count), 0);
  for (std::int64_t j = 0; j < clip_count; ++j) {
    const double mid = (static_cast<double>(j) + 0.5) / static_cast<double>(clip_count);
    if (mid >= gt.start && mid <= gt.end) {
      m.in_span[static_cast<std::size_t>(j)] = 1;
      ++m.set_count;
    }
  }
  if (m.set_count == 0) {
    const double mid = 0.5 * (gt.start + gt.end);
    std::int64_t idx = static_cast<std::int64_t>(std::ceil(mid * static_cast<double>(clip_count))) - 1;
    idx = std::max<std::int64_t>(0, std::min(idx, clip_count - 1));
    m.in_span[static_cast<std::size_t>(idx)] = 1;
    m.set_count = 1;
  }
  return m;
}

template <typename T>
Tensor<T> mask_tensor(const ClipMask& m) {
  Tensor<T> t(Shape::vec(static_cast<std::int64_t>(m.in_span.size())));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(m.in_span[static_cast<std::size_t>(i)]);
  return t;
}

// ---- plain evaluation (reporting, oracles) ----

// Per-sample smooth-L1 regression term: R(s - s*) + R(e - e*).
inline double regression_term(double pred_s, double pred_e, const TemporalSpan& gt) {
  return smooth_l1_scalar(pred_s - gt.start) + smooth_l1_scalar(pred_e - gt.end);
}

// Per-sample attention calibration term: minus the mean log-weight over the
// in-span clips, with weights floored at 1e-12 before the log.
inline double calibration_term(const std::vector<double>& weights, const ClipMask& mask) {
  if (weights.size() != mask.in_span.size())
    throw UsageError("calibration_term: weights and mask lengths differ");
  double acc = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (mask.in_span[j]) acc += std::log(std::max(weights[j], kLogFloor));
  return -acc / static_cast<double>(mask.set_count);
}

// Summed over the list; averaging over the batch is the trainer's job.
inline double regression_loss(const std::vector<std::pair<double, double>>& preds,
                              const std::vector<TemporalSpan>& gts) {
  if (preds.size() != gts.size() || preds.empty())
    throw UsageError("regression_loss: need equal-length nonempty lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    acc += regression_term(preds[i].first, preds[i].second, gts[i]);
  return acc;
}

inline double calibration_loss(const std::vector<std::vector<double>>& attentions,
                               const std::vector<ClipMask>& masks) {
  if (attentions.size() != masks.size() || attentions.empty())
    throw UsageError("calibration_loss: need equal-length nonempty lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < attentions.size(); ++i) {
    if (masks[i].set_count == 0) throw UsageError("calibration_loss: all-zero mask");
    acc += calibration_term(attentions[i], masks[i]);
  }
  return acc;
}

struct LossBreakdown {
  double l_reg = 0.0;
  double l_cal = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

inline LossBreakdown total_loss(double l_reg, double l_cal, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0) throw UsageError("total_loss: alpha and beta must be >= 0");
  return LossBreakdown{l_reg, l_cal, alpha * l_reg + beta * l_cal, alpha, beta};
}

// ---- graph builders (training) ----

template <typename T>
Var sample_regression_loss(Tape<T>& tape, Var pred, const TemporalSpan& gt) {
  if (tape.shape(pred).numel() != 2)
    throw ShapeError("sample_regression_loss: prediction must have 2 entries, got " +
                     tape.shape(pred).str());
  Var neg_gt = tape.constant(
      Tensor<T>(Shape::vec(2), {static_cast<T>(-gt.start), static_cast<T>(-gt.end)}));
  Var residual = tape.add(pred, neg_gt);
  return tape.sum(tape.smooth_l1(residual));
}

template <typename T>
Var sample_calibration_loss(Tape<T>& tape, Var weights, const ClipMask& mask) {
  if (tape.shape(weights).numel() != static_cast<std::int64_t>(mask.in_span.size()))
    throw ShapeError("sample_calibration_loss: weights and mask lengths differ");
  Var masked = tape.mul(tape.log(weights), tape.constant(mask_tensor<T>(mask)));
  Var total = tape.sum(masked);
  return tape.mul(total, tape.scalar(static_cast<T>(-1.0 / static_cast<double>(mask.set_count))));
}

}  // namespace tloc
