#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "tloc/common.hpp"

namespace tloc {

// Normalized temporal interval, endpoints in [0,1] with start < end.
struct TemporalSpan {
  double start = 0.0;
  double end = 0.0;

  bool valid() const { return 0.0 <= start && start < end && end <= 1.0; }
  double length() const { return end - start; }

  bool operator==(const TemporalSpan& o) const { return start == o.start && end == o.end; }
};

inline TemporalSpan normalize_span(double tau_s, double tau_e, double tau,
                                   const std::string& context = "") {
  if (!(tau > 0.0) || !(0.0 <= tau_s) || !(tau_s < tau_e) || !(tau_e <= tau)) {
    std::string where = context.empty() ? "" : " in " + context;
    throw ValidationError("invalid ground-truth window (" + std::to_string(tau_s) + ", " +
                          std::to_string(tau_e) + ") for duration " + std::to_string(tau) + where);
  }
  return TemporalSpan{tau_s / tau, tau_e / tau};
}

inline std::pair<double, double> denormalize_span(const TemporalSpan& span, double tau) {
  return {span.start * tau, span.end * tau};
}

// Clamp a raw (relu-activated, so nonnegative) head output into a valid span.
// Degenerate or inverted pairs are widened to one clip length.
inline TemporalSpan sanitize_span(double raw_start, double raw_end, std::int64_t clip_count) {
  const double unit = 1.0 / static_cast<double>(clip_count);
  double s = std::clamp(raw_start, 0.0, 1.0);
  double e = std::clamp(raw_end, 0.0, 1.0);
  if (e <= s) e = std::min(1.0, s + unit);
  if (e <= s) s = std::max(0.0, 1.0 - unit);
  return TemporalSpan{s, e};
}

// Snap boundaries outward to the clip grid; always covers at least one clip.
inline TemporalSpan trim_to_clips(const TemporalSpan& span, std::int64_t clip_count) {
  const double m = static_cast<double>(clip_count);
  // Tolerance absorbs binary-representation error of decimal boundaries.
  const double snap = 1e-9;
  double s = std::floor(span.start * m + snap) / m;
  double e = std::ceil(span.end * m - snap) / m;
  s = std::clamp(s, 0.0, 1.0);
  e = std::clamp(e, 0.0, 1.0);
  if (e - s < 1.0 / m) {
    e = s + 1.0 / m;
    if (e > 1.0) {
      e = 1.0;
      s = 1.0 - 1.0 / m;
    }
  }
  return TemporalSpan{s, e};
}

inline double iou(const TemporalSpan& a, const TemporalSpan& b) {
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
  return inter / uni;
}

}  // namespace tloc
