#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "tloc/span.hpp"

namespace tloc {

struct EvalRecord {
  TemporalSpan pred, gt;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<std::pair<double, double>> recall_at;  // (sigma, fraction), sigma ascending
  double miou = 0.0;
  std::int64_t count = 0;
  std::vector<EvalRecord> records;
};

inline const std::vector<double>& default_sigmas() {
  static const std::vector<double> sigmas = {0.1, 0.3, 0.5};
  return sigmas;
}

// Top-1 recall at each sigma (strictly iou > sigma) plus mean IoU.
inline EvalReport evaluate(const std::vector<TemporalSpan>& preds,
                           const std::vector<TemporalSpan>& gts,
                           const std::vector<double>& sigmas = default_sigmas()) {
  if (preds.size() != gts.size() || preds.empty())
    throw UsageError("evaluate: need equal-length nonempty prediction and ground-truth lists");
  EvalReport report;
  report.count = static_cast<std::int64_t>(preds.size());
  report.records.reserve(preds.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double v = iou(preds[i], gts[i]);
    report.records.push_back(EvalRecord{preds[i], gts[i], v});
    acc += v;
  }
  report.miou = acc / static_cast<double>(preds.size());

  std::vector<double> sorted = sigmas;
  std::sort(sorted.begin(), sorted.end());
  for (double sigma : sorted) {
    std::int64_t hits = 0;
    for (const EvalRecord& r : report.records)
      if (r.iou > sigma) ++hits;
    report.recall_at.emplace_back(sigma, static_cast<double>(hits) / static_cast<double>(report.count));
  }
  return report;
}

inline std::string eval_table(const EvalReport& report) {
  std::string out;
  char line[64];
  for (const auto& [sigma, frac] : report.recall_at) {
    std::snprintf(line, sizeof line, "R@1,IoU@%-4.2f  %8.4f\n", sigma, frac);
    out += line;
  }
  std::snprintf(line, sizeof line, "mIoU          %8.4f\n", report.miou);
  out += line;
  std::snprintf(line, sizeof line, "samples       %8lld\n", static_cast<long long>(report.count));
  out += line;
  return out;
}

}  // namespace tloc
