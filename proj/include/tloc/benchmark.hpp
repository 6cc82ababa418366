#pragma once

#include <cstdint>
#include <vector>

#include "tloc/baseline.hpp"
#include "tloc/trainer.hpp"

namespace tloc {

struct TimingReport {
  double ablr_mean = 0.0;  // seconds per sentence
  double ablr_median = 0.0;
  double scan_mean = 0.0;
  double scan_median = 0.0;
  std::int64_t window_count = 0;
  int queries = 0;
  int warmup = 0;
  double speedup = 0.0;  // scan_mean / ablr_mean
};

// Wall-clock per-sentence localization time for attention inference vs the
// sliding-window scan over the same queries.  Pins execution to one thread
// for the duration.
TimingReport time_methods(const Checkpoint& ckpt, const ScanWeights& scan_w,
                          const ScanConfig& scan_cfg, const std::vector<Sample>& samples,
                          int queries = 100, int warmup = 5);

}  // namespace tloc
