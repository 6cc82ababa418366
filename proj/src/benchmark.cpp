#include "tloc/benchmark.hpp"

#include <algorithm>
#include <chrono>

#include "tloc/runtime.hpp"

namespace tloc {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

struct SingleThreadScope {
  int saved;
  SingleThreadScope() : saved(runtime::threads()) { runtime::set_threads(1); }
  ~SingleThreadScope() { runtime::set_threads(saved); }
};

}  // namespace

TimingReport time_methods(const Checkpoint& ckpt, const ScanWeights& scan_w,
                          const ScanConfig& scan_cfg, const std::vector<Sample>& samples,
                          int queries, int warmup) {
  if (queries < 1 || warmup < 0) throw UsageError("time_methods: bad query/warmup counts");
  if (static_cast<int>(samples.size()) < queries)
    throw UsageError("time_methods: need at least " + std::to_string(queries) +
                     " queries, corpus split has " + std::to_string(samples.size()));

  SingleThreadScope single_thread;
  TimingReport report;
  report.queries = queries;
  report.warmup = warmup;
  report.window_count =
      static_cast<std::int64_t>(enumerate_windows(ckpt.dims.M, scan_cfg).size());

  auto pick = [&](int i) -> const Sample& {
    return samples[static_cast<std::size_t>(i) % samples.size()];
  };

  for (int i = 0; i < warmup; ++i) {
    const Sample& s = pick(i);
    (void)predict_sample(ckpt, s);
    (void)scan_localize(s, scan_w, scan_cfg);
  }

  std::vector<double> ablr_times, scan_times;
  ablr_times.reserve(static_cast<std::size_t>(queries));
  scan_times.reserve(static_cast<std::size_t>(queries));
  for (int i = 0; i < queries; ++i) {
    const Sample& s = pick(i);
    const auto t0 = Clock::now();
    (void)predict_sample(ckpt, s);
    const auto t1 = Clock::now();
    (void)scan_localize(s, scan_w, scan_cfg);
    const auto t2 = Clock::now();
    ablr_times.push_back(std::chrono::duration<double>(t1 - t0).count());
    scan_times.push_back(std::chrono::duration<double>(t2 - t1).count());
  }

  report.ablr_mean = mean(ablr_times);
  report.ablr_median = median(ablr_times);
  report.scan_mean = mean(scan_times);
  report.scan_median = median(scan_times);
  report.speedup = report.scan_mean / report.ablr_mean;
  return report;
}

}  // namespace tloc
