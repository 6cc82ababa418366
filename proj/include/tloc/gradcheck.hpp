#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "tloc/params.hpp"
#include "tloc/tape.hpp"

namespace tloc {

// Central finite differences need more precision than the gradients they
// validate: near-zero gradients drown in the rounding of the objective itself.
// When the builder is generic over the scalar type the probes therefore run in
// long double; the analytic side always stays 64-bit.
struct GradCheckReport {
  struct PerParam {
    std::string name;
    double max_rel_err = 0.0;
    std::int64_t checked = 0;
    std::int64_t kink_flagged = 0;  // nonsmooth points, reported but not failed
  };
  std::vector<PerParam> per_param;
  double max_rel_err = 0.0;
  double epsilon = 0.0;
  bool pass = false;
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// build must construct the graph from bound parameters and return the scalar
// output.  It is re-invoked on a fresh tape for every probe, so it has to be
// deterministic given the parameter values.
template <typename BuildFn>
GradCheckReport gradient_check(ParamSet<double>& params, BuildFn build, double epsilon,
                               double tolerance, std::int64_t subsample_limit = 128) {
  constexpr bool kExtended =
      std::is_invocable_v<BuildFn&, Tape<long double>&, const BoundParams<long double>&>;
  using P = std::conditional_t<kExtended, long double, double>;

  ParamSet<P> probe = params.template cast<P>();
  auto eval = [&](void) -> P {
    Tape<P> tape;
    BoundParams<P> bp = bind(tape, probe);
    Var out = build(tape, bp);
    if (tape.val(out).numel() != 1) throw UsageError("gradient_check: output must be scalar");
    return tape.val(out)[0];
  };

  // Analytic pass.
  Tape<double> tape;
  BoundParams<double> bp = bind(tape, params);
  Var out = build(tape, bp);
  if (tape.val(out).numel() != 1) throw UsageError("gradient_check: output must be scalar");
  tape.backward(out);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(tape.grad(bp.vars[i]));

  const P f0 = eval();
  const P eps = static_cast<P>(epsilon);
  GradCheckReport report;
  report.epsilon = epsilon;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<P>& values = probe.value(pi);
    const std::int64_t n = values.numel();
    std::vector<std::int64_t> picks;
    if (subsample_limit <= 0 || n <= std::max<std::int64_t>(subsample_limit, 100) * 2) {
      picks.resize(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) picks[static_cast<std::size_t>(i)] = i;
    } else {
      const std::int64_t k = std::max<std::int64_t>(subsample_limit, 100);
      picks.reserve(static_cast<std::size_t>(k));
      for (std::int64_t i = 0; i < k; ++i) picks.push_back(i * n / k);
    }

    GradCheckReport::PerParam pp;
    pp.name = params.name(pi);
    for (std::int64_t idx : picks) {
      const P old = values[idx];
      values[idx] = old + eps;
      const P fp = eval();
      values[idx] = old - eps;
      const P fm = eval();
      values[idx] = old;

      const double g_num = static_cast<double>((fp - fm) / (P(2) * eps));
      const double g_ana = analytic[pi][idx];
      // One-sided slopes disagreeing indicates a kink (relu/log floor) inside
      // the probe interval; report those separately instead of failing.  The
      // floor keeps curvature and probe noise on near-flat coordinates from
      // being mistaken for kinks.
      const double gp = static_cast<double>((fp - f0) / eps);
      const double gm = static_cast<double>((f0 - fm) / eps);
      if (std::abs(gp - gm) > 0.05 * std::max({std::abs(gp), std::abs(gm), 1e-2})) {
        ++pp.kink_flagged;
        ++pp.checked;
        continue;
      }
      pp.max_rel_err = std::max(pp.max_rel_err, rel_err(g_ana, g_num));
      ++pp.checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, pp.max_rel_err);
    report.per_param.push_back(std::move(pp));
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace tloc
