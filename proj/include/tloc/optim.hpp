#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tloc/params.hpp"

namespace tloc {

// Entry offsets of each tensor in a ParamSet, defining one flat gradient
// vector shared by the optimizer and the per-sample reduction.
template <typename T>
struct FlatLayout {
  std::vector<std::int64_t> offsets;
  std::int64_t total = 0;

  explicit FlatLayout(const ParamSet<T>& params) {
    offsets.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      offsets.push_back(total);
      total += params.value(i).numel();
    }
  }
};

template <typename T>
double global_norm(std::span<const T> v) {
  double acc = 0.0;
  for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

// Scales v in place so its global norm is at most max_norm (no-op when
// max_norm <= 0).  Returns the pre-clip norm.
template <typename T>
double clip_global_norm(std::span<T> v, double max_norm) {
  const double norm = global_norm(std::span<const T>(v.data(), v.size()));
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (T& x : v) x *= scale;
  }
  return norm;
}

template <typename T>
class Adam {
 public:
  Adam(std::int64_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(static_cast<std::size_t>(n), T(0)), v_(static_cast<std::size_t>(n), T(0)) {}

  // One update over the flat gradient; writes into the ParamSet tensors
  // following the layout.
  void step(ParamSet<T>& params, const FlatLayout<T>& layout, std::span<const T> grad) {
    if (static_cast<std::size_t>(layout.total) != grad.size() || grad.size() != m_.size())
      throw UsageError("Adam::step: gradient size does not match state");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor<T>& w = params.value(p);
      const std::int64_t off = layout.offsets[p];
      for (std::int64_t i = 0; i < w.numel(); ++i) {
        const std::size_t j = static_cast<std::size_t>(off + i);
        const double g = static_cast<double>(grad[j]);
        const double m = beta1_ * static_cast<double>(m_[j]) + (1.0 - beta1_) * g;
        const double v = beta2_ * static_cast<double>(v_[j]) + (1.0 - beta2_) * g * g;
        m_[j] = static_cast<T>(m);
        v_[j] = static_cast<T>(v);
        w[i] -= static_cast<T>(lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_));
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<T> m_, v_;
};

}  // namespace tloc
