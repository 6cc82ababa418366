#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tloc/common.hpp"
#include "tloc/kernels.hpp"
#include "tloc/tensor.hpp"

namespace tloc {

// Handle to a node on a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kMul,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kConcat,
  kMeanCols,
  kWeightedSum,
  kSlice,
  kLog,
  kSmoothL1,
  kSum,
};

const char* op_name(Op op);

template <typename T>
T smooth_l1_scalar(T x) {
  const T ax = std::abs(x);
  return ax < T(1) ? T(0.5) * x * x : ax - T(0.5);
}

// Numerically stable softmax over a contiguous range (max subtraction).
template <typename T>
void softmax_inplace(const T* in, T* out, std::int64_t n) {
  T mx = in[0];
  for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  T sum = T(0);
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    sum += out[i];
  }
  for (std::int64_t i = 0; i < n; ++i) out[i] /= sum;
}

template <typename T>
std::vector<T> softmax_vec(const std::vector<T>& scores) {
  if (scores.empty()) throw UsageError("softmax: empty input");
  std::vector<T> out(scores.size());
  softmax_inplace(scores.data(), out.data(), static_cast<std::int64_t>(scores.size()));
  return out;
}

// Floor applied to attention entries before the calibration log.
constexpr double kLogFloor = 1e-12;

// Reverse-mode tape over the fixed operation set.  Construction is eager:
// creating a node computes its value immediately, so the record of nodes is
// both the graph and the forward tape.  backward() walks it once in reverse.
template <typename T>
class Tape {
 public:
  // ---- leaves ----

  // Leaf whose gradient is wanted (a model parameter).
  Var param(Tensor<T> value) { return push_leaf(std::move(value), true); }
  // Leaf treated as a constant (inputs, targets, masks).
  Var constant(Tensor<T> value) { return push_leaf(std::move(value), false); }
  Var scalar(T v) { return constant(Tensor<T>(Shape::vec(1), {v})); }

  // ---- operations ----

  Var matmul(Var a, Var b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    Shape out;
    if (sa.rank == 2 && sb.rank == 2 && sa.d1 == sb.d0)
      out = Shape::mat(sa.d0, sb.d1);
    else if (sa.rank == 2 && sb.rank == 1 && sa.d1 == sb.d0)
      out = Shape::vec(sa.d0);
    else if (sa.rank == 1 && sb.rank == 2 && sa.d0 == sb.d0)
      out = Shape::vec(sb.d1);
    else
      return fail(Op::kMatmul, a, b);
    Tensor<T> y(out);
    const T* pa = val(a).data();
    const T* pb = val(b).data();
    if (sa.rank == 2 && sb.rank == 2)
      kern::mm_nn(y.data(), pa, pb, sa.d0, sa.d1, sb.d1);
    else if (sb.rank == 1)
      kern::matvec(y.data(), pa, pb, sa.d0, sa.d1);
    else
      kern::vecmat(y.data(), pa, pb, sa.d0, sb.d1);
    return push(Op::kMatmul, a, b, std::move(y));
  }

  // Same-shape addition, or matrix + vector with the vector broadcast across
  // columns (the "(U_g g)1^T" pattern).
  Var add(Var a, Var b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa == sb) {
      Tensor<T> y(sa);
      const T* pa = val(a).data();
      const T* pb = val(b).data();
      for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = pa[i] + pb[i];
      return push(Op::kAdd, a, b, std::move(y));
    }
    if (sa.rank == 1 && sb.rank == 2) std::swap(a, b);
    const Shape& sm = shape(a);
    const Shape& sv = shape(b);
    if (!(sm.rank == 2 && sv.rank == 1 && sv.d0 == sm.d0)) return fail(Op::kAdd, a, b);
    Tensor<T> y(sm);
    const T* pm = val(a).data();
    const T* pv = val(b).data();
    for (std::int64_t i = 0; i < sm.d0; ++i)
      for (std::int64_t j = 0; j < sm.d1; ++j) y[i * sm.d1 + j] = pm[i * sm.d1 + j] + pv[i];
    return push(Op::kAdd, a, b, std::move(y));
  }

  // Elementwise product, or scaling by a 1-element tensor on either side.
  Var mul(Var a, Var b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa == sb) {
      Tensor<T> y(sa);
      const T* pa = val(a).data();
      const T* pb = val(b).data();
      for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = pa[i] * pb[i];
      return push(Op::kMul, a, b, std::move(y));
    }
    if (sa.numel() == 1 && sb.numel() != 1) std::swap(a, b);
    if (shape(b).numel() != 1) return fail(Op::kMul, a, b);
    Tensor<T> y(shape(a));
    const T s = val(b)[0];
    const T* pa = val(a).data();
    for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = pa[i] * s;
    return push(Op::kMul, a, b, std::move(y));
  }

  Var tanh(Var a) { return unary(Op::kTanh, a, [](T x) { return std::tanh(x); }); }
  Var sigmoid(Var a) {
    return unary(Op::kSigmoid, a, [](T x) { return T(1) / (T(1) + std::exp(-x)); });
  }
  Var relu(Var a) {
    return unary(Op::kRelu, a, [](T x) { return x > T(0) ? x : T(0); });
  }
  // log with a floor: log(max(x, 1e-12)).
  Var log(Var a) {
    return unary(Op::kLog, a, [](T x) { return std::log(std::max(x, T(kLogFloor))); });
  }
  Var smooth_l1(Var a) {
    return unary(Op::kSmoothL1, a, [](T x) { return smooth_l1_scalar(x); });
  }

  Var softmax(Var a) {
    const Shape& s = shape(a);
    if (s.d0 < 1) throw UsageError("softmax: empty input");
    if (s.rank != 1) return fail(Op::kSoftmax, a, Var{});
    Tensor<T> y(s);
    softmax_inplace(val(a).data(), y.data(), s.d0);
    return push(Op::kSoftmax, a, Var{}, std::move(y));
  }

  // axis 0: concatenate vectors, or stack matrices with equal column counts.
  // axis 1: lay vectors out as matrix columns, or abut matrices with equal
  // row counts.
  Var concat(int axis, std::span<const Var> parts) {
    if (parts.empty()) throw UsageError("concat: no inputs");
    const int rank = shape(parts[0]).rank;
    std::int64_t fixed = rank == 1 ? 0 : (axis == 0 ? shape(parts[0]).d1 : shape(parts[0]).d0);
    std::int64_t total = 0;
    for (Var p : parts) {
      const Shape& s = shape(p);
      if (s.rank != rank) return fail(Op::kConcat, parts[0], p);
      if (rank == 1) {
        total += s.d0;
      } else {
        if ((axis == 0 ? s.d1 : s.d0) != fixed) return fail(Op::kConcat, parts[0], p);
        total += axis == 0 ? s.d0 : s.d1;
      }
    }
    Shape out;
    if (rank == 1)
      out = axis == 0 ? Shape::vec(total) : Shape::mat(shape(parts[0]).d0, static_cast<std::int64_t>(parts.size()));
    else
      out = axis == 0 ? Shape::mat(total, fixed) : Shape::mat(fixed, total);
    if (rank == 1 && axis == 1) {
      for (Var p : parts)
        if (shape(p).d0 != shape(parts[0]).d0) return fail(Op::kConcat, parts[0], p);
    }

    Tensor<T> y(out);
    if (rank == 1 && axis == 1) {
      // vectors as columns
      const std::int64_t r = out.d0, c = out.d1;
      for (std::int64_t j = 0; j < c; ++j) {
        const T* src = val(parts[static_cast<std::size_t>(j)]).data();
        for (std::int64_t i = 0; i < r; ++i) y[i * c + j] = src[i];
      }
    } else if (axis == 0 || rank == 1) {
      // contiguous block copy (vector concat / vertical stack)
      std::int64_t off = 0;
      for (Var p : parts) {
        const Tensor<T>& v = val(p);
        for (std::int64_t i = 0; i < v.numel(); ++i) y[off + i] = v[i];
        off += v.numel();
      }
    } else {
      // matrices side by side
      std::int64_t coff = 0;
      for (Var p : parts) {
        const Tensor<T>& v = val(p);
        for (std::int64_t i = 0; i < v.rows(); ++i)
          for (std::int64_t j = 0; j < v.cols(); ++j) y[i * out.d1 + coff + j] = v.at(i, j);
        coff += v.cols();
      }
    }
    const std::int32_t arg_start = static_cast<std::int32_t>(concat_args_.size());
    bool any_grad = false;
    for (Var p : parts) {
      concat_args_.push_back(p);
      any_grad = any_grad || wants(p);
    }
    Var r = push(Op::kConcat, parts[0], Var{}, std::move(y));
    Node& n = nodes_[static_cast<std::size_t>(r.id)];
    n.needs_grad = any_grad;
    n.aux0 = arg_start;
    n.aux1 = static_cast<std::int32_t>(parts.size());
    n.aux2 = axis;
    return r;
  }
  Var concat(int axis, std::initializer_list<Var> parts) {
    return concat(axis, std::span<const Var>(parts.begin(), parts.size()));
  }

  Var mean_cols(Var a) {
    const Shape& s = shape(a);
    if (s.rank != 2) return fail(Op::kMeanCols, a, Var{});
    Tensor<T> y(Shape::vec(s.d0));
    const T* p = val(a).data();
    const T inv = T(1) / static_cast<T>(s.d1);
    for (std::int64_t i = 0; i < s.d0; ++i) {
      T acc = T(0);
      for (std::int64_t j = 0; j < s.d1; ++j) acc += p[i * s.d1 + j];
      y[i] = acc * inv;
    }
    return push(Op::kMeanCols, a, Var{}, std::move(y));
  }

  // sum_j w[j] * Z[:,j]
  Var weighted_sum(Var z, Var w) {
    const Shape& sz = shape(z);
    const Shape& sw = shape(w);
    if (!(sz.rank == 2 && sw.rank == 1 && sw.d0 == sz.d1)) return fail(Op::kWeightedSum, z, w);
    Tensor<T> y(Shape::vec(sz.d0));
    const T* pz = val(z).data();
    const T* pw = val(w).data();
    for (std::int64_t i = 0; i < sz.d0; ++i) {
      T acc = T(0);
      for (std::int64_t j = 0; j < sz.d1; ++j) acc += pz[i * sz.d1 + j] * pw[j];
      y[i] = acc;
    }
    return push(Op::kWeightedSum, z, w, std::move(y));
  }

  // Vector slice, or single-column extraction from a matrix (axis 1, len 1),
  // which yields a vector.
  Var slice(Var a, int axis, std::int64_t start, std::int64_t len) {
    const Shape& s = shape(a);
    Tensor<T> y;
    if (s.rank == 1 && axis == 0 && start >= 0 && len >= 1 && start + len <= s.d0) {
      y = Tensor<T>(Shape::vec(len));
      const T* p = val(a).data();
      for (std::int64_t i = 0; i < len; ++i) y[i] = p[start + i];
    } else if (s.rank == 2 && axis == 1 && len == 1 && start >= 0 && start < s.d1) {
      y = Tensor<T>(Shape::vec(s.d0));
      const T* p = val(a).data();
      for (std::int64_t i = 0; i < s.d0; ++i) y[i] = p[i * s.d1 + start];
    } else {
      throw ShapeError(std::string("slice: unsupported slice axis=") + std::to_string(axis) +
                       " start=" + std::to_string(start) + " len=" + std::to_string(len) + " of " + s.str() +
                       " (node " + std::to_string(nodes_.size()) + ")");
    }
    Var r = push(Op::kSlice, a, Var{}, std::move(y));
    Node& n = nodes_[static_cast<std::size_t>(r.id)];
    n.aux0 = axis;
    n.aux1 = static_cast<std::int32_t>(start);
    n.aux2 = static_cast<std::int32_t>(len);
    return r;
  }

  Var sum(Var a) {
    const Tensor<T>& v = val(a);
    T acc = T(0);
    for (std::int64_t i = 0; i < v.numel(); ++i) acc += v[i];
    return push(Op::kSum, a, Var{}, Tensor<T>(Shape::vec(1), {acc}));
  }

  // ---- access ----

  const Tensor<T>& val(Var v) const { return nodes_[check(v)].value; }
  const Shape& shape(Var v) const { return nodes_[check(v)].value.shape(); }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the last backward() output w.r.t. v.  Zero tensor when the
  // node does not influence the output.
  Tensor<T> grad(Var v) const {
    const Node& n = nodes_[check(v)];
    if (!backward_done_) throw UsageError("grad: backward has not been run");
    if (n.grad.numel() == 0) return Tensor<T>(n.value.shape());
    return n.grad;
  }

  // Reverse sweep from a scalar output.
  void backward(Var out) {
    if (backward_done_) throw UsageError("backward: already run on this tape");
    const Node& o = nodes_[check(out)];
    if (o.value.numel() != 1)
      throw UsageError("backward: output must be scalar, got " + o.value.shape().str());
    grad_buf(out.id)[0] = T(1);
    for (std::int32_t id = out.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.grad.numel() == 0 || n.op == Op::kLeaf || !n.needs_grad) continue;
      dispatch_backward(n);
    }
    backward_done_ = true;
  }

  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Op op = Op::kLeaf;
    bool needs_grad = false;
    Var a, b;
    std::int32_t aux0 = 0, aux1 = 0, aux2 = 0;
    Tensor<T> value;
    Tensor<T> grad;
  };

  std::size_t check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
      throw UsageError("invalid Var handle");
    return static_cast<std::size_t>(v.id);
  }

  Var push_leaf(Tensor<T> value, bool needs_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.needs_grad = needs_grad;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  Var push(Op op, Var a, Var b, Tensor<T> value) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.needs_grad = (a.valid() && nodes_[static_cast<std::size_t>(a.id)].needs_grad) ||
                   (b.valid() && nodes_[static_cast<std::size_t>(b.id)].needs_grad);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  [[noreturn]] Var fail(Op op, Var a, Var b) const {
    std::string msg = std::string(op_name(op)) + ": incompatible shapes";
    if (a.valid()) msg += " lhs " + shape(a).str();
    if (b.valid()) msg += " rhs " + shape(b).str();
    msg += " (node " + std::to_string(nodes_.size()) + ")";
    throw ShapeError(msg);
  }

  template <typename F>
  Var unary(Op op, Var a, F f) {
    const Tensor<T>& x = val(a);
    Tensor<T> y(x.shape());
    for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = f(x[i]);
    return push(op, a, Var{}, std::move(y));
  }

  Tensor<T>& grad_buf(std::int32_t id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.numel() == 0) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }
  // Accumulate only into inputs that can reach a parameter.
  bool wants(Var v) const { return v.valid() && nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  void dispatch_backward(Node& n) {
    const Tensor<T>& go = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        const Shape& sa = shape(n.a);
        const Shape& sb = shape(n.b);
        const Tensor<T>& va = val(n.a);
        const Tensor<T>& vb = val(n.b);
        if (sa.rank == 2 && sb.rank == 2) {
          if (wants(n.a)) kern::mm_nt(grad_buf(n.a.id).data(), go.data(), vb.data(), sa.d0, sb.d1, sa.d1, true);
          if (wants(n.b)) kern::mm_tn(grad_buf(n.b.id).data(), va.data(), go.data(), sa.d0, sa.d1, sb.d1, true);
        } else if (sb.rank == 1) {
          if (wants(n.a)) kern::outer_acc(grad_buf(n.a.id).data(), go.data(), vb.data(), sa.d0, sa.d1);
          if (wants(n.b)) kern::vecmat(grad_buf(n.b.id).data(), go.data(), va.data(), sa.d0, sa.d1, true);
        } else {
          if (wants(n.a)) kern::matvec(grad_buf(n.a.id).data(), vb.data(), go.data(), sb.d0, sb.d1, true);
          if (wants(n.b)) kern::outer_acc(grad_buf(n.b.id).data(), va.data(), go.data(), sb.d0, sb.d1);
        }
        break;
      }
      case Op::kAdd: {
        const Shape& sa = shape(n.a);
        const Shape& sb = shape(n.b);
        if (sa == sb) {
          for (Var v : {n.a, n.b})
            if (wants(v)) {
              Tensor<T>& g = grad_buf(v.id);
              for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i];
            }
        } else {
          // n.a is the matrix after normalization in add()
          if (wants(n.a)) {
            Tensor<T>& g = grad_buf(n.a.id);
            for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i];
          }
          if (wants(n.b)) {
            Tensor<T>& g = grad_buf(n.b.id);
            for (std::int64_t i = 0; i < sa.d0; ++i) {
              T acc = T(0);
              for (std::int64_t j = 0; j < sa.d1; ++j) acc += go[i * sa.d1 + j];
              g[i] += acc;
            }
          }
        }
        break;
      }
      case Op::kMul: {
        const Shape& sa = shape(n.a);
        const Shape& sb = shape(n.b);
        const Tensor<T>& va = val(n.a);
        const Tensor<T>& vb = val(n.b);
        if (sa == sb) {
          if (wants(n.a)) {
            Tensor<T>& g = grad_buf(n.a.id);
            for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i] * vb[i];
          }
          if (wants(n.b)) {
            Tensor<T>& g = grad_buf(n.b.id);
            for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i] * va[i];
          }
        } else {
          // n.b is the scalar after normalization in mul()
          if (wants(n.a)) {
            Tensor<T>& g = grad_buf(n.a.id);
            const T s = vb[0];
            for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i] * s;
          }
          if (wants(n.b)) {
            T acc = T(0);
            for (std::int64_t i = 0; i < go.numel(); ++i) acc += go[i] * va[i];
            grad_buf(n.b.id)[0] += acc;
          }
        }
        break;
      }
      case Op::kTanh: {
        if (!wants(n.a)) break;
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i] * (T(1) - n.value[i] * n.value[i]);
        break;
      }
      case Op::kSigmoid: {
        if (!wants(n.a)) break;
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < go.numel(); ++i) g[i] += go[i] * n.value[i] * (T(1) - n.value[i]);
        break;
      }
      case Op::kRelu: {
        if (!wants(n.a)) break;
        const Tensor<T>& x = val(n.a);
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < go.numel(); ++i)
          if (x[i] > T(0)) g[i] += go[i];
        break;
      }
      case Op::kLog: {
        if (!wants(n.a)) break;
        const Tensor<T>& x = val(n.a);
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < go.numel(); ++i)
          if (x[i] > T(kLogFloor)) g[i] += go[i] / x[i];
        break;
      }
      case Op::kSmoothL1: {
        if (!wants(n.a)) break;
        const Tensor<T>& x = val(n.a);
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < go.numel(); ++i) {
          const T d = std::abs(x[i]) < T(1) ? x[i] : (x[i] > T(0) ? T(1) : T(-1));
          g[i] += go[i] * d;
        }
        break;
      }
      case Op::kSoftmax: {
        if (!wants(n.a)) break;
        const std::int64_t m = n.value.numel();
        T dot = T(0);
        for (std::int64_t i = 0; i < m; ++i) dot += go[i] * n.value[i];
        Tensor<T>& g = grad_buf(n.a.id);
        for (std::int64_t i = 0; i < m; ++i) g[i] += n.value[i] * (go[i] - dot);
        break;
      }
      case Op::kConcat: {
        const int axis = n.aux2;
        const std::int32_t start = n.aux0, count = n.aux1;
        const Shape& so = n.value.shape();
        if (shape(concat_args_[static_cast<std::size_t>(start)]).rank == 1 && axis == 1) {
          for (std::int32_t j = 0; j < count; ++j) {
            Var p = concat_args_[static_cast<std::size_t>(start + j)];
            if (!wants(p)) continue;
            Tensor<T>& g = grad_buf(p.id);
            for (std::int64_t i = 0; i < so.d0; ++i) g[i] += go[i * so.d1 + j];
          }
        } else if (axis == 0 || shape(concat_args_[static_cast<std::size_t>(start)]).rank == 1) {
          std::int64_t off = 0;
          for (std::int32_t j = 0; j < count; ++j) {
            Var p = concat_args_[static_cast<std::size_t>(start + j)];
            const std::int64_t len = shape(p).numel();
            if (wants(p)) {
              Tensor<T>& g = grad_buf(p.id);
              for (std::int64_t i = 0; i < len; ++i) g[i] += go[off + i];
            }
            off += len;
          }
        } else {
          std::int64_t coff = 0;
          for (std::int32_t jj = 0; jj < count; ++jj) {
            Var p = concat_args_[static_cast<std::size_t>(start + jj)];
            const Shape& sp = shape(p);
            if (wants(p)) {
              Tensor<T>& g = grad_buf(p.id);
              for (std::int64_t i = 0; i < sp.d0; ++i)
                for (std::int64_t j = 0; j < sp.d1; ++j) g[i * sp.d1 + j] += go[i * so.d1 + coff + j];
            }
            coff += sp.d1;
          }
        }
        break;
      }
      case Op::kMeanCols: {
        if (!wants(n.a)) break;
        const Shape& sa = shape(n.a);
        Tensor<T>& g = grad_buf(n.a.id);
        const T inv = T(1) / static_cast<T>(sa.d1);
        for (std::int64_t i = 0; i < sa.d0; ++i) {
          const T gi = go[i] * inv;
          for (std::int64_t j = 0; j < sa.d1; ++j) g[i * sa.d1 + j] += gi;
        }
        break;
      }
      case Op::kWeightedSum: {
        const Shape& sz = shape(n.a);
        const Tensor<T>& z = val(n.a);
        const Tensor<T>& w = val(n.b);
        if (wants(n.a)) {
          Tensor<T>& g = grad_buf(n.a.id);
          for (std::int64_t i = 0; i < sz.d0; ++i)
            for (std::int64_t j = 0; j < sz.d1; ++j) g[i * sz.d1 + j] += go[i] * w[j];
        }
        if (wants(n.b)) {
          Tensor<T>& g = grad_buf(n.b.id);
          for (std::int64_t j = 0; j < sz.d1; ++j) {
            T acc = T(0);
            for (std::int64_t i = 0; i < sz.d0; ++i) acc += go[i] * z[i * sz.d1 + j];
            g[j] += acc;
          }
        }
        break;
      }
      case Op::kSlice: {
        if (!wants(n.a)) break;
        const Shape& sa = shape(n.a);
        Tensor<T>& g = grad_buf(n.a.id);
        if (sa.rank == 1) {
          for (std::int64_t i = 0; i < n.aux2; ++i) g[n.aux1 + i] += go[i];
        } else {
          for (std::int64_t i = 0; i < sa.d0; ++i) g[i * sa.d1 + n.aux1] += go[i];
        }
        break;
      }
      case Op::kSum: {
        if (!wants(n.a)) break;
        Tensor<T>& g = grad_buf(n.a.id);
        const T s = go[0];
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += s;
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Var> concat_args_;
  bool backward_done_ = false;
};

}  // namespace tloc
