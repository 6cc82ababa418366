#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "tloc/common.hpp"
#include "tloc/tape.hpp"
#include "tloc/tensor.hpp"

namespace tloc {

// Named parameter tensors in a stable insertion order.  The order defines the
// checkpoint payload layout and the flattened gradient layout, so it must be
// identical across runs (it is: construction order is deterministic).
template <typename T>
class ParamSet {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> value) {
    if (index_.count(name)) throw UsageError("parameter already defined: " + name);
    index_[name] = entries_.size();
    entries_.push_back({name, std::move(value)});
    return entries_.back().value;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return entries_[it->second].value;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return entries_[it->second].value;
  }

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor<T>& value(std::size_t i) { return entries_[i].value; }
  const Tensor<T>& value(std::size_t i) const { return entries_[i].value; }

  std::int64_t total_entries() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

 private:
  struct Entry {
    std::string name;
    Tensor<T> value;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parameters bound into a tape as gradient-tracked leaves, in ParamSet order.
template <typename T>
struct BoundParams {
  std::vector<Var> vars;
  const ParamSet<T>* source = nullptr;

  Var operator[](std::size_t i) const { return vars[i]; }
};

template <typename T>
BoundParams<T> bind(Tape<T>& tape, const ParamSet<T>& params) {
  BoundParams<T> bp;
  bp.source = &params;
  bp.vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) bp.vars.push_back(tape.param(params.value(i)));
  return bp;
}

// View over a BoundParams giving lookup by name (used by graph builders).
template <typename T>
class ParamVars {
 public:
  ParamVars(const BoundParams<T>& bp) : bp_(&bp) {}
  Var operator()(const std::string& name) const {
    for (std::size_t i = 0; i < bp_->source->size(); ++i)
      if (bp_->source->name(i) == name) return bp_->vars[i];
    throw UsageError("unknown parameter: " + name);
  }

 private:
  const BoundParams<T>* bp_;
};

}  // namespace tloc
