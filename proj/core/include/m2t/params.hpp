#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "m2t/autodiff.hpp"

namespace m2t {

/// Named learnable tensors in insertion order.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  std::size_t index(std::string_view name) const;
  const Tensor& get(std::string_view name) const { return values_[index(name)]; }
  Tensor& get(std::string_view name) { return values_[index(name)]; }
  const Tensor& at(std::size_t i) const { return values_[i]; }
  Tensor& at(std::size_t i) { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::size_t size() const noexcept { return values_.size(); }
  /// Number of scalar parameters.
  std::size_t scalar_count() const noexcept;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.names_ == b.names_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Uniform in [−1/√fan_in, 1/√fan_in].
Tensor init_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

/// Lazily exposes the tensors of a ParameterSet as tracked leaves of one
/// tape. Parameters are referenced, not copied; the set must not change while
/// the binding is alive.
class ParamBinding {
 public:
  ParamBinding(Tape& tape, const ParameterSet& params);

  Var operator()(std::string_view name);
  Var operator()(std::size_t index);
  Tape& tape() const noexcept { return tape_; }
  const ParameterSet& params() const noexcept { return params_; }

  /// Gradient per parameter (in set order); zero for parameters the loss
  /// never touched.
  std::vector<Tensor> collect(const Gradients& grads) const;

 private:
  Tape& tape_;
  const ParameterSet& params_;
  std::vector<std::optional<Var>> bound_;
};

}  // namespace m2t
