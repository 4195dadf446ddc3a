#include "m2t/params.hpp"

#include <cmath>

#include "m2t/errors.hpp"

namespace m2t {

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ArgumentError("duplicate parameter '" + name + "'");
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

bool ParameterSet::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

std::size_t ParameterSet::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Tensor init_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

ParamBinding::ParamBinding(Tape& tape, const ParameterSet& params)
    : tape_(tape), params_(params), bound_(params.size()) {}

Var ParamBinding::operator()(std::string_view name) { return (*this)(params_.index(name)); }

Var ParamBinding::operator()(std::size_t index) {
  auto& slot = bound_.at(index);
  if (!slot) slot = tape_.leaf_view(params_.at(index));
  return *slot;
}

std::vector<Tensor> ParamBinding::collect(const Gradients& grads) const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (bound_[i] && grads.contains(bound_[i]->id())) {
      out.push_back(grads[*bound_[i]]);
    } else {
      out.push_back(Tensor(params_.at(i).shape()));
    }
  }
  return out;
}

}  // namespace m2t
