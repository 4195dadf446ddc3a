#pragma once

#include <functional>
#include <span>
#include <vector>

#include "m2t/autodiff.hpp"
#include "m2t/params.hpp"

namespace m2t {

/// Scalar-valued function of several tensors, evaluated on a fresh tape.
using MultiScalarFn = std::function<Var(Tape&, std::span<const Var>)>;
using ScalarFn = std::function<Var(Tape&, const Var&)>;

/// Largest relative disagreement between reverse-mode gradients and central
/// finite differences,
///   max_i |analytic_i − (f(x+h·e_i) − f(x−h·e_i)) / 2h| / max(1, |analytic_i|),
/// over every coordinate of every point. Returns +∞ if any evaluation is
/// non-finite.
double grad_check(const MultiScalarFn& f, std::span<const Tensor> points, double h = 1e-5);
double grad_check(const ScalarFn& f, const Tensor& point, double h = 1e-5);

/// Loss built from parameters bound on the binding's tape.
using ParamLossFn = std::function<Var(ParamBinding&)>;

/// The same measure over every entry of every tensor in `params`, which are
/// perturbed in place and restored.
double grad_check(const ParamLossFn& f, ParameterSet& params, double h = 1e-5);

}  // namespace m2t
