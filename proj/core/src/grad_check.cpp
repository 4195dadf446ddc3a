#include "m2t/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace m2t {

namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Tensor>& points) {
  Tape tape(false);
  std::vector<Var> vars;
  vars.reserve(points.size());
  for (const Tensor& p : points) vars.push_back(tape.constant_view(p));
  return f(tape, vars).item();
}

}  // namespace

double grad_check(const MultiScalarFn& f, std::span<const Tensor> points, double h) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Tensor> work(points.begin(), points.end());

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : work) vars.push_back(tape.leaf_view(p));
    Var out = f(tape, vars);
    if (!std::isfinite(out.item())) return kInf;
    Gradients grads = tape.backward(out);
    for (const Var& v : vars) analytic.push_back(grads[v]);
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < work.size(); ++k) {
    for (std::size_t i = 0; i < work[k].size(); ++i) {
      const double saved = work[k][i];
      work[k][i] = saved + h;
      const double up = evaluate(f, work);
      work[k][i] = saved - h;
      const double down = evaluate(f, work);
      work[k][i] = saved;
      const double a = analytic[k][i];
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(a)) return kInf;
      const double numeric = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

double grad_check(const ScalarFn& f, const Tensor& point, double h) {
  const Tensor points[] = {point};
  return grad_check([&f](Tape& t, std::span<const Var> v) { return f(t, v[0]); }, points, h);
}

double grad_check(const ParamLossFn& f, ParameterSet& params, double h) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Tensor> analytic;
  {
    Tape tape;
    ParamBinding binding(tape, params);
    Var out = f(binding);
    if (!std::isfinite(out.item())) return kInf;
    analytic = binding.collect(tape.backward(out));
  }
  auto evaluate_params = [&] {
    Tape tape(false);
    ParamBinding binding(tape, params);
    return f(binding).item();
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = params.at(k);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = evaluate_params();
      t[i] = saved - h;
      const double down = evaluate_params();
      t[i] = saved;
      const double a = analytic[k][i];
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(a)) return kInf;
      worst = std::max(worst, std::abs(a - (up - down) / (2.0 * h)) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

}  // namespace m2t
