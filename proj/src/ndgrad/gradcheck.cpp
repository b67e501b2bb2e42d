// SPDX-License-Identifier: Apache-2.0
#include "dishft/ndgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dishft/error.hpp"

namespace dishft::ndgrad {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  const double value = f(tape, vars).value().item();
  if (!std::isfinite(value)) {
    throw NumericError("grad_check: function is non-finite at a perturbed point");
  }
  return value;
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> points, double eps,
                           double tol) {
  std::vector<Tensor> inputs(points.begin(), points.end());

  Tape tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  Var out = f(tape, vars);
  const Gradients grads = tape.backward(out);

  GradCheckReport report;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    const bool has_grad = grads.contains(vars[p].id());
    for (std::size_t i = 0; i < inputs[p].size(); ++i) {
      const double original = inputs[p][i];
      inputs[p][i] = original + eps;
      const double up = evaluate(f, inputs);
      inputs[p][i] = original - eps;
      const double down = evaluate(f, inputs);
      inputs[p][i] = original;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = has_grad ? grads.of(vars[p].id())[i] : 0.0;
      const double abs_err = std::abs(analytic - numeric);
      const double rel_err =
          abs_err / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (report.checked == 1 || rel_err > report.max_rel_error) {
        report.max_rel_error = rel_err;
        report.worst_input = p;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

GradCheckReport grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& point,
                           double eps, double tol) {
  const ScalarFn wrapped = [&f](Tape& tape, std::span<const Var> vars) { return f(tape, vars[0]); };
  return grad_check(wrapped, std::span<const Tensor>(&point, 1), eps, tol);
}

}  // namespace dishft::ndgrad
