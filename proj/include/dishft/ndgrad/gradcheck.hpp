// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dishft/ndgrad/tape.hpp"

namespace dishft::ndgrad {

// Scalar-valued function of one or more tensor inputs, expressed on a tape.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

// Compares reverse-mode gradients with central differences
// (f(x+eps) - f(x-eps)) / 2eps at every element of every input. The
// relative error is |a - n| / max(|a|, |n|, 1e-4); the floor keeps
// vanishing gradients from amplifying round-off. Throws NumericError when f
// is non-finite at a perturbed point.
GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> points, double eps, double tol);

GradCheckReport grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& point,
                           double eps, double tol);

}  // namespace dishft::ndgrad
