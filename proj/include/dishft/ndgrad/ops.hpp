// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "dishft/ndgrad/tape.hpp"

// Differentiable primitives. Binary elementwise ops accept either equal
// shapes or a right operand whose shape equals the trailing dimensions of the
// left operand; nothing else broadcasts. Shape violations throw ShapeError
// naming the op and both shapes.
namespace dishft::ndgrad {

// [n x k] . [k x m]
Var matmul(const Var& a, const Var& b);
// [B x n x k] . [B x k x m]
Var batched_matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var relu(const Var& a);
Var leaky_relu(const Var& a, double negative_slope);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);

Var softmax(const Var& a, std::size_t axis);
Var log_softmax(const Var& a, std::size_t axis);

// Full reductions return shape {1}; axis reductions drop the axis (a rank-1
// input reduced along axis 0 yields shape {1}).
Var reduce_sum(const Var& a);
Var reduce_mean(const Var& a);
Var reduce_sum(const Var& a, std::size_t axis);
Var reduce_mean(const Var& a, std::size_t axis);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var reshape(const Var& a, Shape shape);
// Rank-2 transpose.
Var transpose(const Var& a);
// Swap two axes of a rank-2 or rank-3 tensor.
Var transpose(const Var& a, std::size_t axis0, std::size_t axis1);
// Selects slices along axis 0; repeated indices accumulate in backward.
Var gather_rows(const Var& a, const std::vector<std::size_t>& rows);

}  // namespace dishft::ndgrad
