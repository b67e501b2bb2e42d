// SPDX-License-Identifier: Apache-2.0
#include "dishft/ndgrad/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dishft/error.hpp"

namespace dishft::ndgrad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
  throw ShapeError(std::string(op) + ": shape " + to_string(a) + " " + why);
}

// Number of times b repeats to cover a (b equal to a or a trailing suffix).
std::size_t broadcast_repeats(const char* op, const Shape& a, const Shape& b) {
  if (b.size() > a.size() || !std::equal(b.begin(), b.end(), a.end() - b.size())) {
    shape_fail(op, a, b);
  }
  return element_count(a) / element_count(b);
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const char* op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) shape_fail(op, s, "has no axis " + std::to_string(axis));
  AxisSplit out;
  for (std::size_t i = 0; i < axis; ++i) out.outer *= s[i];
  out.length = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) out.inner *= s[i];
  return out;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

template <typename Fwd, typename Deriv>
Var unary(const char* op, const Var& a, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(x[i]);
  return a.tape().record(op, std::move(out), {a}, [deriv](const BackwardContext& ctx) {
    const Tensor& x = *ctx.parent_values[0];
    Tensor& gx = *ctx.parent_grads[0];
    for (std::size_t i = 0; i < gx.size(); ++i) {
      gx[i] += ctx.out_grad[i] * deriv(x[i], ctx.out_value[i]);
    }
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) shape_fail("matmul", sa, sb);
  const auto n = static_cast<Eigen::Index>(sa[0]);
  const auto k = static_cast<Eigen::Index>(sa[1]);
  const auto m = static_cast<Eigen::Index>(sb[1]);
  Tensor out({sa[0], sb[1]});
  MatMap(out.data(), n, m).noalias() =
      ConstMatMap(a.value().data(), n, k) * ConstMatMap(b.value().data(), k, m);
  return a.tape().record("matmul", std::move(out), {a, b}, [n, k, m](const BackwardContext& ctx) {
    ConstMatMap g(ctx.out_grad.data(), n, m);
    if (Tensor* ga = ctx.parent_grads[0]) {
      MatMap(ga->data(), n, k).noalias() += g * ConstMatMap(ctx.parent_values[1]->data(), k, m).transpose();
    }
    if (Tensor* gb = ctx.parent_grads[1]) {
      MatMap(gb->data(), k, m).noalias() += ConstMatMap(ctx.parent_values[0]->data(), n, k).transpose() * g;
    }
  });
}

Var batched_matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0] || sa[2] != sb[1]) {
    shape_fail("batched_matmul", sa, sb);
  }
  const std::size_t batch = sa[0];
  const auto n = static_cast<Eigen::Index>(sa[1]);
  const auto k = static_cast<Eigen::Index>(sa[2]);
  const auto m = static_cast<Eigen::Index>(sb[2]);
  Tensor out({batch, sa[1], sb[2]});
  for (std::size_t i = 0; i < batch; ++i) {
    MatMap(out.data() + i * n * m, n, m).noalias() =
        ConstMatMap(a.value().data() + i * n * k, n, k) * ConstMatMap(b.value().data() + i * k * m, k, m);
  }
  return a.tape().record("batched_matmul", std::move(out), {a, b},
                         [batch, n, k, m](const BackwardContext& ctx) {
                           const Tensor& av = *ctx.parent_values[0];
                           const Tensor& bv = *ctx.parent_values[1];
                           for (std::size_t i = 0; i < batch; ++i) {
                             ConstMatMap g(ctx.out_grad.data() + i * n * m, n, m);
                             if (Tensor* ga = ctx.parent_grads[0]) {
                               MatMap(ga->data() + i * n * k, n, k).noalias() +=
                                   g * ConstMatMap(bv.data() + i * k * m, k, m).transpose();
                             }
                             if (Tensor* gb = ctx.parent_grads[1]) {
                               MatMap(gb->data() + i * k * m, k, m).noalias() +=
                                   ConstMatMap(av.data() + i * n * k, n, k).transpose() * g;
                             }
                           }
                         });
}

Var add(const Var& a, const Var& b) {
  const std::size_t reps = broadcast_repeats("add", a.shape(), b.shape());
  const Tensor& bv = b.value();
  const std::size_t inner = bv.size();
  Tensor out = a.value();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] += bv[i];
  }
  return a.tape().record("add", std::move(out), {a, b}, [reps, inner](const BackwardContext& ctx) {
    if (Tensor* ga = ctx.parent_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += ctx.out_grad[i];
    }
    if (Tensor* gb = ctx.parent_grads[1]) {
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < inner; ++i) (*gb)[i] += ctx.out_grad[r * inner + i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  const std::size_t reps = broadcast_repeats("sub", a.shape(), b.shape());
  const Tensor& bv = b.value();
  const std::size_t inner = bv.size();
  Tensor out = a.value();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] -= bv[i];
  }
  return a.tape().record("sub", std::move(out), {a, b}, [reps, inner](const BackwardContext& ctx) {
    if (Tensor* ga = ctx.parent_grads[0]) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += ctx.out_grad[i];
    }
    if (Tensor* gb = ctx.parent_grads[1]) {
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < inner; ++i) (*gb)[i] -= ctx.out_grad[r * inner + i];
      }
    }
  });
}

Var mul(const Var& a, const Var& b) {
  const std::size_t reps = broadcast_repeats("mul", a.shape(), b.shape());
  const Tensor& bv = b.value();
  const std::size_t inner = bv.size();
  Tensor out = a.value();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] *= bv[i];
  }
  return a.tape().record("mul", std::move(out), {a, b}, [reps, inner](const BackwardContext& ctx) {
    const Tensor& av = *ctx.parent_values[0];
    const Tensor& bv = *ctx.parent_values[1];
    Tensor* ga = ctx.parent_grads[0];
    Tensor* gb = ctx.parent_grads[1];
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t j = r * inner + i;
        if (ga) (*ga)[j] += ctx.out_grad[j] * bv[i];
        if (gb) (*gb)[i] += ctx.out_grad[j] * av[j];
      }
    }
  });
}

Var div(const Var& a, const Var& b) {
  const std::size_t reps = broadcast_repeats("div", a.shape(), b.shape());
  const Tensor& bv = b.value();
  const std::size_t inner = bv.size();
  Tensor out = a.value();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] /= bv[i];
  }
  return a.tape().record("div", std::move(out), {a, b}, [reps, inner](const BackwardContext& ctx) {
    const Tensor& bv = *ctx.parent_values[1];
    Tensor* ga = ctx.parent_grads[0];
    Tensor* gb = ctx.parent_grads[1];
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t j = r * inner + i;
        if (ga) (*ga)[j] += ctx.out_grad[j] / bv[i];
        if (gb) (*gb)[i] -= ctx.out_grad[j] * ctx.out_value[j] / bv[i];
      }
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.tape().record("scale", std::move(out), {a}, [factor](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * ctx.out_grad[i];
  });
}

Var relu(const Var& a) {
  // Subgradient at 0 is 0.
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& a, double negative_slope) {
  return unary(
      "leaky_relu", a, [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Var sigmoid(const Var& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(const Var& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var softmax(const Var& a, std::size_t axis) {
  const AxisSplit s = split_at("softmax", a.shape(), axis);
  const Tensor& x = a.value();
  Tensor out(a.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.inner; ++k) {
      const std::size_t base = o * s.length * s.inner + k;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < s.length; ++i) mx = std::max(mx, x[base + i * s.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) {
        const double e = std::exp(x[base + i * s.inner] - mx);
        out[base + i * s.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < s.length; ++i) out[base + i * s.inner] /= total;
    }
  }
  return a.tape().record("softmax", std::move(out), {a}, [s](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    const Tensor& y = ctx.out_value;
    const Tensor& g = ctx.out_grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < s.inner; ++k) {
        const std::size_t base = o * s.length * s.inner + k;
        double dot = 0.0;
        for (std::size_t i = 0; i < s.length; ++i) {
          dot += g[base + i * s.inner] * y[base + i * s.inner];
        }
        for (std::size_t i = 0; i < s.length; ++i) {
          const std::size_t j = base + i * s.inner;
          ga[j] += y[j] * (g[j] - dot);
        }
      }
    }
  });
}

Var log_softmax(const Var& a, std::size_t axis) {
  const AxisSplit s = split_at("log_softmax", a.shape(), axis);
  const Tensor& x = a.value();
  Tensor out(a.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.inner; ++k) {
      const std::size_t base = o * s.length * s.inner + k;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < s.length; ++i) mx = std::max(mx, x[base + i * s.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) total += std::exp(x[base + i * s.inner] - mx);
      const double lse = mx + std::log(total);
      for (std::size_t i = 0; i < s.length; ++i) {
        out[base + i * s.inner] = x[base + i * s.inner] - lse;
      }
    }
  }
  return a.tape().record("log_softmax", std::move(out), {a}, [s](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    const Tensor& y = ctx.out_value;
    const Tensor& g = ctx.out_grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < s.inner; ++k) {
        const std::size_t base = o * s.length * s.inner + k;
        double gsum = 0.0;
        for (std::size_t i = 0; i < s.length; ++i) gsum += g[base + i * s.inner];
        for (std::size_t i = 0; i < s.length; ++i) {
          const std::size_t j = base + i * s.inner;
          ga[j] += g[j] - std::exp(y[j]) * gsum;
        }
      }
    }
  });
}

Var reduce_sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record("reduce_sum", Tensor::scalar(total), {a}, [](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    const double g = ctx.out_grad[0];
    for (double& v : ga.values()) v += g;
  });
}

Var reduce_mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record("reduce_mean", Tensor::scalar(total / n), {a},
                         [n](const BackwardContext& ctx) {
                           Tensor& ga = *ctx.parent_grads[0];
                           const double g = ctx.out_grad[0] / n;
                           for (double& v : ga.values()) v += g;
                         });
}

namespace {

Var reduce_axis(const char* op, const Var& a, std::size_t axis, bool mean) {
  const AxisSplit s = split_at(op, a.shape(), axis);
  const double factor = mean ? 1.0 / static_cast<double>(s.length) : 1.0;
  Tensor out(drop_axis(a.shape(), axis));
  const Tensor& x = a.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t k = 0; k < s.inner; ++k) {
      double total = 0.0;
      for (std::size_t i = 0; i < s.length; ++i) total += x[(o * s.length + i) * s.inner + k];
      out[o * s.inner + k] = total * factor;
    }
  }
  return a.tape().record(op, std::move(out), {a}, [s, factor](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < s.inner; ++k) {
        const double g = ctx.out_grad[o * s.inner + k] * factor;
        for (std::size_t i = 0; i < s.length; ++i) ga[(o * s.length + i) * s.inner + k] += g;
      }
    }
  });
}

}  // namespace

Var reduce_sum(const Var& a, std::size_t axis) { return reduce_axis("reduce_sum", a, axis, false); }

Var reduce_mean(const Var& a, std::size_t axis) {
  return reduce_axis("reduce_mean", a, axis, true);
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  const Shape& first = parts.front().shape();
  const AxisSplit head = split_at("concat", first, axis);
  std::vector<std::size_t> lengths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) shape_fail("concat", first, s);
    lengths.push_back(s[axis]);
    total += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total;
  Tensor out(out_shape);
  const std::size_t outer = head.outer;
  const std::size_t inner = head.inner;
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& x = parts[p].value();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.data() + o * lengths[p] * inner, lengths[p] * inner,
                  out.data() + (o * total + offset) * inner);
    }
    offset += lengths[p];
  }
  return parts.front().tape().record(
      "concat", std::move(out), parts, [lengths, total, outer, inner](const BackwardContext& ctx) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < lengths.size(); ++p) {
          if (Tensor* g = ctx.parent_grads[p]) {
            for (std::size_t o = 0; o < outer; ++o) {
              const double* src = ctx.out_grad.data() + (o * total + offset) * inner;
              double* dst = g->data() + o * lengths[p] * inner;
              for (std::size_t i = 0; i < lengths[p] * inner; ++i) dst[i] += src[i];
            }
          }
          offset += lengths[p];
        }
      });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape().record("reshape", std::move(out), {a}, [](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += ctx.out_grad[i];
  });
}

Var transpose(const Var& a) {
  if (a.shape().size() != 2) shape_fail("transpose", a.shape(), "is not rank 2");
  return transpose(a, 0, 1);
}

Var transpose(const Var& a, std::size_t axis0, std::size_t axis1) {
  const Shape& in = a.shape();
  if (in.size() < 2 || axis0 >= in.size() || axis1 >= in.size()) {
    shape_fail("transpose", in, "cannot swap axes " + std::to_string(axis0) + "," +
                                    std::to_string(axis1));
  }
  Shape dims = in;
  while (dims.size() < 3) dims.insert(dims.begin(), 1);
  const std::size_t lift = 3 - in.size();
  std::array<std::size_t, 3> perm{0, 1, 2};
  std::swap(perm[axis0 + lift], perm[axis1 + lift]);
  const std::array<std::size_t, 3> in_stride{dims[1] * dims[2], dims[2], 1};
  Shape out_dims{dims[perm[0]], dims[perm[1]], dims[perm[2]]};
  // Source offset for every destination element.
  std::vector<std::size_t> src(element_count(out_dims));
  std::size_t d = 0;
  for (std::size_t i = 0; i < out_dims[0]; ++i) {
    for (std::size_t j = 0; j < out_dims[1]; ++j) {
      for (std::size_t k = 0; k < out_dims[2]; ++k) {
        src[d++] = i * in_stride[perm[0]] + j * in_stride[perm[1]] + k * in_stride[perm[2]];
      }
    }
  }
  Shape out_shape(out_dims.begin() + static_cast<std::ptrdiff_t>(lift), out_dims.end());
  Tensor out(out_shape);
  const Tensor& av = a.value();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = av[src[i]];
  return a.tape().record("transpose", std::move(out), {a}, [src](const BackwardContext& ctx) {
    Tensor& ga = *ctx.parent_grads[0];
    for (std::size_t i = 0; i < src.size(); ++i) ga[src[i]] += ctx.out_grad[i];
  });
}

Var gather_rows(const Var& a, const std::vector<std::size_t>& rows) {
  const Shape& in = a.shape();
  const std::size_t row_size = element_count(in) / in[0];
  for (std::size_t r : rows) {
    if (r >= in[0]) {
      throw RangeError("gather_rows: row " + std::to_string(r) + " out of range for shape " +
                       to_string(in));
    }
  }
  if (rows.empty()) throw ShapeError("gather_rows: empty row list");
  Shape out_shape = in;
  out_shape[0] = rows.size();
  Tensor out(out_shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(a.value().data() + rows[i] * row_size, row_size, out.data() + i * row_size);
  }
  return a.tape().record("gather_rows", std::move(out), {a},
                         [rows, row_size](const BackwardContext& ctx) {
                           Tensor& ga = *ctx.parent_grads[0];
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                             for (std::size_t c = 0; c < row_size; ++c) {
                               ga[rows[i] * row_size + c] += ctx.out_grad[i * row_size + c];
                             }
                           }
                         });
}

}  // namespace dishft::ndgrad
