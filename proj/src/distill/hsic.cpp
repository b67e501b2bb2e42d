// SPDX-License-Identifier: Apache-2.0
#include "dishft/distill/hsic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dishft/error.hpp"
#include "dishft/ndgrad/ops.hpp"

namespace dishft::distill {

namespace nd = ndgrad;

namespace {

void require_gram(const char* op, const nd::Shape& s) {
  if (s.size() != 3 || s[1] != s[2]) throw ShapeError(std::string(op) + ": expected [B x m x m], got " + nd::to_string(s));
}

}  // namespace

void HsicConfig::validate() const {
  if (bandwidth == BandwidthKind::kFixed && !(sigma > 0.0 && std::isfinite(sigma))) {
    throw ConfigError("invalid HSIC config: fixed sigma must be > 0");
  }
}

nd::Var pairwise_sq_dist(const nd::Var& x) {
  const nd::Shape& s = x.shape();
  if (s.size() != 3) throw ShapeError("pairwise_sq_dist: expected [B x m x d], got " + nd::to_string(s));
  const std::size_t b = s[0], m = s[1], d = s[2];
  const nd::Tensor& xv = x.value();
  nd::Tensor out({b, m, m});
  for (std::size_t k = 0; k < b; ++k) {
    const double* base = xv.data() + k * m * d;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = base[i * d + c] - base[j * d + c];
          acc += diff * diff;
        }
        out.at(k, i, j) = out.at(k, j, i) = acc;
      }
    }
  }
  return x.tape().record("pairwise_sq_dist", std::move(out), {x}, [b, m, d](const nd::BackwardContext& ctx) {
    nd::Tensor* gx = ctx.parent_grads[0];
    if (!gx) return;
    const nd::Tensor& xv = *ctx.parent_values[0];
    for (std::size_t k = 0; k < b; ++k) {
      const double* base = xv.data() + k * m * d;
      double* gbase = gx->data() + k * m * d;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          const double g = 2.0 * (ctx.out_grad.at(k, i, j) + ctx.out_grad.at(k, j, i));
          for (std::size_t c = 0; c < d; ++c) {
            const double v = g * (base[i * d + c] - base[j * d + c]);
            gbase[i * d + c] += v;
            gbase[j * d + c] -= v;
          }
        }
      }
    }
  });
}

nd::Var median_bandwidth(const nd::Var& sq_dist) {
  const nd::Shape& s = sq_dist.shape();
  require_gram("median_bandwidth", s);
  const std::size_t b = s[0], m = s[1];
  if (m < 2) throw RangeError("median_bandwidth: need at least 2 samples");
  const nd::Tensor& dv = sq_dist.value();
  const std::size_t pairs = m * (m - 1) / 2;

  // Flat offsets within one m x m block of the entries each median uses.
  std::vector<std::vector<std::size_t>> picks(b);
  nd::Tensor out({b});
  std::vector<std::size_t> offsets;
  offsets.reserve(pairs);
  for (std::size_t k = 0; k < b; ++k) {
    const double* block = dv.data() + k * m * m;
    offsets.clear();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) offsets.push_back(i * m + j);
    }
    auto less = [block](std::size_t a, std::size_t c) { return block[a] < block[c] || (block[a] == block[c] && a < c); };
    const std::size_t hi = pairs / 2;
    std::nth_element(offsets.begin(), offsets.begin() + hi, offsets.end(), less);
    std::vector<std::size_t> chosen{offsets[hi]};
    if (pairs % 2 == 0) {
      chosen.push_back(*std::max_element(offsets.begin(), offsets.begin() + hi, less));
    }
    double med = 0.0;
    for (std::size_t o : chosen) med += block[o];
    med /= static_cast<double>(chosen.size());
    if (med > 0.0) {
      out[k] = med;
      picks[k] = std::move(chosen);
    } else {
      out[k] = 1.0;
    }
  }
  return sq_dist.tape().record("median_bandwidth", std::move(out), {sq_dist},
                               [picks, m](const nd::BackwardContext& ctx) {
                                 nd::Tensor* g = ctx.parent_grads[0];
                                 if (!g) return;
                                 for (std::size_t k = 0; k < picks.size(); ++k) {
                                   const double share = ctx.out_grad[k] / static_cast<double>(picks[k].size());
                                   for (std::size_t o : picks[k]) (*g)[k * m * m + o] += share;
                                 }
                               });
}

nd::Var rbf_kernel(const nd::Var& sq_dist, const nd::Var& s2) {
  const nd::Shape& s = sq_dist.shape();
  require_gram("rbf_kernel", s);
  const std::size_t b = s[0], mm = s[1] * s[2];
  if (s2.shape() != nd::Shape{b}) {
    throw ShapeError("rbf_kernel: bandwidths " + nd::to_string(s2.shape()) + " for " + nd::to_string(s));
  }
  nd::Tensor out(s);
  for (std::size_t k = 0; k < b; ++k) {
    const double inv = 1.0 / (2.0 * s2.value()[k]);
    for (std::size_t i = 0; i < mm; ++i) out[k * mm + i] = std::exp(-sq_dist.value()[k * mm + i] * inv);
  }
  return sq_dist.tape().record("rbf_kernel", std::move(out), {sq_dist, s2}, [b, mm](const nd::BackwardContext& ctx) {
    const nd::Tensor& dv = *ctx.parent_values[0];
    const nd::Tensor& sv = *ctx.parent_values[1];
    for (std::size_t k = 0; k < b; ++k) {
      const double inv = 1.0 / (2.0 * sv[k]);
      double gs = 0.0;
      for (std::size_t i = 0; i < mm; ++i) {
        const std::size_t j = k * mm + i;
        const double gk = ctx.out_grad[j] * ctx.out_value[j];
        if (ctx.parent_grads[0]) (*ctx.parent_grads[0])[j] -= gk * inv;
        gs += gk * dv[j];
      }
      // d/ds2 of exp(-d / (2 s2)) = K d / (2 s2^2)
      if (ctx.parent_grads[1]) (*ctx.parent_grads[1])[k] += gs * inv / sv[k];
    }
  });
}

nd::Var center_gram(const nd::Var& gram) {
  const nd::Shape& s = gram.shape();
  require_gram("center_gram", s);
  const std::size_t b = s[0], m = s[1];
  // H G H = G - row means - column means + grand mean; the map is
  // self-adjoint, so the backward applies it to the output gradient.
  auto center = [b, m](const nd::Tensor& g, nd::Tensor& out, bool accumulate) {
    std::vector<double> row(m), col(m);
    for (std::size_t k = 0; k < b; ++k) {
      const double* gk = g.data() + k * m * m;
      std::fill(row.begin(), row.end(), 0.0);
      std::fill(col.begin(), col.end(), 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          row[i] += gk[i * m + j];
          col[j] += gk[i * m + j];
        }
      }
      for (std::size_t i = 0; i < m; ++i) total += row[i];
      const double inv = 1.0 / static_cast<double>(m);
      double* ok = out.data() + k * m * m;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          const double v = gk[i * m + j] - row[i] * inv - col[j] * inv + total * inv * inv;
          if (accumulate) ok[i * m + j] += v;
          else ok[i * m + j] = v;
        }
      }
    }
  };
  nd::Tensor out(s);
  center(gram.value(), out, false);
  return gram.tape().record("center_gram", std::move(out), {gram}, [center](const nd::BackwardContext& ctx) {
    if (ctx.parent_grads[0]) center(ctx.out_grad, *ctx.parent_grads[0], true);
  });
}

nd::Var kernel_matrix(const nd::Var& x, const HsicConfig& cfg) {
  cfg.validate();
  if (cfg.kernel == KernelKind::kLinear) return nd::batched_matmul(x, nd::transpose(x, 1, 2));
  const nd::Var d2 = pairwise_sq_dist(x);
  nd::Var s2;
  if (cfg.bandwidth == BandwidthKind::kMedian) {
    s2 = median_bandwidth(d2);
  } else {
    s2 = x.tape().constant(nd::Tensor({x.shape()[0]}, cfg.sigma * cfg.sigma));
  }
  return rbf_kernel(d2, s2);
}

nd::Var hsic_batched(const nd::Var& x, const nd::Var& y, const HsicConfig& cfg) {
  const nd::Shape& sx = x.shape();
  if (sx.size() != 3 || y.shape().size() != 3 || sx[0] != y.shape()[0] || sx[1] != y.shape()[1]) {
    throw ShapeError("hsic: incompatible shapes " + nd::to_string(sx) + " and " + nd::to_string(y.shape()));
  }
  const std::size_t b = sx[0], m = sx[1];
  if (m < 2) throw RangeError("hsic: need at least 2 samples, got " + std::to_string(m));
  const nd::Var k = kernel_matrix(x, cfg);
  const nd::Var lc = center_gram(kernel_matrix(y, cfg));
  const nd::Var prod = nd::reshape(nd::mul(k, lc), {b, m * m});
  const double norm = static_cast<double>(m - 1) * static_cast<double>(m - 1);
  return nd::scale(nd::reduce_sum(prod, 1), 1.0 / norm);
}

nd::Var hsic(const nd::Var& x, const nd::Var& y, const HsicConfig& cfg) {
  auto as_batch = [](const nd::Var& v) {
    const nd::Shape& s = v.shape();
    if (s.size() == 1) return nd::reshape(v, {1, s[0], 1});
    if (s.size() == 2) return nd::reshape(v, {1, s[0], s[1]});
    throw ShapeError("hsic: expected [m] or [m x d], got " + nd::to_string(s));
  };
  return nd::reshape(hsic_batched(as_batch(x), as_batch(y), cfg), {1});
}

nd::Var distill_loss(const nd::Var& student, const nd::Var& teacher, DistillKind kind, const HsicConfig& cfg) {
  const nd::Shape& s = student.shape();
  if (s.size() != 2 || teacher.shape() != s) {
    throw ShapeError("distill_loss: student " + nd::to_string(s) + " and teacher " +
                     nd::to_string(teacher.shape()) + " embeddings differ");
  }
  if (kind == DistillKind::kMse) {
    const nd::Var diff = nd::sub(student, teacher);
    return nd::reduce_mean(nd::mul(diff, diff));
  }
  nd::Var value;
  if (cfg.mode == HsicMode::kPerStockDims) {
    value = nd::reduce_mean(hsic_batched(nd::reshape(student, {s[0], s[1], 1}), nd::reshape(teacher, {s[0], s[1], 1}), cfg));
  } else {
    value = nd::reduce_mean(hsic_batched(nd::reshape(student, {1, s[0], s[1]}), nd::reshape(teacher, {1, s[0], s[1]}), cfg));
  }
  return cfg.sign == HsicSign::kMaximizeDependence ? nd::scale(value, -1.0) : value;
}

nd::Var combined_loss(const nd::Var& pred, const nd::Var& distill, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("combined_loss: lambda must be >= 0");
  return nd::add(pred, nd::scale(distill, lambda));
}

}  // namespace dishft::distill
