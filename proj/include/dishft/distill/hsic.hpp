// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dishft/ndgrad/tape.hpp"

namespace dishft::distill {

enum class KernelKind { kRbf, kLinear };
enum class BandwidthKind { kMedian, kFixed };
enum class HsicMode { kPerStockDims, kBatchSamples };
enum class HsicSign { kMaximizeDependence, kLiteral };

struct HsicConfig {
  KernelKind kernel = KernelKind::kRbf;
  BandwidthKind bandwidth = BandwidthKind::kMedian;
  double sigma = 1.0;  // used when bandwidth is fixed
  HsicMode mode = HsicMode::kPerStockDims;
  HsicSign sign = HsicSign::kMaximizeDependence;

  bool operator==(const HsicConfig&) const = default;

  void validate() const;
};

enum class DistillKind { kHsic, kMse };

// D[b, i, j] = |x[b, i] - x[b, j]|^2 for x [B x m x d]; exact zeros on the
// diagonal.
ndgrad::Var pairwise_sq_dist(const ndgrad::Var& x);

// Median of the off-diagonal pairwise squared distances of each batch
// entry, or 1 where that median is 0. Gradients reach the selected entries.
ndgrad::Var median_bandwidth(const ndgrad::Var& sq_dist);

// exp(-D / (2 s2)) with one squared bandwidth per batch entry.
ndgrad::Var rbf_kernel(const ndgrad::Var& sq_dist, const ndgrad::Var& s2);

// H G H with H = I - 1/m 11^T, per batch entry of G [B x m x m].
ndgrad::Var center_gram(const ndgrad::Var& gram);

// Kernel matrices [B x m x m] of samples x [B x m x d].
ndgrad::Var kernel_matrix(const ndgrad::Var& x, const HsicConfig& cfg);

// (m-1)^-2 tr(K H L H) for each batch entry; x, y [B x m x d] -> [B].
ndgrad::Var hsic_batched(const ndgrad::Var& x, const ndgrad::Var& y, const HsicConfig& cfg);

// Single HSIC with the m rows of x, y ([m] or [m x d]) as samples.
ndgrad::Var hsic(const ndgrad::Var& x, const ndgrad::Var& y, const HsicConfig& cfg);

// student, teacher [N x D]. HSIC: per-stock HSIC over the D coordinates
// averaged over stocks (or one HSIC over stocks in batch-samples mode),
// negated when maximising dependence. MSE: mean squared difference.
ndgrad::Var distill_loss(const ndgrad::Var& student, const ndgrad::Var& teacher, DistillKind kind,
                         const HsicConfig& cfg);

// pred + lambda * distill.
ndgrad::Var combined_loss(const ndgrad::Var& pred, const ndgrad::Var& distill, double lambda);

}  // namespace dishft::distill
