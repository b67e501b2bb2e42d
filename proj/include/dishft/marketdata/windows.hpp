// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "dishft/marketdata/panel.hpp"

namespace dishft::marketdata {

struct Labels {
  Bits horizon;  // [N], close at t+T vs close at t
  Bits per_day;  // [N x T], close at t+k vs close at t for k = 1..T
};

// y = 1 iff (p[tau] - p[t]) / p[t] > delta, strictly.
Labels make_labels(const StockPanel& panel, std::size_t t, std::size_t horizon, double delta);

// Bit k (k = 0..T-1) is 1 iff close[t+k+1] > close[t+k]. Returned as an
// [N x T] tensor of 0/1 values.
ndgrad::Tensor make_future_trend(const StockPanel& panel, std::size_t t, std::size_t horizon);

// [N x L x M] lookback ending at t, z-scored per stock and indicator with
// statistics of that lookback only.
ndgrad::Tensor history_features(const StockPanel& panel, std::size_t t, std::size_t lookback);

struct WindowSample {
  std::size_t anchor = 0;
  ndgrad::Tensor history;       // [N x L x M]
  ndgrad::Tensor future_trend;  // [N x T]
  Bits label;                   // [N]
  Bits label_per_day;           // [N x T]
};

struct WindowSpec {
  std::size_t lookback = 20;
  std::size_t horizon = 20;
  double delta = 0.04;
  std::size_t stride = 1;
};

// Anchors run over [L-1, days-T-1] in steps of `stride`, chronologically.
std::vector<WindowSample> windows(const StockPanel& panel, const WindowSpec& spec);

std::size_t window_count(std::size_t n_days, const WindowSpec& spec);

}  // namespace dishft::marketdata
