// SPDX-License-Identifier: Apache-2.0
#include "dishft/marketdata/windows.hpp"

#include <cmath>

#include "dishft/error.hpp"

namespace dishft::marketdata {

namespace {

void require_horizon(const StockPanel& panel, std::size_t t, std::size_t horizon, const char* op) {
  if (horizon == 0 || t + horizon >= panel.n_days()) {
    throw RangeError(std::string(op) + ": anchor " + std::to_string(t) + " + horizon " +
                     std::to_string(horizon) + " exceeds last day index " +
                     std::to_string(panel.n_days() - 1));
  }
}

}  // namespace

Labels make_labels(const StockPanel& panel, std::size_t t, std::size_t horizon, double delta) {
  require_horizon(panel, t, horizon, "make_labels");
  if (delta < 0.0) throw RangeError("make_labels: delta must be >= 0");
  const std::size_t n = panel.n_stocks();
  Labels out;
  out.horizon.resize(n);
  out.per_day.resize(n * horizon);
  for (std::size_t s = 0; s < n; ++s) {
    const double base = panel.close(s, t);
    for (std::size_t k = 1; k <= horizon; ++k) {
      const double ret = (panel.close(s, t + k) - base) / base;
      out.per_day[s * horizon + k - 1] = ret > delta ? 1 : 0;
    }
    out.horizon[s] = out.per_day[s * horizon + horizon - 1];
  }
  return out;
}

ndgrad::Tensor make_future_trend(const StockPanel& panel, std::size_t t, std::size_t horizon) {
  require_horizon(panel, t, horizon, "make_future_trend");
  const std::size_t n = panel.n_stocks();
  ndgrad::Tensor out({n, horizon});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < horizon; ++k) {
      out.at(s, k) = panel.close(s, t + k + 1) > panel.close(s, t + k) ? 1.0 : 0.0;
    }
  }
  return out;
}

ndgrad::Tensor history_features(const StockPanel& panel, std::size_t t, std::size_t lookback) {
  if (lookback == 0 || t + 1 < lookback || t >= panel.n_days()) {
    throw RangeError("history_features: lookback " + std::to_string(lookback) +
                     " ending at day " + std::to_string(t) + " is outside the panel");
  }
  const std::size_t n = panel.n_stocks();
  const std::size_t m = panel.n_indicators();
  const std::size_t first = t + 1 - lookback;
  ndgrad::Tensor out({n, lookback, m});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < m; ++c) {
      double mean = 0.0;
      for (std::size_t l = 0; l < lookback; ++l) mean += panel.indicators.at(s, first + l, c);
      mean /= static_cast<double>(lookback);
      double var = 0.0;
      for (std::size_t l = 0; l < lookback; ++l) {
        const double d = panel.indicators.at(s, first + l, c) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(lookback));
      const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
      for (std::size_t l = 0; l < lookback; ++l) {
        out.at(s, l, c) = (panel.indicators.at(s, first + l, c) - mean) * inv;
      }
    }
  }
  return out;
}

std::size_t window_count(std::size_t n_days, const WindowSpec& spec) {
  if (n_days < spec.lookback + spec.horizon + 1) return 0;
  return (n_days - spec.lookback - spec.horizon) / spec.stride + 1;
}

std::vector<WindowSample> windows(const StockPanel& panel, const WindowSpec& spec) {
  if (spec.lookback < 1 || spec.horizon < 1 || spec.stride < 1) {
    throw RangeError("windows: lookback, horizon and stride must be >= 1");
  }
  const std::size_t count = window_count(panel.n_days(), spec);
  std::vector<WindowSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t t = spec.lookback - 1 + i * spec.stride;
    WindowSample w;
    w.anchor = t;
    w.history = history_features(panel, t, spec.lookback);
    w.future_trend = make_future_trend(panel, t, spec.horizon);
    Labels labels = make_labels(panel, t, spec.horizon, spec.delta);
    w.label = std::move(labels.horizon);
    w.label_per_day = std::move(labels.per_day);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace dishft::marketdata
