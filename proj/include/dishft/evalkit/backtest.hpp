// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dishft/marketdata/panel.hpp"

namespace dishft::evalkit {

struct BacktestPolicy {
  std::size_t top_k = 10;
  std::size_t rebalance_every = 20;  // trading days

  bool operator==(const BacktestPolicy&) const = default;

  void validate() const;
};

struct Position {
  std::size_t day = 0;              // panel day index of the rebalance
  std::vector<std::size_t> stocks;  // held until the next rebalance
};

struct BacktestResult {
  std::vector<std::size_t> days;     // panel day indices, first anchor to last anchor
  std::vector<double> equity_curve;  // starts at 1.0
  std::vector<double> daily_returns; // equity_curve[i] / equity_curve[i-1] - 1, first entry 0
  double final_return = 0.0;         // equity_curve.back() - 1
  std::vector<Position> positions_log;
};

// Long-only, equal-weight, no costs. On each rebalance anchor the top_k
// stocks by probability are bought at that day's close and held until the
// next rebalance; ties go to the lower stock index. `prob_up[i]` holds the
// [N] class-1 probabilities at anchor day `anchors[i]` (strictly increasing).
BacktestResult backtest(std::span<const std::vector<double>> prob_up, std::span<const std::size_t> anchors,
                        const marketdata::StockPanel& panel, const BacktestPolicy& policy);

// Equal weight over every stock on the same rebalance schedule.
BacktestResult uniform_backtest(std::span<const std::size_t> anchors, const marketdata::StockPanel& panel,
                                const BacktestPolicy& policy);

// Scores that rank stocks by their realised return over each holding
// period, mapped into (0, 1). Only meaningful as an upper reference.
std::vector<std::vector<double>> oracle_scores(std::span<const std::size_t> anchors,
                                               const marketdata::StockPanel& panel, const BacktestPolicy& policy);

// Indices of `anchors` on which the policy rebalances.
std::vector<std::size_t> rebalance_points(std::span<const std::size_t> anchors, const BacktestPolicy& policy);

}  // namespace dishft::evalkit
