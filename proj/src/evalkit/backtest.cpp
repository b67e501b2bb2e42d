// SPDX-License-Identifier: Apache-2.0
#include "dishft/evalkit/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dishft/error.hpp"

namespace dishft::evalkit {

namespace md = marketdata;

namespace {

void check_anchors(std::span<const std::size_t> anchors, const md::StockPanel& panel) {
  if (anchors.empty()) throw DataError("backtest: no anchors");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (anchors[i] >= panel.n_days()) {
      throw RangeError("backtest: anchor day " + std::to_string(anchors[i]) + " is outside the panel");
    }
    if (i > 0 && anchors[i] <= anchors[i - 1]) throw DataError("backtest: anchors must be strictly increasing");
  }
}

std::vector<std::size_t> top_k(std::span<const double> probs, std::size_t k) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

void BacktestPolicy::validate() const {
  std::string bad;
  if (top_k == 0) bad += " top_k must be >= 1;";
  if (rebalance_every == 0) bad += " rebalance_every must be >= 1;";
  if (!bad.empty()) throw ConfigError("invalid backtest policy:" + bad);
}

std::vector<std::size_t> rebalance_points(std::span<const std::size_t> anchors, const BacktestPolicy& policy) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (out.empty() || anchors[i] >= anchors[out.back()] + policy.rebalance_every) out.push_back(i);
  }
  return out;
}

BacktestResult backtest(std::span<const std::vector<double>> prob_up, std::span<const std::size_t> anchors,
                        const md::StockPanel& panel, const BacktestPolicy& policy) {
  policy.validate();
  check_anchors(anchors, panel);
  const std::size_t n = panel.n_stocks();
  if (policy.top_k > n) {
    throw RangeError("backtest: top_k " + std::to_string(policy.top_k) + " exceeds " + std::to_string(n) + " stocks");
  }
  if (prob_up.size() != anchors.size()) {
    throw ShapeError("backtest: " + std::to_string(prob_up.size()) + " predictions for " +
                     std::to_string(anchors.size()) + " anchors");
  }
  for (const auto& p : prob_up) {
    if (p.size() != n) throw ShapeError("backtest: prediction row has " + std::to_string(p.size()) + " stocks, panel " + std::to_string(n));
  }

  BacktestResult out;
  const std::size_t first = anchors.front(), last = anchors.back();
  const std::vector<std::size_t> points = rebalance_points(anchors, policy);
  std::size_t next_point = 0;
  double base = 1.0;  // equity at the last rebalance
  for (std::size_t day = first; day <= last; ++day) {
    if (next_point < points.size() && anchors[points[next_point]] == day) {
      if (!out.equity_curve.empty()) base = out.equity_curve.back();
      out.positions_log.push_back({day, top_k(prob_up[points[next_point]], policy.top_k)});
      ++next_point;
    }
    const Position& held = out.positions_log.back();
    double growth = 0.0;
    for (std::size_t s : held.stocks) growth += panel.close(s, day) / panel.close(s, held.day);
    const double equity = base * growth / static_cast<double>(held.stocks.size());
    out.daily_returns.push_back(out.equity_curve.empty() ? 0.0 : equity / out.equity_curve.back() - 1.0);
    out.equity_curve.push_back(equity);
    out.days.push_back(day);
  }
  out.final_return = out.equity_curve.back() - 1.0;
  return out;
}

BacktestResult uniform_backtest(std::span<const std::size_t> anchors, const md::StockPanel& panel,
                                const BacktestPolicy& policy) {
  BacktestPolicy all = policy;
  all.top_k = panel.n_stocks();
  const std::vector<std::vector<double>> flat(anchors.size(), std::vector<double>(panel.n_stocks(), 0.5));
  return backtest(flat, anchors, panel, all);
}

std::vector<std::vector<double>> oracle_scores(std::span<const std::size_t> anchors, const md::StockPanel& panel,
                                               const BacktestPolicy& policy) {
  policy.validate();
  check_anchors(anchors, panel);
  const std::vector<std::size_t> points = rebalance_points(anchors, policy);
  std::vector<std::vector<double>> out(anchors.size(), std::vector<double>(panel.n_stocks(), 0.5));
  for (std::size_t r = 0; r < points.size(); ++r) {
    const std::size_t start = anchors[points[r]];
    const std::size_t end = r + 1 < points.size() ? anchors[points[r + 1]] : anchors.back();
    for (std::size_t s = 0; s < panel.n_stocks(); ++s) {
      const double ret = std::log(panel.close(s, end) / panel.close(s, start));
      out[points[r]][s] = 1.0 / (1.0 + std::exp(-ret));
    }
  }
  return out;
}

}  // namespace dishft::evalkit
