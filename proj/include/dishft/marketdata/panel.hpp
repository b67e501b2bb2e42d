// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dishft/ndgrad/tensor.hpp"

namespace dishft::marketdata {

using Bits = std::vector<std::uint8_t>;

// Price-CSV column order; the panel stores indicators in the same order.
enum Indicator : std::size_t { kOpen = 0, kHigh = 1, kLow = 2, kClose = 3, kVolume = 4 };
inline constexpr std::size_t kPriceColumns = 5;

// Daily indicators for N stocks on a shared, gap-free date axis.
struct StockPanel {
  std::vector<std::string> symbols;     // sorted
  std::vector<std::string> dates;       // ISO-8601, chronological
  ndgrad::Tensor indicators;            // [N x days x M]
  std::size_t close_column = kClose;
  std::map<std::string, std::string> industry;

  std::size_t n_stocks() const noexcept { return symbols.size(); }
  std::size_t n_days() const noexcept { return dates.size(); }
  std::size_t n_indicators() const { return indicators.dim(2); }
  double close(std::size_t stock, std::size_t day) const {
    return indicators.at(stock, day, close_column);
  }

  // Throws DataError when a structural invariant is broken.
  void validate() const;
};

enum class RelationKind { kIndustryBinary, kIdentity };

struct RelationMatrix {
  ndgrad::Tensor values;  // [N x N], symmetric, normalised
  RelationKind kind = RelationKind::kIndustryBinary;
};

// Reads `symbol,date,open,high,low,close,volume` prices and `symbol,industry`
// tags. Stocks missing any date of the union date axis are dropped.
StockPanel load_panel(const std::filesystem::path& prices_csv,
                      const std::filesystem::path& relations_csv);

// Writes the price CSV with 10 significant digits, rows ordered by symbol
// then date.
void export_panel(const StockPanel& panel, const std::filesystem::path& prices_csv);
void export_relations(const StockPanel& panel, const std::filesystem::path& relations_csv);

// A_ij = 1 for shared industry or i == j, then D^-1/2 A D^-1/2.
RelationMatrix build_relation(const StockPanel& panel);
RelationMatrix identity_relation(std::size_t n_stocks);

}  // namespace dishft::marketdata
