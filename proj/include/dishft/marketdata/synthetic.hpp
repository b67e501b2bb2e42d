// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dishft/marketdata/panel.hpp"

namespace dishft::marketdata {

// From `day` on, the daily log drift of every stock in `sector` moves by
// `drift_shift`. Shifts accumulate.
struct RegimeEvent {
  std::size_t day = 0;
  std::size_t sector = 0;
  double drift_shift = 0.0;

  bool operator==(const RegimeEvent&) const = default;
};

struct SyntheticSpec {
  std::size_t n_stocks = 64;
  std::size_t n_days = 800;
  std::size_t n_sectors = 4;
  std::vector<RegimeEvent> regime_schedule;
  double base_vol = 0.02;
  double base_drift = 0.0;
  std::uint64_t seed = 1;

  bool operator==(const SyntheticSpec&) const = default;
};

// Throws ConfigError listing every violated constraint.
void validate(const SyntheticSpec& spec);

// Sector of stock i in a generated panel.
std::size_t synthetic_sector(const SyntheticSpec& spec, std::size_t stock);

// Sector rotation: from `first_day`, every `every` days one sector leads
// with drift +magnitude, one lags with -magnitude and the rest are flat.
// Each rotation picks a new leader and a laggard other than the previous
// one. Events only for sectors whose drift changes. Deterministic in `seed`.
std::vector<RegimeEvent> rotating_schedule(std::size_t n_days, std::size_t n_sectors, std::size_t first_day,
                                           std::size_t every, double magnitude, std::uint64_t seed);

// Log-price random walk per stock: r = drift(sector, day) + sector shock +
// idiosyncratic shock, with OHLCV derived from it. Deterministic in `seed`.
StockPanel generate_synthetic(const SyntheticSpec& spec);

}  // namespace dishft::marketdata
