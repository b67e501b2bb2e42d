// SPDX-License-Identifier: Apache-2.0
#include "dishft/marketdata/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "dishft/error.hpp"

namespace dishft::marketdata {

namespace {

// Fraction of daily variance carried by the shared sector shock.
constexpr double kSectorShare = 0.5;

std::vector<std::string> business_days(std::size_t count) {
  using namespace std::chrono;
  std::vector<std::string> out;
  out.reserve(count);
  sys_days day = sys_days{year{2019} / January / 2};
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  std::vector<std::string> problems;
  if (spec.n_stocks < 2) problems.push_back("n_stocks must be >= 2");
  if (spec.n_days < 2) problems.push_back("n_days must be >= 2");
  if (spec.n_sectors < 1) problems.push_back("n_sectors must be >= 1");
  if (spec.n_sectors > spec.n_stocks) problems.push_back("n_sectors must not exceed n_stocks");
  if (!(spec.base_vol > 0.0) || !std::isfinite(spec.base_vol)) problems.push_back("base_vol must be > 0");
  if (!std::isfinite(spec.base_drift)) problems.push_back("base_drift must be finite");
  for (std::size_t i = 0; i < spec.regime_schedule.size(); ++i) {
    const auto& e = spec.regime_schedule[i];
    const std::string tag = "regime event " + std::to_string(i);
    if (e.day >= spec.n_days) problems.push_back(tag + ": day outside [0, n_days)");
    if (e.sector >= spec.n_sectors) problems.push_back(tag + ": sector outside [0, n_sectors)");
    if (!std::isfinite(e.drift_shift)) problems.push_back(tag + ": drift_shift must be finite");
  }
  if (!problems.empty()) {
    std::string msg = "invalid synthetic spec:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::size_t synthetic_sector(const SyntheticSpec& spec, std::size_t stock) {
  return stock % spec.n_sectors;
}

StockPanel generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_stocks;
  const std::size_t days = spec.n_days;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Per-sector daily drift after applying every event up to that day.
  std::vector<double> drift(spec.n_sectors * days, spec.base_drift);
  for (const auto& e : spec.regime_schedule) {
    for (std::size_t d = e.day; d < days; ++d) drift[e.sector * days + d] += e.drift_shift;
  }

  StockPanel panel;
  panel.dates = business_days(days);
  char sym[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(sym, sizeof(sym), "S%03zu", i);
    panel.symbols.emplace_back(sym);
    panel.industry[sym] = "sector_" + std::to_string(synthetic_sector(spec, i));
  }
  panel.indicators = ndgrad::Tensor({n, days, kPriceColumns});

  std::vector<double> close(n);
  for (std::size_t i = 0; i < n; ++i) close[i] = 100.0 * std::exp(0.3 * normal(rng));

  const double sector_vol = spec.base_vol * std::sqrt(kSectorShare);
  const double idio_vol = spec.base_vol * std::sqrt(1.0 - kSectorShare);
  std::vector<double> sector_shock(spec.n_sectors);
  for (std::size_t d = 0; d < days; ++d) {
    for (auto& s : sector_shock) s = sector_vol * normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t sector = synthetic_sector(spec, i);
      const double prev = close[i];
      const double ret = d == 0 ? 0.0 : drift[sector * days + d] + sector_shock[sector] + idio_vol * normal(rng);
      close[i] = prev * std::exp(ret);
      const double open = prev * std::exp(0.25 * spec.base_vol * normal(rng));
      const double high = std::max(open, close[i]) * std::exp(0.5 * spec.base_vol * std::abs(normal(rng)));
      const double low = std::min(open, close[i]) * std::exp(-0.5 * spec.base_vol * std::abs(normal(rng)));
      const double volume = 1e6 * std::exp(0.25 * normal(rng)) * (1.0 + std::abs(ret) / spec.base_vol);
      panel.indicators.at(i, d, kOpen) = open;
      panel.indicators.at(i, d, kHigh) = high;
      panel.indicators.at(i, d, kLow) = low;
      panel.indicators.at(i, d, kClose) = close[i];
      panel.indicators.at(i, d, kVolume) = volume;
    }
  }
  return panel;
}

std::vector<RegimeEvent> rotating_schedule(std::size_t n_days, std::size_t n_sectors, std::size_t first_day,
                                           std::size_t every, double magnitude, std::uint64_t seed) {
  if (n_sectors < 2 || every == 0) throw ConfigError("rotating_schedule: needs n_sectors >= 2 and every >= 1");
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t avoid_a, std::size_t avoid_b) {
    std::vector<std::size_t> options;
    for (std::size_t s = 0; s < n_sectors; ++s) {
      if (s != avoid_a && s != avoid_b) options.push_back(s);
    }
    return options[rng() % options.size()];
  };
  std::vector<int> level(n_sectors, 0);
  std::size_t leader = n_sectors, laggard = n_sectors;  // none before the first event
  std::vector<RegimeEvent> out;
  for (std::size_t day = first_day; day < n_days; day += every) {
    const std::size_t next_leader = pick(leader, leader);
    const std::size_t next_laggard = n_sectors == 2 ? 1 - next_leader : pick(next_leader, laggard);
    std::vector<int> next(n_sectors, 0);
    next[next_leader] = 1;
    next[next_laggard] = -1;
    for (std::size_t s = 0; s < n_sectors; ++s) {
      if (next[s] != level[s]) out.push_back({day, s, magnitude * static_cast<double>(next[s] - level[s])});
    }
    level = std::move(next);
    leader = next_leader;
    laggard = next_laggard;
  }
  return out;
}

}  // namespace dishft::marketdata
