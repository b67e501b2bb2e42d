// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dishft/error.hpp"
#include "dishft/marketdata/panel.hpp"
#include "dishft/marketdata/synthetic.hpp"
#include "dishft/marketdata/windows.hpp"

namespace md = dishft::marketdata;
namespace fs = std::filesystem;
using dishft::ndgrad::Tensor;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dishft_md_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Panel whose close series are given; other indicators mirror the close.
md::StockPanel panel_from_closes(const std::vector<std::vector<double>>& closes) {
  md::StockPanel p;
  const std::size_t n = closes.size();
  const std::size_t days = closes[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    p.symbols.push_back("S" + std::to_string(i));
    p.industry[p.symbols.back()] = "ind";
  }
  for (std::size_t d = 0; d < days; ++d) p.dates.push_back("2020-01-" + std::to_string(10 + d));
  p.indicators = Tensor({n, days, md::kPriceColumns});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < days; ++d) {
      for (std::size_t c = 0; c < md::kPriceColumns; ++c) p.indicators.at(i, d, c) = closes[i][d];
    }
  }
  return p;
}

const char* kHeader = "symbol,date,open,high,low,close,volume\n";

}  // namespace

TEST(LoadPanel, DropsStockMissingADay) {
  TempDir dir;
  std::string csv = kHeader;
  for (const char* s : {"BBB", "AAA", "CCC"}) {
    for (int d = 1; d <= 3; ++d) {
      if (std::string(s) == "CCC" && d == 2) continue;
      csv += std::string(s) + ",2021-03-0" + std::to_string(d) + ",1,2,0.5,1.5,100\n";
    }
  }
  write_file(dir.file("p.csv"), csv);
  write_file(dir.file("r.csv"), "symbol,industry\nAAA,tech\nBBB,tech\nCCC,energy\n");
  const auto panel = md::load_panel(dir.file("p.csv"), dir.file("r.csv"));
  EXPECT_EQ(panel.symbols, (std::vector<std::string>{"AAA", "BBB"}));
  EXPECT_EQ(panel.n_days(), 3u);
  EXPECT_EQ(panel.n_indicators(), 5u);
  EXPECT_EQ(panel.industry.size(), 2u);
}

TEST(LoadPanel, RejectsNonPositiveClose) {
  TempDir dir;
  write_file(dir.file("p.csv"), std::string(kHeader) + "A,2021-01-04,1,1,1,1,1\nB,2021-01-04,1,1,1,0,1\n");
  write_file(dir.file("r.csv"), "symbol,industry\nA,x\nB,x\n");
  EXPECT_THROW(md::load_panel(dir.file("p.csv"), dir.file("r.csv")), dishft::DataError);
}

TEST(LoadPanel, MalformedRowReportsLineNumber) {
  TempDir dir;
  write_file(dir.file("p.csv"),
             std::string(kHeader) + "A,2021-01-04,1,1,1,1,1\nA,2021-01-05,1,oops,1,1,1\n");
  write_file(dir.file("r.csv"), "symbol,industry\nA,x\n");
  try {
    md::load_panel(dir.file("p.csv"), dir.file("r.csv"));
    FAIL() << "expected ParseError";
  } catch (const dishft::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadPanel, FewerThanTwoSurvivorsIsInsufficientData) {
  TempDir dir;
  write_file(dir.file("p.csv"), std::string(kHeader) +
                                    "A,2021-01-04,1,1,1,1,1\nA,2021-01-05,1,1,1,1,1\nB,2021-01-04,1,1,1,1,1\n");
  write_file(dir.file("r.csv"), "symbol,industry\nA,x\nB,x\n");
  EXPECT_THROW(md::load_panel(dir.file("p.csv"), dir.file("r.csv")), dishft::DataError);
}

TEST(LoadPanel, RoundTripsThroughExport) {
  TempDir dir;
  md::SyntheticSpec spec;
  spec.n_stocks = 5;
  spec.n_days = 100;
  spec.n_sectors = 2;
  spec.seed = 77;
  const auto source = md::generate_synthetic(spec);
  md::export_panel(source, dir.file("p.csv"));
  md::export_relations(source, dir.file("r.csv"));

  const auto loaded = md::load_panel(dir.file("p.csv"), dir.file("r.csv"));
  ASSERT_EQ(loaded.n_stocks(), 5u);
  ASSERT_EQ(loaded.n_days(), 100u);
  EXPECT_EQ(loaded.symbols, source.symbols);
  EXPECT_EQ(loaded.dates, source.dates);
  EXPECT_EQ(loaded.industry, source.industry);
  for (std::size_t i = 0; i < source.indicators.size(); ++i) {
    EXPECT_NEAR(loaded.indicators[i], source.indicators[i], 1e-9 * std::abs(source.indicators[i]));
  }
  md::export_panel(loaded, dir.file("p2.csv"));
  EXPECT_EQ(read_file(dir.file("p2.csv")), read_file(dir.file("p.csv")));
}

TEST(BuildRelation, TwoStocksSameIndustryIsAllHalves) {
  auto p = panel_from_closes({{1, 1}, {1, 1}});
  const auto r = md::build_relation(p);
  for (double v : r.values.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(BuildRelation, DifferentIndustriesGiveIdentity) {
  auto p = panel_from_closes({{1, 1}, {1, 1}});
  p.industry["S1"] = "other";
  EXPECT_EQ(md::build_relation(p).values, Tensor({2, 2}, {1, 0, 0, 1}));
}

TEST(BuildRelation, MatchesDenseNormalisationOracle) {
  auto p = panel_from_closes({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}});
  const std::vector<std::string> tags{"a", "b", "a", "b", "a"};
  for (std::size_t i = 0; i < 5; ++i) p.industry[p.symbols[i]] = tags[i];
  // Oracle: explicit D^-1/2 . A . D^-1/2 as three dense products.
  double a[5][5], dinv[5][5] = {}, tmp[5][5] = {}, expect[5][5] = {};
  for (int i = 0; i < 5; ++i) {
    double deg = 0;
    for (int j = 0; j < 5; ++j) deg += a[i][j] = (tags[i] == tags[j]) ? 1.0 : 0.0;
    dinv[i][i] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) tmp[i][j] += dinv[i][k] * a[k][j];
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) expect[i][j] += tmp[i][k] * dinv[k][j];

  const auto r = md::build_relation(p);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_GT(r.values.at(i, i), 0.0);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_NEAR(r.values.at(i, j), expect[i][j], 1e-15);
      EXPECT_EQ(r.values.at(i, j), r.values.at(j, i));
    }
  }
  // Four stocks in two pairs: 0.5 blocks.
  auto q = panel_from_closes({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  q.industry = {{"S0", "x"}, {"S1", "x"}, {"S2", "y"}, {"S3", "y"}};
  EXPECT_EQ(md::build_relation(q).values,
            Tensor({4, 4}, {0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5}));
}

TEST(BuildRelation, MissingIndustryNamesTheSymbol) {
  auto p = panel_from_closes({{1, 1}, {1, 1}});
  p.industry.erase("S1");
  try {
    md::build_relation(p);
    FAIL();
  } catch (const dishft::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("S1"), std::string::npos);
  }
}

TEST(MakeLabels, StrictThresholdOnHorizonReturn) {
  auto p = panel_from_closes({{100, 101, 105}, {100, 99, 104}, {100, 100, 103}});
  auto l = md::make_labels(p, 0, 2, 0.04);
  EXPECT_EQ(l.horizon, (md::Bits{1, 0, 0}));  // 5% > 4%, 4% is not > 4%
  EXPECT_EQ(md::make_labels(p, 0, 2, 0.0).horizon, (md::Bits{1, 1, 1}));
  EXPECT_EQ(l.per_day, (md::Bits{0, 1, 0, 0, 0, 0}));
  // T=1, delta=0: next-day direction.
  EXPECT_EQ(md::make_labels(p, 0, 1, 0.0).horizon, (md::Bits{1, 0, 0}));
  EXPECT_THROW(md::make_labels(p, 1, 2, 0.04), dishft::RangeError);
}

TEST(MakeFutureTrend, RisingConstantAlternating) {
  auto p = panel_from_closes({{1, 2, 3, 4, 5}, {3, 3, 3, 3, 3}, {5, 6, 5, 6, 5}});
  const Tensor f = md::make_future_trend(p, 0, 4);
  const std::vector<std::vector<double>> closes{{1, 2, 3, 4, 5}, {3, 3, 3, 3, 3}, {5, 6, 5, 6, 5}};
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(f.at(s, k), closes[s][k + 1] > closes[s][k] ? 1.0 : 0.0);
    }
  }
  EXPECT_EQ(f.at(0, 0) + f.at(0, 1) + f.at(0, 2) + f.at(0, 3), 4.0);
  EXPECT_EQ(f.at(1, 0) + f.at(1, 1) + f.at(1, 2) + f.at(1, 3), 0.0);
  EXPECT_EQ(f.at(2, 0), 1.0);
  EXPECT_EQ(f.at(2, 1), 0.0);
  EXPECT_THROW(md::make_future_trend(p, 1, 4), dishft::RangeError);
}

TEST(Windows, CountFollowsAnchorArithmetic) {
  md::SyntheticSpec spec;
  spec.n_stocks = 3;
  spec.n_days = 100;
  spec.n_sectors = 1;
  const auto p = md::generate_synthetic(spec);
  const auto w = md::windows(p, {.lookback = 20, .horizon = 20, .delta = 0.04, .stride = 1});
  ASSERT_EQ(w.size(), 61u);
  EXPECT_EQ(w.front().anchor, 19u);
  EXPECT_EQ(w.back().anchor, 79u);
  EXPECT_EQ(md::windows(p, {.lookback = 20, .horizon = 20, .delta = 0.04, .stride = 7}).size(), 9u);
  spec.n_days = 39;
  EXPECT_TRUE(md::windows(md::generate_synthetic(spec), {20, 20, 0.04, 1}).empty());
}

TEST(Windows, HistoryIsZScoredPerStockIndicator) {
  md::SyntheticSpec spec;
  spec.n_stocks = 4;
  spec.n_days = 60;
  spec.n_sectors = 2;
  const auto w = md::windows(md::generate_synthetic(spec), {10, 5, 0.0, 3});
  for (const auto& sample : w) {
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t c = 0; c < 5; ++c) {
        double mean = 0, sq = 0;
        for (std::size_t l = 0; l < 10; ++l) mean += sample.history.at(s, l, c);
        for (std::size_t l = 0; l < 10; ++l) sq += sample.history.at(s, l, c) * sample.history.at(s, l, c);
        EXPECT_NEAR(mean / 10, 0.0, 1e-12);
        EXPECT_NEAR(sq / 10, 1.0, 1e-9);
      }
    }
  }
}

// Random perturbations of days after the anchor never reach the history,
// and stored labels always equal labels recomputed from the raw panel.
TEST(WindowsProperty, CausalityAndLabelConsistency) {
  std::mt19937_64 rng(99);
  for (unsigned trial = 0; trial < 15; ++trial) {
    md::SyntheticSpec spec;
    spec.n_stocks = 3 + trial % 4;
    spec.n_days = 50 + 7 * trial;
    spec.n_sectors = 2;
    spec.seed = 1000 + trial;
    const auto panel = md::generate_synthetic(spec);
    const md::WindowSpec ws{.lookback = 5u + trial % 6u, .horizon = 3u + trial % 5u, .delta = 0.01 * (trial % 3),
                            .stride = 1u + trial % 3u};
    const auto base = md::windows(panel, ws);
    ASSERT_FALSE(base.empty());
    for (const auto& w : base) {
      const auto labels = md::make_labels(panel, w.anchor, ws.horizon, ws.delta);
      EXPECT_EQ(w.label, labels.horizon);
      EXPECT_EQ(w.label_per_day, labels.per_day);
      EXPECT_EQ(w.future_trend, md::make_future_trend(panel, w.anchor, ws.horizon));
    }
    const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, base.size() - 1)(rng);
    const std::size_t t = base[pick].anchor;
    auto poisoned = panel;
    std::uniform_real_distribution<double> junk(0.5, 5e4);
    for (std::size_t s = 0; s < panel.n_stocks(); ++s) {
      for (std::size_t d = t + 1; d < panel.n_days(); ++d) {
        for (std::size_t c = 0; c < 5; ++c) poisoned.indicators.at(s, d, c) = junk(rng);
      }
    }
    EXPECT_EQ(md::history_features(poisoned, t, ws.lookback), base[pick].history);
  }
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  md::SyntheticSpec spec;
  spec.n_stocks = 8;
  spec.n_days = 120;
  spec.regime_schedule = {{30, 1, 0.01}, {60, 0, -0.005}};
  const auto a = md::generate_synthetic(spec);
  const auto b = md::generate_synthetic(spec);
  EXPECT_EQ(a.indicators, b.indicators);
  EXPECT_EQ(a.dates, b.dates);
  EXPECT_EQ(a.symbols, b.symbols);
  spec.seed = 2;
  EXPECT_FALSE(md::generate_synthetic(spec).indicators == a.indicators);
}

TEST(Synthetic, OhlcConsistentAndBusinessDays) {
  md::SyntheticSpec spec;
  spec.n_stocks = 6;
  spec.n_days = 200;
  const auto p = md::generate_synthetic(spec);
  p.validate();
  EXPECT_EQ(p.dates.front(), "2019-01-02");
  EXPECT_EQ(p.dates[3], "2019-01-07");  // skips the weekend
  for (std::size_t s = 0; s < 6; ++s) {
    for (std::size_t d = 0; d < 200; ++d) {
      const double o = p.indicators.at(s, d, md::kOpen), c = p.indicators.at(s, d, md::kClose);
      EXPECT_LE(p.indicators.at(s, d, md::kLow), std::min(o, c));
      EXPECT_GE(p.indicators.at(s, d, md::kHigh), std::max(o, c));
      EXPECT_GT(p.indicators.at(s, d, md::kVolume), 0.0);
    }
  }
}

TEST(Synthetic, DriftShiftRaisesSectorReturnsAcrossSeeds) {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    md::SyntheticSpec spec;
    spec.n_stocks = 8;
    spec.n_days = 100;
    spec.n_sectors = 2;
    spec.seed = seed;
    spec.regime_schedule = {{50, 0, 0.01}};
    const auto p = md::generate_synthetic(spec);
    double before = 0, after = 0;
    for (std::size_t s = 0; s < 8; s += 2) {
      for (std::size_t d = 1; d < 50; ++d) before += std::log(p.close(s, d) / p.close(s, d - 1));
      for (std::size_t d = 50; d < 100; ++d) after += std::log(p.close(s, d) / p.close(s, d - 1));
    }
    if (after / 50 > before / 49) ++wins;
  }
  EXPECT_EQ(wins, 20);
}

TEST(Synthetic, ZeroDriftMeanLogReturnIsNotSignificant) {
  std::vector<double> means;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    md::SyntheticSpec spec;
    spec.n_stocks = 8;
    spec.n_days = 150;
    spec.n_sectors = 4;
    spec.seed = seed;
    const auto p = md::generate_synthetic(spec);
    double total = 0;
    for (std::size_t s = 0; s < 8; ++s)
      for (std::size_t d = 1; d < 150; ++d) total += std::log(p.close(s, d) / p.close(s, d - 1));
    means.push_back(total / (8 * 149));
  }
  double mu = 0, var = 0;
  for (double m : means) mu += m;
  mu /= means.size();
  for (double m : means) var += (m - mu) * (m - mu);
  var /= means.size() - 1;
  const double t = mu / std::sqrt(var / means.size());
  EXPECT_LT(std::abs(t), 3.0);
}

TEST(Synthetic, ValidationListsEveryProblem) {
  md::SyntheticSpec spec;
  spec.n_stocks = 3;
  spec.n_sectors = 4;
  spec.base_vol = 0.0;
  spec.regime_schedule = {{5000, 0, 0.1}};
  try {
    md::validate(spec);
    FAIL();
  } catch (const dishft::ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("n_sectors"), std::string::npos);
    EXPECT_NE(msg.find("base_vol"), std::string::npos);
    EXPECT_NE(msg.find("regime event 0"), std::string::npos);
  }
}

TEST(RotatingSchedule, OneLeaderOneLaggardAfterEveryRotation) {
  const auto events = md::rotating_schedule(800, 4, 30, 15, 0.004, 9);
  std::vector<double> level(4, 0.0);
  std::size_t rotations = 0, prev_leader = 4;
  for (std::size_t i = 0; i < events.size();) {
    const std::size_t day = events[i].day;
    EXPECT_EQ((day - 30) % 15, 0u);
    for (; i < events.size() && events[i].day == day; ++i) {
      EXPECT_NE(events[i].drift_shift, 0.0);
      level[events[i].sector] += events[i].drift_shift;
    }
    std::size_t up = 0, down = 0, leader = 4;
    for (std::size_t s = 0; s < 4; ++s) {
      if (std::abs(level[s] - 0.004) < 1e-12) ++up, leader = s;
      else if (std::abs(level[s] + 0.004) < 1e-12) ++down;
      else EXPECT_LT(std::abs(level[s]), 1e-12);
    }
    EXPECT_EQ(up, 1u);
    EXPECT_EQ(down, 1u);
    EXPECT_NE(leader, prev_leader);
    prev_leader = leader;
    ++rotations;
  }
  EXPECT_EQ(rotations, 52u);
  EXPECT_EQ(events, md::rotating_schedule(800, 4, 30, 15, 0.004, 9));
  EXPECT_NE(events, md::rotating_schedule(800, 4, 30, 15, 0.004, 10));
  EXPECT_THROW(md::rotating_schedule(800, 1, 30, 15, 0.004, 9), dishft::ConfigError);
}

TEST(RotatingSchedule, TwoSectorsSwapRoles) {
  const auto events = md::rotating_schedule(100, 2, 10, 30, 0.01, 3);
  ASSERT_EQ(events.size(), 2u * 3u);
  for (std::size_t k = 2; k < events.size(); ++k) EXPECT_NEAR(std::abs(events[k].drift_shift), 0.02, 1e-15);
}
