// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dishft/error.hpp"
#include "dishft/evalkit/experiment.hpp"
#include "dishft/marketdata/synthetic.hpp"

namespace ek = dishft::evalkit;
namespace md = dishft::marketdata;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  md::StockPanel panel;
  std::vector<md::WindowSample> windows;
  dishft::ndgrad::Tensor relation;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    md::SyntheticSpec spec;
    spec.n_stocks = 8;
    spec.n_days = 200;
    spec.n_sectors = 2;
    spec.base_vol = 0.01;
    spec.regime_schedule = md::rotating_schedule(200, 2, 30, 20, 0.004, 7);
    Fixture out{md::generate_synthetic(spec), {}, {}};
    out.windows = md::windows(out.panel, {.lookback = 8, .horizon = 5, .delta = 0.0, .stride = 1});
    out.relation = md::build_relation(out.panel).values;
    return out;
  }();
  return f;
}

ek::ExperimentConfig small_config() {
  ek::ExperimentConfig c;
  c.backbones = {dishft::stgnn::SpatialKind::kGcn, dishft::stgnn::SpatialKind::kGat};
  c.teacher.st.hidden_dim = 4;
  c.teacher.st.output_dim = 4;
  c.teacher.fusion_dim = 4;
  c.teacher.future_dim = 3;
  c.teacher.horizon = 5;
  c.student.st = c.teacher.st;
  c.lambda_grid = {0.5, 1.0};
  c.train.max_epochs = 2;
  c.train.batch_size = 16;
  c.train.train_stride = 4;
  c.seeds = {11, 12, 13};
  c.policy = {.top_k = 3, .rebalance_every = 5};
  return c;
}

const ek::ExperimentReport& report() {
  static const ek::ExperimentReport r = [] {
    const Fixture& f = fixture();
    return ek::run_experiment(f.windows, f.panel, f.relation, small_config());
  }();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Experiment, TablesHaveOneRowPerVariantSeedAndBackbone) {
  const auto& r = report();
  std::map<std::pair<std::string, std::string>, std::size_t> t1, t2;
  for (const auto& row : r.table1) ++t1[{row.backbone, row.variant}];
  for (const auto& row : r.table2) ++t2[{row.backbone, row.variant}];
  for (const char* b : {"gcn", "gat"}) {
    EXPECT_EQ((t1[{b, ek::kBaseline}]), 3u);
    EXPECT_EQ((t1[{b, ek::kDishft}]), 3u);
    EXPECT_EQ((t2[{b, ek::kDishft}]), 3u);
    EXPECT_EQ((t2[{b, ek::kWithoutH}]), 3u);
    EXPECT_EQ((t2[{b, ek::kWithoutF}]), 3u);
  }
  EXPECT_EQ(r.table2.size(), 2u * 3u * 3u);
}

TEST(Experiment, SummaryMatchesArithmeticMean) {
  const auto& r = report();
  for (const auto& s : r.summary) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* table : {&r.table1, &r.table2}) {
      for (const auto& row : *table) {
        if (row.backbone == s.backbone && row.variant == s.variant && (table == &r.table1 || s.variant != ek::kDishft)) {
          sum += row.acc;
          ++n;
        }
      }
    }
    ASSERT_EQ(n, s.runs) << s.backbone << " " << s.variant;
    EXPECT_NEAR(s.acc_mean, sum / static_cast<double>(n), 1e-12);
  }
}

TEST(Experiment, ChosenLambdaComesFromTheGridAndAblationsReuseIt) {
  const auto& r = report();
  for (const auto& row : r.table1) {
    if (row.variant == ek::kBaseline) {
      EXPECT_EQ(row.lambda, 0.0);
      continue;
    }
    EXPECT_TRUE(row.lambda == 0.5 || row.lambda == 1.0);
    for (const auto& ab : r.table2) {
      if (ab.backbone == row.backbone && ab.seed == row.seed) EXPECT_EQ(ab.lambda, row.lambda);
    }
  }
}

TEST(Experiment, ComparisonPerBackbone) {
  const auto& r = report();
  ASSERT_EQ(r.comparisons.size(), 2u);
  for (const auto& c : r.comparisons) {
    EXPECT_GE(c.acc_test.p_value, 0.0);
    EXPECT_LE(c.acc_test.p_value, 1.0);
    EXPECT_GT(c.acc_test.dof, 0.0);
  }
  EXPECT_EQ(r.final_equity.size(), 2u * 3u * 2u);
  for (const auto& s : r.equity) EXPECT_EQ(s.equity.size(), r.equity_dates.size());
}

TEST(Experiment, ReportIsBitReproducible) {
  const Fixture& f = fixture();
  ek::ExperimentConfig c = small_config();
  c.backbones = {dishft::stgnn::SpatialKind::kGcn};
  c.seeds = {21, 22};
  const fs::path root = fs::temp_directory_path() / "dishft_experiment_repro";
  fs::remove_all(root);
  ek::write_report(ek::run_experiment(f.windows, f.panel, f.relation, c), root / "a");
  ek::write_report(ek::run_experiment(f.windows, f.panel, f.relation, c), root / "b");
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(root / "b" / entry.path().filename())) << entry.path().filename();
  }
  EXPECT_EQ(files, 7u);
  EXPECT_NE(slurp(root / "a" / "equity.svg").find("<polyline"), std::string::npos);
}

TEST(Experiment, ConfigValidation) {
  ek::ExperimentConfig c = small_config();
  c.seeds = {1};
  EXPECT_THROW(c.validate(), dishft::ConfigError);
  c = small_config();
  c.lambda_grid.clear();
  EXPECT_THROW(c.validate(), dishft::ConfigError);
  c = small_config();
  c.backbones.clear();
  EXPECT_THROW(c.validate(), dishft::ConfigError);
}
