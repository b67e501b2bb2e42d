// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dishft/config/run_config.hpp"
#include "dishft/error.hpp"

namespace cf = dishft::config;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const dishft::ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kSynthetic = R"(
; comment line
[data]
source = synthetic
delta = 0.02
label_mode = per_day

[synthetic]
n_stocks = 12
n_days = 300
n_sectors = 3
base_vol = 0.015
events = 40:0:0.004, 90:2:-0.0035

[model]
backbone = gat
fusion = concat
hidden_dim = 8
fusion_dim = 8

[train]
seeds = 3, 4, 5
learning_rate = 0.001

[distill]
loss = mse
lambda_grid = 0.2, 0.7
mode = batch

[eval]
top_k = 4

[output]
dir = results/run1
)";

}  // namespace

TEST(RunConfig, DefaultsFollowThePublishedSetting) {
  const cf::RunConfig c = cf::parse_config("");
  EXPECT_EQ(c.horizon, 20u);
  EXPECT_EQ(c.delta, 0.04);
  EXPECT_EQ(c.tau, 0.5);
  EXPECT_EQ(c.train.learning_rate, 5e-4);
  EXPECT_EQ(c.train.batch_size, 64u);
  EXPECT_EQ(c.lambda, 0.5);
  EXPECT_EQ(c.lambda_grid, (std::vector<double>{0.1, 0.5, 1.0}));
  EXPECT_EQ(c.policy.top_k, 10u);
}

TEST(RunConfig, ParsesEverySection) {
  const cf::RunConfig c = cf::parse_config(kSynthetic);
  EXPECT_TRUE(c.synthetic);
  EXPECT_EQ(c.delta, 0.02);
  EXPECT_EQ(c.label_mode, dishft::teacher::LabelMode::kPerDay);
  EXPECT_EQ(c.synthetic_spec.n_stocks, 12u);
  ASSERT_EQ(c.synthetic_spec.regime_schedule.size(), 2u);
  EXPECT_EQ(c.synthetic_spec.regime_schedule[1], (dishft::marketdata::RegimeEvent{90, 2, -0.0035}));
  EXPECT_EQ(c.backbone, dishft::stgnn::SpatialKind::kGat);
  EXPECT_EQ(c.fusion, dishft::teacher::FusionKind::kConcat);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(c.distill, dishft::distill::DistillKind::kMse);
  EXPECT_EQ(c.hsic.mode, dishft::distill::HsicMode::kBatchSamples);
  EXPECT_EQ(c.output_dir, fs::path("results/run1"));
  EXPECT_NO_THROW(c.validate());

  const auto t = c.teacher_config();
  EXPECT_EQ(t.st.spatial_kind, dishft::stgnn::SpatialKind::kGat);
  EXPECT_EQ(t.st.output_dim, 8u);
  EXPECT_EQ(t.horizon, 20u);
  const auto e = c.experiment_config();
  EXPECT_EQ(e.lambda_grid, (std::vector<double>{0.2, 0.7}));
  EXPECT_EQ(e.student.st.output_dim, e.teacher.fusion_dim);
}

TEST(RunConfig, EchoRoundTrips) {
  const cf::RunConfig c = cf::parse_config(kSynthetic);
  const std::string echo = cf::to_ini(c);
  EXPECT_EQ(cf::parse_config(echo), c);
  EXPECT_EQ(cf::to_ini(cf::parse_config(echo)), echo);
  const cf::RunConfig d = cf::parse_config("");
  EXPECT_EQ(cf::parse_config(cf::to_ini(d)), d);
}

TEST(RunConfig, ReportsUnknownAndMalformedKeysTogether) {
  const std::string msg = error_of([] {
    cf::parse_config("[train]\nbatch_size = lots\nlearning_rte = 0.1\n[model]\nbackbone = lstm\n[bogus]\nx = 1\n");
  });
  EXPECT_NE(msg.find("batch_size"), std::string::npos) << msg;
  EXPECT_NE(msg.find("learning_rte"), std::string::npos) << msg;
  EXPECT_NE(msg.find("backbone"), std::string::npos) << msg;
  EXPECT_NE(msg.find("[bogus] x"), std::string::npos) << msg;
  EXPECT_NE(error_of([] { cf::parse_config("[synthetic]\nevents = 10:0\n"); }).find("events"), std::string::npos);
  EXPECT_NE(error_of([] { cf::parse_config("[train]\nmax_epochs = -3\n"); }).find("max_epochs"), std::string::npos);
}

TEST(RunConfig, ValidationListsEveryBadField) {
  cf::RunConfig c = cf::parse_config(kSynthetic);
  c.train.learning_rate = 0.0;
  c.train.batch_size = 0;
  c.tau = -1.0;
  c.spatial_layers = 3;
  c.lambda_grid = {0.0};
  c.seeds = {1};
  c.policy.top_k = 50;
  c.synthetic_spec.regime_schedule.push_back({400, 0, 0.01});
  const std::string msg = error_of([&] { c.validate(); });
  for (const char* field : {"learning_rate", "batch_size", "tau", "spatial_layers", "lambda_grid", "seeds", "top_k",
                            "event 400:0"}) {
    EXPECT_NE(msg.find(field), std::string::npos) << field << " missing from: " << msg;
  }
}

TEST(RunConfig, CsvSourceNeedsExistingFiles) {
  const fs::path dir = fs::temp_directory_path() / "dishft_config_test";
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[data]\nprices = prices.csv\nrelations = rel.csv\n";
  const cf::RunConfig c = cf::load_config(dir / "run.ini");
  EXPECT_EQ(c.prices, dir / "prices.csv");
  const std::string msg = error_of([&] { c.validate(); });
  EXPECT_NE(msg.find("prices: no such file"), std::string::npos) << msg;
  EXPECT_NE(msg.find("relations: no such file"), std::string::npos) << msg;
  EXPECT_NO_THROW(c.validate(false));
  std::ofstream(dir / "prices.csv") << "x";
  std::ofstream(dir / "rel.csv") << "x";
  EXPECT_NO_THROW(c.validate());
  EXPECT_NE(error_of([] { cf::parse_config("").validate(); }).find("prices is required"), std::string::npos);
  EXPECT_THROW(cf::load_config(dir / "missing.ini"), dishft::ConfigError);
  fs::remove_all(dir);
}

TEST(RunConfig, RotationReplacesEvents) {
  cf::RunConfig c = cf::parse_config("[data]\nsource = synthetic\n[synthetic]\nrotation_every = 25\n");
  const auto spec = c.effective_synthetic();
  EXPECT_EQ(spec.regime_schedule, dishft::marketdata::rotating_schedule(800, 4, 30, 25, 0.004, 7));
  EXPECT_GE(spec.regime_schedule.size(), 6u);
  c.synthetic_spec.regime_schedule = {{10, 0, 0.01}};
  EXPECT_NE(error_of([&] { c.validate(); }).find("exclusive"), std::string::npos);
}
