// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dishft/distill/student.hpp"
#include "dishft/evalkit/backtest.hpp"
#include "dishft/evalkit/metrics.hpp"
#include "dishft/marketdata/windows.hpp"
#include "dishft/teacher/training.hpp"

namespace dishft::evalkit {

inline constexpr const char* kBaseline = "baseline";
inline constexpr const char* kDishft = "dishft";
inline constexpr const char* kWithoutH = "w/o H";
inline constexpr const char* kWithoutF = "w/o F";

struct ExperimentConfig {
  std::vector<stgnn::SpatialKind> backbones{stgnn::SpatialKind::kGcn};
  teacher::TeacherConfig teacher;  // fusion and st.spatial_kind are set per run
  distill::StudentConfig student;  // lambda comes from the sweep
  std::vector<double> lambda_grid{0.1, 0.5, 1.0};
  teacher::TrainConfig train;      // seed comes from `seeds`
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  BacktestPolicy policy;
  teacher::LabelMode label_mode = teacher::LabelMode::kHorizon;
  bool ablations = true;

  void validate() const;
};

struct RunRow {
  std::string backbone;
  std::string variant;
  std::uint64_t seed = 0;
  double acc = 0.0;
  double mcc = 0.0;
  double lambda = 0.0;
};

struct VariantSummary {
  std::string backbone;
  std::string variant;
  std::size_t runs = 0;
  double acc_mean = 0.0, acc_std = 0.0;
  double mcc_mean = 0.0, mcc_std = 0.0;
};

// Distilled vs baseline test accuracy, one-sided.
struct Comparison {
  std::string backbone;
  TTestResult acc_test;
  double acc_gain = 0.0;  // mean(dishft) - mean(baseline)
};

struct FinalEquity {
  std::string backbone;
  std::string method;
  std::uint64_t seed = 0;
  double equity = 1.0;
};

struct EquitySeries {
  std::string backbone;
  std::string method;
  std::vector<double> equity;  // mean over seeds, aligned with ExperimentReport::equity_dates
};

struct ExperimentReport {
  std::vector<RunRow> table1;  // baseline and dishft
  std::vector<RunRow> table2;  // dishft, w/o H, w/o F
  std::vector<VariantSummary> summary;
  std::vector<Comparison> comparisons;
  std::vector<FinalEquity> final_equity;
  std::vector<std::string> equity_dates;
  std::vector<EquitySeries> equity;
};

using Progress = std::function<void(const std::string&)>;

std::string backbone_name(stgnn::SpatialKind kind);

// Trains both teachers and every student per backbone and seed on the
// chronological split of `windows`, then evaluates the test split.
ExperimentReport run_experiment(std::span<const marketdata::WindowSample> windows,
                                const marketdata::StockPanel& panel, const ndgrad::Tensor& relation,
                                const ExperimentConfig& config, const Progress& progress = {});

std::vector<VariantSummary> summarize(std::span<const RunRow> rows);

// table1.csv, table2.csv, summary.csv, significance.csv, backtest.csv,
// equity.csv and equity.svg under `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Line chart of the equity series as a standalone SVG document.
std::string equity_svg(const ExperimentReport& report);

}  // namespace dishft::evalkit
