// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dishft/config/run_config.hpp"
#include "dishft/distill/student.hpp"
#include "dishft/evalkit/backtest.hpp"
#include "dishft/evalkit/evaluation.hpp"
#include "dishft/evalkit/experiment.hpp"
#include "dishft/marketdata/panel.hpp"

namespace dishft::app {

// Panel, relation and windows for one run. Not copyable: the split views
// point into `windows`.
class Dataset {
 public:
  Dataset(marketdata::StockPanel panel, const marketdata::WindowSpec& spec);
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;

  const marketdata::StockPanel& panel() const noexcept { return panel_; }
  const ndgrad::Tensor& relation() const noexcept { return relation_; }
  const std::vector<marketdata::WindowSample>& windows() const noexcept { return windows_; }
  const teacher::Split& split() const noexcept { return split_; }

 private:
  marketdata::StockPanel panel_;
  ndgrad::Tensor relation_;
  std::vector<marketdata::WindowSample> windows_;
  teacher::Split split_;
};

// Validates `config` and loads the CSV panel or generates the synthetic one.
std::unique_ptr<Dataset> load_dataset(const config::RunConfig& config);

struct SectorStat {
  std::string industry;
  std::string first_date;
  std::string last_date;
  double mean_log_return = 0.0;  // per day, averaged over the industry's stocks
};

// Mean daily log return per industry over consecutive blocks of `block_days`.
std::vector<SectorStat> sector_stats(const marketdata::StockPanel& panel, std::size_t block_days);

// prices.csv, relations.csv and sector_stats.csv.
void export_dataset(const Dataset& data, const std::filesystem::path& dir, std::size_t block_days = 20);

struct TrainedModels {
  std::optional<teacher::TeacherModel> teacher;  // absent for a loaded student
  std::vector<teacher::EpochLog> teacher_log;
  distill::StudentModel student;
  std::vector<teacher::EpochLog> student_log;
};

// Teacher phase, then the student with the configured lambda.
TrainedModels train(const config::RunConfig& config, const Dataset& data);

// teacher.ckpt, student.ckpt, teacher_log.csv, student_log.csv.
void save_models(const TrainedModels& models, const std::filesystem::path& dir);

// Student from a checkpoint, shaped by `config`; names a descriptive
// ShapeError when the two disagree.
distill::StudentModel load_student(const config::RunConfig& config, const std::filesystem::path& checkpoint);

// Student class-1 probabilities for each test window.
std::vector<std::vector<double>> test_probabilities(const distill::StudentModel& student, const Dataset& data);

evalkit::Evaluation evaluate(const config::RunConfig& config, const Dataset& data,
                             const distill::StudentModel& student);

// eval_summary.csv, eval_windows.csv, eval_decisions.csv.
void write_evaluation(const evalkit::Evaluation& eval, const marketdata::StockPanel& panel,
                      const std::filesystem::path& dir);

struct BacktestRun {
  evalkit::BacktestResult student;
  evalkit::BacktestResult uniform;
  evalkit::BacktestResult oracle;
};

BacktestRun backtest(const config::RunConfig& config, const Dataset& data, const distill::StudentModel& student);

// backtest_equity.csv (date,method,equity) and backtest_positions.csv.
void write_backtest(const BacktestRun& run, const marketdata::StockPanel& panel, const std::filesystem::path& dir);

// Writes the effective configuration as INI.
void write_effective_config(const config::RunConfig& config, const std::filesystem::path& path);

}  // namespace dishft::app
