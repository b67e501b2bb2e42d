// SPDX-License-Identifier: Apache-2.0
#include "dishft/app/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "dishft/error.hpp"
#include "dishft/marketdata/synthetic.hpp"
#include "dishft/ndgrad/checkpoint.hpp"

namespace dishft::app {

namespace md = marketdata;
namespace nd = ndgrad;
namespace fs = std::filesystem;

namespace {

std::ofstream open_csv(const fs::path& path, const char* header) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(10) << header << '\n';
  return out;
}

void write_log(const fs::path& path, const std::vector<teacher::EpochLog>& log, bool with_distill) {
  auto out = open_csv(path, with_distill ? "epoch,pred_loss,distill_loss,val_acc,val_mcc"
                                         : "epoch,train_loss,val_acc,val_mcc");
  out << std::setprecision(17);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (with_distill) out << e.distill_loss << ',';
    out << e.val_acc << ',' << e.val_mcc << '\n';
  }
}

}  // namespace

Dataset::Dataset(md::StockPanel panel, const md::WindowSpec& spec)
    : panel_(std::move(panel)),
      relation_(md::build_relation(panel_).values),
      windows_(md::windows(panel_, spec)),
      split_(teacher::chronological_split(windows_)) {}

std::unique_ptr<Dataset> load_dataset(const config::RunConfig& config) {
  config.validate();
  md::StockPanel panel = config.synthetic ? md::generate_synthetic(config.effective_synthetic())
                                          : md::load_panel(config.prices, config.relations);
  return std::make_unique<Dataset>(std::move(panel), config.window_spec());
}

std::vector<SectorStat> sector_stats(const md::StockPanel& panel, std::size_t block_days) {
  if (block_days == 0) throw ConfigError("sector_stats: block_days must be >= 1");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t s = 0; s < panel.n_stocks(); ++s) {
    const auto it = panel.industry.find(panel.symbols[s]);
    members[it == panel.industry.end() ? std::string("unknown") : it->second].push_back(s);
  }
  std::vector<SectorStat> out;
  for (const auto& [industry, stocks] : members) {
    for (std::size_t start = 1; start < panel.n_days(); start += block_days) {
      const std::size_t end = std::min(panel.n_days(), start + block_days);
      double sum = 0.0;
      for (std::size_t s : stocks) {
        for (std::size_t d = start; d < end; ++d) sum += std::log(panel.close(s, d) / panel.close(s, d - 1));
      }
      const double count = static_cast<double>(stocks.size() * (end - start));
      out.push_back({industry, panel.dates[start], panel.dates[end - 1], sum / count});
    }
  }
  return out;
}

void export_dataset(const Dataset& data, const fs::path& dir, std::size_t block_days) {
  fs::create_directories(dir);
  md::export_panel(data.panel(), dir / "prices.csv");
  md::export_relations(data.panel(), dir / "relations.csv");
  auto out = open_csv(dir / "sector_stats.csv", "industry,first_date,last_date,mean_log_return");
  for (const auto& s : sector_stats(data.panel(), block_days)) {
    out << s.industry << ',' << s.first_date << ',' << s.last_date << ',' << s.mean_log_return << '\n';
  }
}

TrainedModels train(const config::RunConfig& config, const Dataset& data) {
  TrainedModels out;
  auto t = teacher::train_teacher(data.split(), data.relation(), config.teacher_config(), config.train);
  out.teacher = std::move(t.model);
  out.teacher_log = std::move(t.log);
  auto s = distill::train_student(*out.teacher, data.split(), data.relation(), config.student_config(), config.train);
  out.student = std::move(s.model);
  out.student_log = std::move(s.log);
  return out;
}

void save_models(const TrainedModels& models, const fs::path& dir) {
  fs::create_directories(dir);
  if (models.teacher) {
    nd::save_checkpoint(dir / "teacher.ckpt", models.teacher->params.entries());
    write_log(dir / "teacher_log.csv", models.teacher_log, false);
  }
  nd::save_checkpoint(dir / "student.ckpt", models.student.params.entries());
  write_log(dir / "student_log.csv", models.student_log, true);
}

distill::StudentModel load_student(const config::RunConfig& config, const fs::path& checkpoint) {
  const distill::StudentConfig cfg = config.student_config();
  nd::ParameterSet head;
  head.add("head.0.w", nd::Tensor({cfg.st.output_dim, 2}));
  head.add("head.0.b", nd::Tensor({2}));
  distill::StudentModel model = distill::make_student(cfg, head, config.train.seed);
  const auto records = nd::load_checkpoint(checkpoint);
  try {
    model.params.assign_from(records);
  } catch (const ShapeError& e) {
    throw ShapeError("student checkpoint " + checkpoint.string() + " does not fit the configured model: " + e.what());
  }
  return model;
}

std::vector<std::vector<double>> test_probabilities(const distill::StudentModel& student, const Dataset& data) {
  std::vector<std::vector<double>> out;
  for (const auto& w : data.split().test) {
    out.push_back(distill::student_probabilities(student.config, student.params, w.history, data.relation()));
  }
  return out;
}

evalkit::Evaluation evaluate(const config::RunConfig& config, const Dataset& data,
                             const distill::StudentModel& student) {
  return evalkit::evaluate(data.split().test, test_probabilities(student, data), config.label_mode);
}

void write_evaluation(const evalkit::Evaluation& eval, const md::StockPanel& panel, const fs::path& dir) {
  {
    auto out = open_csv(dir / "eval_summary.csv", "decisions,windows,acc,mcc,tp,fp,tn,fn");
    out << std::setprecision(17) << eval.confusion.total() << ',' << eval.windows.size() << ',' << eval.acc << ','
        << eval.mcc << ',' << eval.confusion.tp << ',' << eval.confusion.fp << ',' << eval.confusion.tn << ','
        << eval.confusion.fn << '\n';
  }
  {
    auto out = open_csv(dir / "eval_windows.csv", "date,decisions,acc,mcc");
    for (const auto& w : eval.windows) out << panel.dates[w.anchor] << ',' << w.decisions << ',' << w.acc << ',' << w.mcc << '\n';
  }
  auto out = open_csv(dir / "eval_decisions.csv", "date,symbol,step,prob_up,pred,truth");
  for (const auto& d : eval.decisions) {
    out << panel.dates[d.anchor] << ',' << panel.symbols[d.stock] << ',' << d.step << ',' << d.prob_up << ','
        << int(d.pred) << ',' << int(d.truth) << '\n';
  }
}

BacktestRun backtest(const config::RunConfig& config, const Dataset& data, const distill::StudentModel& student) {
  std::vector<std::size_t> anchors;
  for (const auto& w : data.split().test) anchors.push_back(w.anchor);
  BacktestRun run;
  run.student = evalkit::backtest(test_probabilities(student, data), anchors, data.panel(), config.policy);
  run.uniform = evalkit::uniform_backtest(anchors, data.panel(), config.policy);
  run.oracle = evalkit::backtest(evalkit::oracle_scores(anchors, data.panel(), config.policy), anchors, data.panel(),
                                 config.policy);
  return run;
}

void write_backtest(const BacktestRun& run, const md::StockPanel& panel, const fs::path& dir) {
  {
    auto out = open_csv(dir / "backtest_equity.csv", "date,method,equity");
    out << std::setprecision(17);
    const std::pair<const char*, const evalkit::BacktestResult*> curves[] = {
        {"student", &run.student}, {"uniform", &run.uniform}, {"oracle", &run.oracle}};
    for (const auto& [name, r] : curves) {
      for (std::size_t i = 0; i < r->days.size(); ++i) out << panel.dates[r->days[i]] << ',' << name << ',' << r->equity_curve[i] << '\n';
    }
  }
  auto out = open_csv(dir / "backtest_positions.csv", "date,symbols");
  for (const auto& p : run.student.positions_log) {
    out << panel.dates[p.day] << ',';
    for (std::size_t i = 0; i < p.stocks.size(); ++i) out << (i ? ";" : "") << panel.symbols[p.stocks[i]];
    out << '\n';
  }
}

void write_effective_config(const config::RunConfig& config, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config::to_ini(config);
}

}  // namespace dishft::app
