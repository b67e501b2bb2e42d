// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through dishft.h.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dishft/dishft.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

void check(dft_status s, int code = kExitRuntime) {
  if (s != DFT_OK) {
    const bool usage = s == DFT_E_CONFIG || s == DFT_E_PARSE || s == DFT_E_ARGUMENT;
    throw Failure{usage ? kExitUsage : code, std::string(dft_status_name(s)) + " error: " + dft_last_error()};
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<dft_config, Deleter<dft_config, dft_config_free>>;
using Dataset = std::unique_ptr<dft_dataset, Deleter<dft_dataset, dft_dataset_free>>;
using Model = std::unique_ptr<dft_model, Deleter<dft_model, dft_model_free>>;
using Report = std::unique_ptr<dft_report, Deleter<dft_report, dft_report_free>>;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Loads, applies --seed and the output root (--out, then DISHFT_OUT, then
// the file's [output] dir), validates, and echoes the result.
Config prepare(const Globals& g) {
  dft_config* raw = nullptr;
  check(dft_config_load(g.config.c_str(), &raw), kExitUsage);
  Config config(raw);
  if (g.seed) check(dft_config_set_seed(config.get(), *g.seed));
  if (!g.out.empty()) {
    check(dft_config_set_output_dir(config.get(), g.out.c_str()));
  } else if (const char* env = std::getenv("DISHFT_OUT"); env && *env) {
    check(dft_config_set_output_dir(config.get(), env));
  }
  check(dft_config_validate(config.get()), kExitUsage);
  const std::string echo = std::string(dft_config_output_dir(config.get())) + "/config.ini";
  check(dft_config_write_effective(config.get(), echo.c_str()));
  std::printf("config: %s\n", echo.c_str());
  return config;
}

Dataset load_data(const dft_config* config) {
  dft_dataset* raw = nullptr;
  check(dft_dataset_load(config, &raw));
  Dataset data(raw);
  dft_dataset_info info{};
  check(dft_dataset_info_get(data.get(), &info));
  std::printf("data: %zu stocks, %zu days (%s to %s), %zu windows (train %zu, val %zu, test %zu)\n", info.n_stocks,
              info.n_days, info.first_date, info.last_date, info.n_windows, info.n_train, info.n_val, info.n_test);
  return data;
}

Model load_model(const dft_config* config, const std::string& checkpoint) {
  dft_model* raw = nullptr;
  check(dft_model_load_student(config, checkpoint.c_str(), &raw));
  return Model(raw);
}

std::string default_checkpoint(const dft_config* config, const std::string& given) {
  return given.empty() ? std::string(dft_config_output_dir(config)) + "/student.ckpt" : given;
}

void cmd_generate(const Globals& g, std::size_t block_days) {
  Config config = prepare(g);
  Dataset data = load_data(config.get());
  const char* out = dft_config_output_dir(config.get());
  check(dft_dataset_export(data.get(), out, block_days));
  std::printf("wrote %s/prices.csv, relations.csv, sector_stats.csv\n", out);
  std::string current;
  double lo = 0.0, hi = 0.0;
  auto flush = [&] {
    if (!current.empty()) std::printf("  %-12s block mean log return %+.5f .. %+.5f\n", current.c_str(), lo, hi);
  };
  for (std::size_t i = 0; i < dft_dataset_sector_count(data.get()); ++i) {
    dft_sector_stat s{};
    check(dft_dataset_sector(data.get(), i, &s));
    if (current != s.industry) {
      flush();
      current = s.industry;
      lo = hi = s.mean_log_return;
    }
    lo = std::min(lo, s.mean_log_return);
    hi = std::max(hi, s.mean_log_return);
  }
  flush();
}

void cmd_train(const Globals& g) {
  Config config = prepare(g);
  Dataset data = load_data(config.get());
  dft_model* raw = nullptr;
  check(dft_train(config.get(), data.get(), &raw));
  Model model(raw);
  dft_model_info info{};
  check(dft_model_info_get(model.get(), &info));
  const char* out = dft_config_output_dir(config.get());
  check(dft_model_save(model.get(), out));
  std::printf("teacher: %zu epochs, val acc %.4f\n", info.teacher_epochs, info.teacher_val_acc);
  std::printf("student: %zu epochs, val acc %.4f\n", info.student_epochs, info.student_val_acc);
  std::printf("wrote %s/teacher.ckpt, student.ckpt, teacher_log.csv, student_log.csv\n", out);
}

void cmd_eval(const Globals& g, const std::string& checkpoint) {
  Config config = prepare(g);
  Dataset data = load_data(config.get());
  Model model = load_model(config.get(), default_checkpoint(config.get(), checkpoint));
  dft_eval_summary s{};
  const char* out = dft_config_output_dir(config.get());
  check(dft_evaluate(config.get(), data.get(), model.get(), out, &s));
  std::printf("test: %zu windows, %zu decisions, acc %.4f, mcc %.4f (tp %zu fp %zu tn %zu fn %zu)\n", s.windows,
              s.decisions, s.acc, s.mcc, s.tp, s.fp, s.tn, s.fn);
  std::printf("wrote %s/eval_summary.csv, eval_windows.csv, eval_decisions.csv\n", out);
}

void cmd_backtest(const Globals& g, const std::string& checkpoint) {
  Config config = prepare(g);
  Dataset data = load_data(config.get());
  Model model = load_model(config.get(), default_checkpoint(config.get(), checkpoint));
  dft_backtest_summary s{};
  const char* out = dft_config_output_dir(config.get());
  check(dft_backtest(config.get(), data.get(), model.get(), out, &s));
  std::printf("backtest: %zu days, %zu rebalances\n", s.days, s.rebalances);
  std::printf("final return: student %+.2f%%, uniform %+.2f%%, oracle %+.2f%%\n", 100.0 * s.student_return,
              100.0 * s.uniform_return, 100.0 * s.oracle_return);
  std::printf("wrote %s/backtest_equity.csv, backtest_positions.csv\n", out);
}

void progress(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

void cmd_experiment(const Globals& g, bool quiet) {
  Config config = prepare(g);
  Dataset data = load_data(config.get());
  dft_report* raw = nullptr;
  check(dft_experiment_run(config.get(), data.get(), quiet ? nullptr : progress, nullptr, &raw));
  Report report(raw);
  const char* out = dft_config_output_dir(config.get());
  check(dft_report_write(report.get(), out));
  for (std::size_t i = 0; i < dft_report_backbone_count(report.get()); ++i) {
    dft_comparison c{};
    check(dft_report_comparison(report.get(), i, &c));
    std::printf("%s: baseline acc %.4f, dishft acc %.4f, gain %+.4f, t %.3f, p %.4g\n", c.backbone, c.baseline_acc,
                c.dishft_acc, c.acc_gain, c.t_stat, c.p_value);
  }
  std::printf("wrote report under %s\n", out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DishFT stock trend distillation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dft_version()));
  Globals g;
  std::size_t block_days = 20;
  std::string checkpoint;
  bool quiet = false;

  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config,-c", g.config, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", g.seed, "training seed; experiment seeds become seed, seed+1, ...");
    sub->add_option("--out,-o", g.out, "output directory (default: $DISHFT_OUT, then [output] dir)");
  };
  CLI::App* generate = app.add_subcommand("generate", "write the panel, relation and sector statistics CSVs");
  add_globals(generate);
  generate->add_option("--block-days", block_days, "days per sector statistics block")->check(CLI::PositiveNumber);
  CLI::App* train = app.add_subcommand("train", "train the teacher, then the student");
  add_globals(train);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a student checkpoint on the test split");
  add_globals(eval);
  eval->add_option("--checkpoint", checkpoint, "student checkpoint (default: <out>/student.ckpt)");
  CLI::App* backtest = app.add_subcommand("backtest", "back-test a student checkpoint on the test split");
  add_globals(backtest);
  backtest->add_option("--checkpoint", checkpoint, "student checkpoint (default: <out>/student.ckpt)");
  CLI::App* experiment = app.add_subcommand("experiment", "multi-seed baseline, distillation and ablation runs");
  add_globals(experiment);
  experiment->add_flag("--quiet,-q", quiet, "no progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate->parsed()) cmd_generate(g, block_days);
    if (train->parsed()) cmd_train(g);
    if (eval->parsed()) cmd_eval(g, checkpoint);
    if (backtest->parsed()) cmd_backtest(g, checkpoint);
    if (experiment->parsed()) cmd_experiment(g, quiet);
  } catch (const Failure& f) {
    std::fprintf(stderr, "dishft: %s\n", f.message.c_str());
    return f.code;
  }
  return kExitOk;
}
