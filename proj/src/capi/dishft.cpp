// SPDX-License-Identifier: Apache-2.0
#include "dishft/dishft.h"

#include <exception>
#include <new>
#include <string>

#include "dishft/app/pipeline.hpp"
#include "dishft/error.hpp"

namespace app = dishft::app;
namespace cfg = dishft::config;

struct dft_config {
  cfg::RunConfig value;
  std::string output_dir;
};

struct dft_dataset {
  std::unique_ptr<app::Dataset> value;
  std::vector<app::SectorStat> sectors;
};

struct dft_model {
  app::TrainedModels value;
};

struct dft_report {
  dishft::evalkit::ExperimentReport value;
};

namespace {

thread_local std::string g_last_error;

dft_status fail(dft_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `body`, mapping library exceptions onto status codes.
template <class F>
dft_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DFT_OK;
  } catch (const dishft::ConfigError& e) {
    return fail(DFT_E_CONFIG, e.what());
  } catch (const dishft::ParseError& e) {
    return fail(DFT_E_PARSE, e.what());
  } catch (const dishft::DataError& e) {
    return fail(DFT_E_DATA, e.what());
  } catch (const dishft::RangeError& e) {
    return fail(DFT_E_RANGE, e.what());
  } catch (const dishft::ShapeError& e) {
    return fail(DFT_E_SHAPE, e.what());
  } catch (const dishft::NumericError& e) {
    return fail(DFT_E_NUMERIC, e.what());
  } catch (const dishft::IoError& e) {
    return fail(DFT_E_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DFT_E_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DFT_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DFT_E_INTERNAL, e.what());
  } catch (...) {
    return fail(DFT_E_INTERNAL, "unknown error");
  }
}

#define DFT_REQUIRE(cond, what) \
  if (!(cond)) return fail(DFT_E_ARGUMENT, what)

}  // namespace

extern "C" {

const char* dft_version(void) { return "0.1.0"; }

const char* dft_status_name(dft_status status) {
  switch (status) {
    case DFT_OK: return "ok";
    case DFT_E_ARGUMENT: return "argument";
    case DFT_E_CONFIG: return "config";
    case DFT_E_PARSE: return "parse";
    case DFT_E_DATA: return "data";
    case DFT_E_RANGE: return "range";
    case DFT_E_SHAPE: return "shape";
    case DFT_E_NUMERIC: return "numeric";
    case DFT_E_IO: return "io";
    case DFT_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* dft_last_error(void) { return g_last_error.c_str(); }

dft_status dft_config_load(const char* path, dft_config** out) {
  DFT_REQUIRE(path && out, "dft_config_load: null argument");
  return guarded([&] { *out = new dft_config{cfg::load_config(path), {}}; });
}

dft_status dft_config_parse(const char* text, dft_config** out) {
  DFT_REQUIRE(text && out, "dft_config_parse: null argument");
  return guarded([&] { *out = new dft_config{cfg::parse_config(text), {}}; });
}

void dft_config_free(dft_config* config) { delete config; }

dft_status dft_config_set_seed(dft_config* config, uint64_t seed) {
  DFT_REQUIRE(config, "dft_config_set_seed: null config");
  config->value.train.seed = seed;
  for (std::size_t i = 0; i < config->value.seeds.size(); ++i) config->value.seeds[i] = seed + i;
  g_last_error.clear();
  return DFT_OK;
}

dft_status dft_config_set_output_dir(dft_config* config, const char* dir) {
  DFT_REQUIRE(config && dir, "dft_config_set_output_dir: null argument");
  return guarded([&] { config->value.output_dir = dir; });
}

const char* dft_config_output_dir(const dft_config* config) {
  if (!config) return "";
  auto* self = const_cast<dft_config*>(config);
  self->output_dir = config->value.output_dir.string();
  return self->output_dir.c_str();
}

dft_status dft_config_validate(const dft_config* config) {
  DFT_REQUIRE(config, "dft_config_validate: null config");
  return guarded([&] { config->value.validate(); });
}

dft_status dft_config_write_effective(const dft_config* config, const char* path) {
  DFT_REQUIRE(config && path, "dft_config_write_effective: null argument");
  return guarded([&] { app::write_effective_config(config->value, path); });
}

dft_status dft_dataset_load(const dft_config* config, dft_dataset** out) {
  DFT_REQUIRE(config && out, "dft_dataset_load: null argument");
  return guarded([&] {
    auto data = std::make_unique<dft_dataset>();
    data->value = app::load_dataset(config->value);
    data->sectors = app::sector_stats(data->value->panel(), 20);
    *out = data.release();
  });
}

void dft_dataset_free(dft_dataset* data) { delete data; }

dft_status dft_dataset_info_get(const dft_dataset* data, dft_dataset_info* out) {
  DFT_REQUIRE(data && out, "dft_dataset_info_get: null argument");
  const app::Dataset& d = *data->value;
  const auto& dates = d.panel().dates;
  *out = dft_dataset_info{d.panel().n_stocks(), d.panel().n_days(), d.windows().size(),
                          d.split().train.size(), d.split().val.size(), d.split().test.size(),
                          dates.empty() ? "" : dates.front().c_str(), dates.empty() ? "" : dates.back().c_str()};
  g_last_error.clear();
  return DFT_OK;
}

dft_status dft_dataset_export(dft_dataset* data, const char* dir, size_t block_days) {
  DFT_REQUIRE(data && dir, "dft_dataset_export: null argument");
  return guarded([&] {
    auto stats = app::sector_stats(data->value->panel(), block_days);
    app::export_dataset(*data->value, dir, block_days);
    data->sectors = std::move(stats);
  });
}

size_t dft_dataset_sector_count(const dft_dataset* data) { return data ? data->sectors.size() : 0; }

dft_status dft_dataset_sector(const dft_dataset* data, size_t index, dft_sector_stat* out) {
  DFT_REQUIRE(data && out, "dft_dataset_sector: null argument");
  DFT_REQUIRE(index < data->sectors.size(), "dft_dataset_sector: index out of range");
  const auto& s = data->sectors[index];
  *out = dft_sector_stat{s.industry.c_str(), s.first_date.c_str(), s.last_date.c_str(), s.mean_log_return};
  g_last_error.clear();
  return DFT_OK;
}

dft_status dft_train(const dft_config* config, const dft_dataset* data, dft_model** out) {
  DFT_REQUIRE(config && data && out, "dft_train: null argument");
  return guarded([&] { *out = new dft_model{app::train(config->value, *data->value)}; });
}

dft_status dft_model_load_student(const dft_config* config, const char* checkpoint, dft_model** out) {
  DFT_REQUIRE(config && checkpoint && out, "dft_model_load_student: null argument");
  return guarded([&] {
    *out = new dft_model{app::TrainedModels{{}, {}, app::load_student(config->value, checkpoint), {}}};
  });
}

void dft_model_free(dft_model* model) { delete model; }

dft_status dft_model_info_get(const dft_model* model, dft_model_info* out) {
  DFT_REQUIRE(model && out, "dft_model_info_get: null argument");
  const auto& m = model->value;
  *out = dft_model_info{m.teacher.has_value() ? 1 : 0, m.teacher_log.size(),
                        m.teacher_log.empty() ? 0.0 : m.teacher_log.back().val_acc, m.student_log.size(),
                        m.student_log.empty() ? 0.0 : m.student_log.back().val_acc};
  g_last_error.clear();
  return DFT_OK;
}

dft_status dft_model_save(const dft_model* model, const char* dir) {
  DFT_REQUIRE(model && dir, "dft_model_save: null argument");
  return guarded([&] { app::save_models(model->value, dir); });
}

dft_status dft_evaluate(const dft_config* config, const dft_dataset* data, const dft_model* model, const char* dir,
                        dft_eval_summary* out) {
  DFT_REQUIRE(config && data && model && out, "dft_evaluate: null argument");
  return guarded([&] {
    const auto eval = app::evaluate(config->value, *data->value, model->value.student);
    if (dir) app::write_evaluation(eval, data->value->panel(), dir);
    const auto& c = eval.confusion;
    *out = dft_eval_summary{c.total(), eval.windows.size(), eval.acc, eval.mcc, c.tp, c.fp, c.tn, c.fn};
  });
}

dft_status dft_backtest(const dft_config* config, const dft_dataset* data, const dft_model* model, const char* dir,
                        dft_backtest_summary* out) {
  DFT_REQUIRE(config && data && model && out, "dft_backtest: null argument");
  return guarded([&] {
    const auto run = app::backtest(config->value, *data->value, model->value.student);
    if (dir) app::write_backtest(run, data->value->panel(), dir);
    *out = dft_backtest_summary{run.student.days.size(), run.student.positions_log.size(),
                                run.student.final_return, run.uniform.final_return, run.oracle.final_return};
  });
}

dft_status dft_experiment_run(const dft_config* config, const dft_dataset* data, dft_progress_fn progress,
                              void* user, dft_report** out) {
  DFT_REQUIRE(config && data && out, "dft_experiment_run: null argument");
  return guarded([&] {
    dishft::evalkit::Progress cb;
    if (progress) cb = [progress, user](const std::string& msg) { progress(msg.c_str(), user); };
    const app::Dataset& d = *data->value;
    *out = new dft_report{dishft::evalkit::run_experiment(d.windows(), d.panel(), d.relation(),
                                                          config->value.experiment_config(), cb)};
  });
}

void dft_report_free(dft_report* report) { delete report; }

dft_status dft_report_write(const dft_report* report, const char* dir) {
  DFT_REQUIRE(report && dir, "dft_report_write: null argument");
  return guarded([&] { dishft::evalkit::write_report(report->value, dir); });
}

size_t dft_report_backbone_count(const dft_report* report) { return report ? report->value.comparisons.size() : 0; }

dft_status dft_report_comparison(const dft_report* report, size_t index, dft_comparison* out) {
  DFT_REQUIRE(report && out, "dft_report_comparison: null argument");
  DFT_REQUIRE(index < report->value.comparisons.size(), "dft_report_comparison: index out of range");
  const auto& c = report->value.comparisons[index];
  double base = 0.0, full = 0.0;
  for (const auto& s : report->value.summary) {
    if (s.backbone != c.backbone) continue;
    if (s.variant == dishft::evalkit::kBaseline) base = s.acc_mean;
    if (s.variant == dishft::evalkit::kDishft) full = s.acc_mean;
  }
  *out = dft_comparison{c.backbone.c_str(), base, full, c.acc_gain, c.acc_test.t_stat, c.acc_test.dof,
                        c.acc_test.p_value};
  g_last_error.clear();
  return DFT_OK;
}

}  // extern "C"
