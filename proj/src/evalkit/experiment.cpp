// SPDX-License-Identifier: Apache-2.0
#include "dishft/evalkit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "dishft/error.hpp"

namespace dishft::evalkit {

namespace md = marketdata;
namespace nd = ndgrad;
namespace th = teacher;
namespace ds = distill;

namespace {

struct Trained {
  nd::ParameterSet params;
  double best_val = 0.0;
};

double best_val(const std::vector<th::EpochLog>& log) {
  double best = 0.0;
  for (const auto& e : log) best = std::max(best, e.val_acc);
  return best;
}

th::Scorer student_scorer(const ds::StudentConfig& cfg, const nd::Tensor& relation) {
  return [&cfg, &relation](const nd::ParameterSet& p, const md::WindowSample& w) {
    return ds::student_probabilities(cfg, p, w.history, relation);
  };
}

std::vector<std::vector<double>> test_probabilities(std::span<const md::WindowSample> test, const nd::ParameterSet& p,
                                                    const th::Scorer& scorer) {
  std::vector<std::vector<double>> out;
  out.reserve(test.size());
  for (const auto& w : test) out.push_back(scorer(p, w));
  return out;
}

void add_curve(std::vector<EquitySeries>& series, const std::string& backbone, const std::string& method,
               const std::vector<double>& curve, double weight) {
  auto it = std::find_if(series.begin(), series.end(),
                         [&](const EquitySeries& s) { return s.backbone == backbone && s.method == method; });
  if (it == series.end()) {
    series.push_back({backbone, method, std::vector<double>(curve.size(), 0.0)});
    it = series.end() - 1;
  }
  for (std::size_t i = 0; i < curve.size(); ++i) it->equity[i] += weight * curve[i];
}

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17) << header << '\n';
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  std::string bad;
  if (backbones.empty()) bad += " backbones must not be empty;";
  if (seeds.size() < 2) bad += " at least two seeds are required;";
  if (lambda_grid.empty()) bad += " lambda_grid must not be empty;";
  for (double l : lambda_grid) {
    if (!(l > 0.0) || !std::isfinite(l)) bad += " lambda_grid entries must be > 0;";
  }
  if (teacher.fusion_dim != student.st.output_dim) bad += " student output_dim must equal teacher fusion_dim;";
  if (!bad.empty()) throw ConfigError("invalid experiment config:" + bad);
  teacher.validate();
  student.validate();
  train.validate();
  policy.validate();
}

std::string backbone_name(stgnn::SpatialKind kind) { return kind == stgnn::SpatialKind::kGat ? "gat" : "gcn"; }

ExperimentReport run_experiment(std::span<const md::WindowSample> windows, const md::StockPanel& panel,
                                const nd::Tensor& relation, const ExperimentConfig& config,
                                const Progress& progress) {
  config.validate();
  const th::Split split = th::chronological_split(windows);
  if (config.policy.top_k > panel.n_stocks()) {
    throw ConfigError("invalid experiment config: top_k exceeds the number of stocks");
  }
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  ExperimentReport report;
  std::vector<std::size_t> anchors;
  for (const auto& w : split.test) anchors.push_back(w.anchor);
  const BacktestResult uniform = uniform_backtest(anchors, panel, config.policy);
  for (std::size_t d : uniform.days) report.equity_dates.push_back(panel.dates[d]);
  const double weight = 1.0 / static_cast<double>(config.seeds.size());

  for (stgnn::SpatialKind kind : config.backbones) {
    const std::string bb = backbone_name(kind);
    add_curve(report.equity, bb, "uniform", uniform.equity_curve, 1.0);
    for (std::uint64_t seed : config.seeds) {
      th::TrainConfig train = config.train;
      train.seed = seed;
      th::TeacherConfig tcfg = config.teacher;
      tcfg.st.spatial_kind = kind;
      tcfg.fusion = th::FusionKind::kAttention;
      ds::StudentConfig scfg = config.student;
      scfg.st.spatial_kind = kind;

      say(bb + " seed " + std::to_string(seed) + ": teacher");
      const th::TeacherModel teacher = th::train_teacher(split, relation, tcfg, train).model;
      const std::vector<nd::Tensor> targets = ds::teacher_targets(teacher, split, relation, train);

      auto evaluate = [&](const std::string& variant, const ds::StudentConfig& cfg, const nd::ParameterSet& p,
                          std::vector<RunRow>& table) {
        const th::Score s = th::score_windows(split.test, p, student_scorer(cfg, relation), config.label_mode);
        table.push_back({bb, variant, seed, s.acc, s.mcc, cfg.lambda});
      };
      auto run_backtest = [&](const std::string& method, const ds::StudentConfig& cfg, const nd::ParameterSet& p) {
        const auto probs = test_probabilities(split.test, p, student_scorer(cfg, relation));
        const BacktestResult r = backtest(probs, anchors, panel, config.policy);
        report.final_equity.push_back({bb, method, seed, r.equity_curve.back()});
        add_curve(report.equity, bb, method, r.equity_curve, weight);
      };

      say(bb + " seed " + std::to_string(seed) + ": baseline");
      ds::StudentConfig base_cfg = scfg;
      base_cfg.lambda = 0.0;
      const auto baseline = ds::train_baseline(ds::extract_head(teacher), split, relation, base_cfg, train);
      evaluate(kBaseline, base_cfg, baseline.model.params, report.table1);
      run_backtest(kBaseline, base_cfg, baseline.model.params);

      // Lambda chosen on validation accuracy; the first of equal scores wins.
      ds::StudentConfig best_cfg = scfg;
      Trained best{{}, -1.0};
      for (double lambda : config.lambda_grid) {
        say(bb + " seed " + std::to_string(seed) + ": student lambda " + std::to_string(lambda));
        ds::StudentConfig cfg = scfg;
        cfg.lambda = lambda;
        cfg.distill = ds::DistillKind::kHsic;
        auto r = ds::train_student(teacher, split, relation, cfg, train, &targets);
        const double v = best_val(r.log);
        if (v > best.best_val) {
          best = {std::move(r.model.params), v};
          best_cfg = cfg;
        }
      }
      evaluate(kDishft, best_cfg, best.params, report.table1);
      run_backtest(kDishft, best_cfg, best.params);
      if (!config.ablations) continue;

      report.table2.push_back(report.table1.back());
      say(bb + " seed " + std::to_string(seed) + ": w/o H");
      ds::StudentConfig mse_cfg = best_cfg;
      mse_cfg.distill = ds::DistillKind::kMse;
      const auto mse = ds::train_student(teacher, split, relation, mse_cfg, train, &targets);
      evaluate(kWithoutH, mse_cfg, mse.model.params, report.table2);

      say(bb + " seed " + std::to_string(seed) + ": w/o F");
      th::TeacherConfig concat_cfg = tcfg;
      concat_cfg.fusion = th::FusionKind::kConcat;
      const th::TeacherModel concat = th::train_teacher(split, relation, concat_cfg, train).model;
      const auto plain = ds::train_student(concat, split, relation, best_cfg, train);
      evaluate(kWithoutF, best_cfg, plain.model.params, report.table2);
    }

    std::vector<double> base_acc, dishft_acc;
    for (const auto& r : report.table1) {
      if (r.backbone != bb) continue;
      (r.variant == kBaseline ? base_acc : dishft_acc).push_back(r.acc);
    }
    report.comparisons.push_back({bb, ttest(dishft_acc, base_acc), mean(dishft_acc) - mean(base_acc)});
  }

  report.summary = summarize(report.table1);
  for (const auto& s : summarize(report.table2)) {
    if (s.variant != kDishft) report.summary.push_back(s);
  }
  return report;
}

std::vector<VariantSummary> summarize(std::span<const RunRow> rows) {
  std::vector<VariantSummary> out;
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.backbone, r.variant);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [bb, variant] : keys) {
    std::vector<double> acc, m;
    for (const auto& r : rows) {
      if (r.backbone == bb && r.variant == variant) {
        acc.push_back(r.acc);
        m.push_back(r.mcc);
      }
    }
    out.push_back({bb, variant, acc.size(), mean(acc), stddev(acc), mean(m), stddev(m)});
  }
  return out;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_rows = [&](const char* name, const std::vector<RunRow>& rows) {
    auto out = open_csv(dir / name, "backbone,variant,seed,acc,mcc");
    for (const auto& r : rows) out << r.backbone << ',' << r.variant << ',' << r.seed << ',' << r.acc << ',' << r.mcc << '\n';
  };
  write_rows("table1.csv", report.table1);
  write_rows("table2.csv", report.table2);
  {
    auto out = open_csv(dir / "summary.csv", "backbone,variant,runs,acc_mean,acc_std,mcc_mean,mcc_std");
    for (const auto& s : report.summary) {
      out << s.backbone << ',' << s.variant << ',' << s.runs << ',' << s.acc_mean << ',' << s.acc_std << ','
          << s.mcc_mean << ',' << s.mcc_std << '\n';
    }
  }
  {
    auto out = open_csv(dir / "significance.csv", "backbone,acc_gain,t_stat,dof,p_value");
    for (const auto& c : report.comparisons) {
      out << c.backbone << ',' << c.acc_gain << ',' << c.acc_test.t_stat << ',' << c.acc_test.dof << ','
          << c.acc_test.p_value << '\n';
    }
  }
  {
    auto out = open_csv(dir / "backtest.csv", "backbone,method,seed,final_equity");
    for (const auto& f : report.final_equity) out << f.backbone << ',' << f.method << ',' << f.seed << ',' << f.equity << '\n';
  }
  {
    auto out = open_csv(dir / "equity.csv", "date,method,equity");
    const bool several = report.equity.size() > 1 &&
                         std::any_of(report.equity.begin(), report.equity.end(),
                                     [&](const EquitySeries& s) { return s.backbone != report.equity.front().backbone; });
    for (const auto& s : report.equity) {
      const std::string method = several ? s.backbone + ":" + s.method : s.method;
      for (std::size_t i = 0; i < s.equity.size(); ++i) out << report.equity_dates[i] << ',' << method << ',' << s.equity[i] << '\n';
    }
  }
  std::ofstream svg(dir / "equity.svg");
  if (!svg) throw IoError("cannot write " + (dir / "equity.svg").string());
  svg << equity_svg(report);
}

std::string equity_svg(const ExperimentReport& report) {
  constexpr double kWidth = 800, kHeight = 450, kLeft = 70, kRight = 170, kTop = 30, kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#7f7f7f", "#2ca02c", "#9467bd", "#ff7f0e"};
  double lo = 1.0, hi = 1.0;
  std::size_t len = 0;
  for (const auto& s : report.equity) {
    for (double v : s.equity) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    len = std::max(len, s.equity.size());
  }
  if (hi - lo < 1e-9) {
    lo -= 0.01;
    hi += 0.01;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto x = [&](std::size_t i) { return kLeft + (len > 1 ? pw * static_cast<double>(i) / static_cast<double>(len - 1) : 0.0); };
  auto y = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kLeft << "\" y=\"18\" font-size=\"14\">Test-period equity (mean over seeds)</text>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3) << v
      << std::setprecision(2) << "</text>\n";
    o << "<line x1=\"" << kLeft << "\" y1=\"" << y(v) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y(v)
      << "\" stroke=\"#dddddd\"/>\n";
  }
  if (!report.equity_dates.empty()) {
    o << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 20 << "\">" << report.equity_dates.front() << "</text>\n";
    o << "<text x=\"" << kLeft + pw << "\" y=\"" << kHeight - 20 << "\" text-anchor=\"end\">"
      << report.equity_dates.back() << "</text>\n";
  }
  for (std::size_t k = 0; k < report.equity.size(); ++k) {
    const auto& s = report.equity[k];
    const char* color = kColors[k % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.equity.size(); ++i) o << (i ? " " : "") << x(i) << ',' << y(s.equity[i]);
    o << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k) + 8.0;
    o << "<line x1=\"" << kWidth - kRight + 15 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 35 << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kWidth - kRight + 40 << "\" y=\"" << ly + 4 << "\">" << s.backbone << ' ' << s.method
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace dishft::evalkit
