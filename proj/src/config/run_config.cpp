// SPDX-License-Identifier: Apache-2.0
#include "dishft/config/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dishft/error.hpp"

namespace dishft::config {

namespace {

namespace pt = boost::property_tree;
using Errors = std::vector<std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  if constexpr (std::is_unsigned_v<T>) {
    if (*first == '-') return false;
  }
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) return false;
  if constexpr (std::is_floating_point_v<T>) return std::isfinite(out);
  return true;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + f(xs[i]);
  return out;
}

// One INI key: how to read it into the config and how to print it back.
struct Field {
  std::string section;
  std::string key;
  std::function<bool(const std::string&)> read;
  std::function<std::string()> write;
};

template <class T>
Field number(const char* section, const char* key, T& ref) {
  return {section, key, [&ref](const std::string& s) { return parse_number(s, ref); },
          [&ref]() {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(ref);
            } else {
              return std::to_string(ref);
            }
          }};
}

Field boolean(const char* section, const char* key, bool& ref) {
  return {section, key,
          [&ref](const std::string& s) {
            const std::string v = trim(s);
            if (v == "true" || v == "1" || v == "yes") return (ref = true, true);
            if (v == "false" || v == "0" || v == "no") return (ref = false, true);
            return false;
          },
          [&ref]() { return std::string(ref ? "true" : "false"); }};
}

template <class E>
Field choice(const char* section, const char* key, E& ref, std::vector<std::pair<std::string, E>> names) {
  return {section, key,
          [&ref, names](const std::string& s) {
            for (const auto& [n, v] : names) {
              if (trim(s) == n) return (ref = v, true);
            }
            return false;
          },
          [&ref, names]() {
            for (const auto& [n, v] : names) {
              if (v == ref) return n;
            }
            return std::string("?");
          }};
}

Field path(const char* section, const char* key, std::filesystem::path& ref) {
  return {section, key, [&ref](const std::string& s) { return (ref = trim(s), true); },
          [&ref]() { return ref.string(); }};
}

const std::vector<std::pair<std::string, stgnn::SpatialKind>> kBackbones{{"gcn", stgnn::SpatialKind::kGcn},
                                                                         {"gat", stgnn::SpatialKind::kGat}};

std::vector<Field> fields(RunConfig& c) {
  using teacher::FusionKind;
  using teacher::LabelMode;
  namespace ds = distill;
  return {
      {"data", "source",
       [&c](const std::string& s) {
         if (trim(s) == "synthetic") return (c.synthetic = true, true);
         if (trim(s) == "csv") return (c.synthetic = false, true);
         return false;
       },
       [&c]() { return std::string(c.synthetic ? "synthetic" : "csv"); }},
      path("data", "prices", c.prices),
      path("data", "relations", c.relations),
      number("data", "lookback", c.lookback),
      number("data", "horizon", c.horizon),
      number("data", "delta", c.delta),
      number("data", "window_stride", c.window_stride),
      choice("data", "label_mode", c.label_mode, {{"horizon", LabelMode::kHorizon}, {"per_day", LabelMode::kPerDay}}),

      number("synthetic", "n_stocks", c.synthetic_spec.n_stocks),
      number("synthetic", "n_days", c.synthetic_spec.n_days),
      number("synthetic", "n_sectors", c.synthetic_spec.n_sectors),
      number("synthetic", "base_vol", c.synthetic_spec.base_vol),
      number("synthetic", "base_drift", c.synthetic_spec.base_drift),
      number("synthetic", "seed", c.synthetic_spec.seed),
      {"synthetic", "events",
       [&c](const std::string& s) {
         std::vector<marketdata::RegimeEvent> events;
         for (const std::string& item : split_list(s)) {
           const auto a = item.find(':'), b = item.find(':', a == std::string::npos ? a : a + 1);
           if (a == std::string::npos || b == std::string::npos) return false;
           marketdata::RegimeEvent e;
           if (!parse_number(item.substr(0, a), e.day) || !parse_number(item.substr(a + 1, b - a - 1), e.sector) ||
               !parse_number(item.substr(b + 1), e.drift_shift)) {
             return false;
           }
           events.push_back(e);
         }
         c.synthetic_spec.regime_schedule = std::move(events);
         return true;
       },
       [&c]() {
         return join<marketdata::RegimeEvent>(c.synthetic_spec.regime_schedule, [](const marketdata::RegimeEvent& e) {
           return std::to_string(e.day) + ":" + std::to_string(e.sector) + ":" + format_double(e.drift_shift);
         });
       }},
      number("synthetic", "rotation_every", c.rotation_every),
      number("synthetic", "rotation_first_day", c.rotation_first_day),
      number("synthetic", "rotation_magnitude", c.rotation_magnitude),
      number("synthetic", "rotation_seed", c.rotation_seed),

      choice("model", "backbone", c.backbone, kBackbones),
      number("model", "hidden_dim", c.hidden_dim),
      number("model", "spatial_layers", c.spatial_layers),
      number("model", "fusion_dim", c.fusion_dim),
      number("model", "future_dim", c.future_dim),
      choice("model", "fusion", c.fusion, {{"attention", FusionKind::kAttention}, {"concat", FusionKind::kConcat}}),
      number("model", "tau", c.tau),
      number("model", "k_d", c.k_d),

      number("train", "learning_rate", c.train.learning_rate),
      number("train", "batch_size", c.train.batch_size),
      number("train", "max_epochs", c.train.max_epochs),
      number("train", "patience", c.train.patience),
      number("train", "seed", c.train.seed),
      number("train", "train_stride", c.train.train_stride),
      {"train", "seeds",
       [&c](const std::string& s) {
         std::vector<std::uint64_t> seeds;
         for (const std::string& item : split_list(s)) {
           std::uint64_t v = 0;
           if (!parse_number(item, v)) return false;
           seeds.push_back(v);
         }
         c.seeds = std::move(seeds);
         return true;
       },
       [&c]() { return join<std::uint64_t>(c.seeds, [](const std::uint64_t& v) { return std::to_string(v); }); }},
      {"train", "experiment_backbones",
       [&c](const std::string& s) {
         std::vector<stgnn::SpatialKind> kinds;
         for (const std::string& item : split_list(s)) {
           if (item == "gcn") {
             kinds.push_back(stgnn::SpatialKind::kGcn);
           } else if (item == "gat") {
             kinds.push_back(stgnn::SpatialKind::kGat);
           } else {
             return false;
           }
         }
         c.experiment_backbones = std::move(kinds);
         return true;
       },
       [&c]() {
         return join<stgnn::SpatialKind>(c.experiment_backbones,
                                         [](const stgnn::SpatialKind& k) { return evalkit::backbone_name(k); });
       }},

      number("distill", "lambda", c.lambda),
      {"distill", "lambda_grid",
       [&c](const std::string& s) {
         std::vector<double> grid;
         for (const std::string& item : split_list(s)) {
           double v = 0;
           if (!parse_number(item, v)) return false;
           grid.push_back(v);
         }
         c.lambda_grid = std::move(grid);
         return true;
       },
       [&c]() { return join<double>(c.lambda_grid, [](const double& v) { return format_double(v); }); }},
      choice("distill", "loss", c.distill, {{"hsic", ds::DistillKind::kHsic}, {"mse", ds::DistillKind::kMse}}),
      choice("distill", "kernel", c.hsic.kernel, {{"rbf", ds::KernelKind::kRbf}, {"linear", ds::KernelKind::kLinear}}),
      choice("distill", "bandwidth", c.hsic.bandwidth,
             {{"median", ds::BandwidthKind::kMedian}, {"fixed", ds::BandwidthKind::kFixed}}),
      number("distill", "sigma", c.hsic.sigma),
      choice("distill", "mode", c.hsic.mode,
             {{"per_stock", ds::HsicMode::kPerStockDims}, {"batch", ds::HsicMode::kBatchSamples}}),
      choice("distill", "sign", c.hsic.sign,
             {{"maximize", ds::HsicSign::kMaximizeDependence}, {"literal", ds::HsicSign::kLiteral}}),
      boolean("distill", "unfreeze_head", c.unfreeze_head),

      number("eval", "top_k", c.policy.top_k),
      number("eval", "rebalance_every", c.policy.rebalance_every),
      boolean("eval", "ablations", c.ablations),

      path("output", "dir", c.output_dir),
  };
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig config;
  const std::vector<Field> table = fields(config);
  Errors errors;
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      errors.push_back("key '" + section + "' must sit inside a [section]");
      continue;
    }
    for (const auto& [key, value] : keys) {
      const auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
      if (it == table.end()) {
        errors.push_back("unknown key [" + section + "] " + key);
      } else if (!it->read(value.data())) {
        errors.push_back("[" + section + "] " + key + ": cannot read '" + value.data() + "'");
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config = parse_config(buf.str());
  // CSV inputs are relative to the config file; absolute afterwards so an
  // echoed config reads the same files from anywhere.
  const auto base = std::filesystem::absolute(file).parent_path();
  for (auto* p : {&config.prices, &config.relations}) {
    if (!p->empty() && p->is_relative()) *p = (base / *p).lexically_normal();
  }
  return config;
}

std::string to_ini(const RunConfig& config) {
  RunConfig copy = config;
  std::string out, section;
  for (const Field& f : fields(copy)) {
    if (f.section != section) {
      out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.write() + "\n";
  }
  return out;
}

void RunConfig::validate(bool check_paths) const {
  Errors e;
  auto need = [&e](bool ok, const std::string& msg) {
    if (!ok) e.push_back(msg);
  };
  if (synthetic) {
    need(prices.empty() && relations.empty(), "[data] prices/relations must be empty when source = synthetic");
    const auto& s = synthetic_spec;
    need(s.n_stocks >= 2, "[synthetic] n_stocks must be >= 2");
    need(s.n_sectors >= 1 && s.n_sectors <= s.n_stocks, "[synthetic] n_sectors must be in [1, n_stocks]");
    need(s.base_vol > 0.0, "[synthetic] base_vol must be > 0");
    need(s.n_days > lookback + horizon, "[synthetic] n_days must exceed lookback + horizon");
    for (const auto& ev : effective_synthetic().regime_schedule) {
      need(ev.day < s.n_days && ev.sector < s.n_sectors,
           "[synthetic] event " + std::to_string(ev.day) + ":" + std::to_string(ev.sector) + " is outside the panel");
    }
    need(rotation_every == 0 || s.regime_schedule.empty(), "[synthetic] events and rotation_every are exclusive");
    need(rotation_magnitude >= 0.0, "[synthetic] rotation_magnitude must be >= 0");
  } else {
    need(!prices.empty(), "[data] prices is required unless source = synthetic");
    need(!relations.empty(), "[data] relations is required unless source = synthetic");
    if (check_paths) {
      need(prices.empty() || std::filesystem::exists(prices), "[data] prices: no such file " + prices.string());
      need(relations.empty() || std::filesystem::exists(relations),
           "[data] relations: no such file " + relations.string());
    }
  }
  need(lookback >= 1, "[data] lookback must be >= 1");
  need(horizon >= 1, "[data] horizon must be >= 1");
  need(delta >= 0.0, "[data] delta must be >= 0");
  need(window_stride >= 1, "[data] window_stride must be >= 1");

  need(hidden_dim >= 1, "[model] hidden_dim must be >= 1");
  need(spatial_layers == 1 || spatial_layers == 2, "[model] spatial_layers must be 1 or 2");
  need(fusion_dim >= 1, "[model] fusion_dim must be >= 1");
  need(future_dim >= 1, "[model] future_dim must be >= 1");
  need(tau > 0.0, "[model] tau must be > 0");
  need(k_d >= 0.0, "[model] k_d must be >= 0 (0 means fusion_dim)");

  need(train.learning_rate > 0.0, "[train] learning_rate must be > 0");
  need(train.batch_size >= 1, "[train] batch_size must be >= 1");
  need(train.max_epochs >= 1, "[train] max_epochs must be >= 1");
  need(train.patience >= 1, "[train] patience must be >= 1");
  need(train.train_stride >= 1, "[train] train_stride must be >= 1");
  need(seeds.size() >= 2, "[train] seeds needs at least two entries");
  need(!experiment_backbones.empty(), "[train] experiment_backbones must not be empty");

  need(lambda >= 0.0, "[distill] lambda must be >= 0");
  need(!lambda_grid.empty(), "[distill] lambda_grid must not be empty");
  for (double l : lambda_grid) need(l > 0.0, "[distill] lambda_grid entries must be > 0");
  need(hsic.bandwidth != distill::BandwidthKind::kFixed || hsic.sigma > 0.0, "[distill] sigma must be > 0");

  need(policy.top_k >= 1, "[eval] top_k must be >= 1");
  need(!synthetic || policy.top_k <= synthetic_spec.n_stocks, "[eval] top_k exceeds n_stocks");
  need(policy.rebalance_every >= 1, "[eval] rebalance_every must be >= 1");
  need(!output_dir.empty(), "[output] dir must not be empty");

  if (!e.empty()) {
    std::string msg = "invalid config:";
    for (const auto& m : e) msg += "\n  " + m;
    throw ConfigError(msg);
  }
}

marketdata::SyntheticSpec RunConfig::effective_synthetic() const {
  marketdata::SyntheticSpec s = synthetic_spec;
  if (rotation_every > 0) {
    s.regime_schedule = marketdata::rotating_schedule(s.n_days, s.n_sectors, rotation_first_day, rotation_every,
                                                      rotation_magnitude, rotation_seed);
  }
  return s;
}

marketdata::WindowSpec RunConfig::window_spec() const { return {lookback, horizon, delta, window_stride}; }

teacher::TeacherConfig RunConfig::teacher_config() const {
  teacher::TeacherConfig t;
  t.st.spatial_kind = backbone;
  t.st.hidden_dim = hidden_dim;
  t.st.spatial_layers = spatial_layers;
  t.st.output_dim = fusion_dim;
  t.horizon = horizon;
  t.future_dim = future_dim;
  t.fusion_dim = fusion_dim;
  t.fusion = fusion;
  t.tau = tau;
  t.k_d = k_d;
  return t;
}

distill::StudentConfig RunConfig::student_config() const {
  distill::StudentConfig s;
  s.st = teacher_config().st;
  s.lambda = lambda;
  s.distill = distill;
  s.hsic = hsic;
  s.unfreeze_head = unfreeze_head;
  return s;
}

evalkit::ExperimentConfig RunConfig::experiment_config() const {
  evalkit::ExperimentConfig e;
  e.backbones = experiment_backbones;
  e.teacher = teacher_config();
  e.student = student_config();
  e.lambda_grid = lambda_grid;
  e.train = train;
  e.seeds = seeds;
  e.policy = policy;
  e.label_mode = label_mode;
  e.ablations = ablations;
  return e;
}

}  // namespace dishft::config
