// SPDX-License-Identifier: Apache-2.0
#include "dishft/marketdata/panel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dishft/error.hpp"

namespace dishft::marketdata {

namespace {

constexpr const char* kPriceHeader = "symbol,date,open,high,low,close,volume";
constexpr const char* kRelationHeader = "symbol,industry";

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double parse_number(const std::string& field, const char* column, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(std::string("invalid ") + column + " value '" + field + "'", line);
  }
}

std::ifstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  if (trim(first) != header) {
    throw ParseError(path.string() + ": expected header '" + header + "'", 1);
  }
  return in;
}

std::string format10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void StockPanel::validate() const {
  if (symbols.size() < 2) throw DataError("panel needs at least 2 stocks, has " + std::to_string(symbols.size()));
  if (indicators.rank() != 3 || indicators.dim(0) != symbols.size() || indicators.dim(1) != dates.size()) {
    throw DataError("panel indicator tensor " + ndgrad::to_string(indicators.shape()) +
                    " does not match " + std::to_string(symbols.size()) + " stocks x " +
                    std::to_string(dates.size()) + " days");
  }
  if (indicators.dim(2) < 1 || close_column >= indicators.dim(2)) {
    throw DataError("panel has no close-price column");
  }
  for (std::size_t n = 0; n < n_stocks(); ++n) {
    for (std::size_t d = 0; d < n_days(); ++d) {
      if (!(close(n, d) > 0.0)) {
        throw DataError("non-positive close for " + symbols[n] + " on " + dates[d]);
      }
    }
  }
}

StockPanel load_panel(const std::filesystem::path& prices_csv,
                      const std::filesystem::path& relations_csv) {
  using Row = std::array<double, kPriceColumns>;
  std::map<std::string, std::map<std::string, Row>> by_symbol;
  std::set<std::string> all_dates;

  {
    std::ifstream in = open_csv(prices_csv, kPriceHeader);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv(line);
      if (fields.size() != 7) {
        throw ParseError("expected 7 fields, found " + std::to_string(fields.size()), line_no);
      }
      if (fields[0].empty()) throw ParseError("empty symbol", line_no);
      if (!is_iso_date(fields[1])) throw ParseError("invalid ISO-8601 date '" + fields[1] + "'", line_no);
      static constexpr const char* kNames[] = {"open", "high", "low", "close", "volume"};
      Row row{};
      for (std::size_t c = 0; c < kPriceColumns; ++c) row[c] = parse_number(fields[c + 2], kNames[c], line_no);
      if (!(row[kClose] > 0.0)) {
        throw DataError("non-positive close price " + fields[5] + " for " + fields[0] + " (line " +
                        std::to_string(line_no) + ")");
      }
      auto [it, inserted] = by_symbol[fields[0]].emplace(fields[1], row);
      if (!inserted) throw ParseError("duplicate row for " + fields[0] + " on " + fields[1], line_no);
      all_dates.insert(fields[1]);
    }
  }

  StockPanel panel;
  panel.dates.assign(all_dates.begin(), all_dates.end());
  for (const auto& [symbol, rows] : by_symbol) {
    if (rows.size() == all_dates.size()) panel.symbols.push_back(symbol);
  }
  if (panel.symbols.size() < 2) {
    throw DataError("insufficient data: " + std::to_string(panel.symbols.size()) +
                    " stock(s) with complete date coverage, need at least 2");
  }

  const std::size_t n = panel.symbols.size();
  const std::size_t days = panel.dates.size();
  panel.indicators = ndgrad::Tensor({n, days, kPriceColumns});
  for (std::size_t s = 0; s < n; ++s) {
    const auto& rows = by_symbol.at(panel.symbols[s]);
    std::size_t d = 0;
    for (const auto& [date, row] : rows) {
      for (std::size_t c = 0; c < kPriceColumns; ++c) panel.indicators.at(s, d, c) = row[c];
      ++d;
    }
  }

  {
    std::ifstream in = open_csv(relations_csv, kRelationHeader);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv(line);
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        throw ParseError("expected 'symbol,industry'", line_no);
      }
      if (by_symbol.contains(fields[0]) &&
          std::binary_search(panel.symbols.begin(), panel.symbols.end(), fields[0])) {
        panel.industry[fields[0]] = fields[1];
      }
    }
  }
  panel.validate();
  return panel;
}

void export_panel(const StockPanel& panel, const std::filesystem::path& prices_csv) {
  std::ofstream out(prices_csv, std::ios::trunc);
  if (!out) throw IoError("cannot write " + prices_csv.string());
  out << kPriceHeader << '\n';
  for (std::size_t s = 0; s < panel.n_stocks(); ++s) {
    for (std::size_t d = 0; d < panel.n_days(); ++d) {
      out << panel.symbols[s] << ',' << panel.dates[d];
      for (std::size_t c = 0; c < kPriceColumns; ++c) out << ',' << format10(panel.indicators.at(s, d, c));
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + prices_csv.string());
}

void export_relations(const StockPanel& panel, const std::filesystem::path& relations_csv) {
  std::ofstream out(relations_csv, std::ios::trunc);
  if (!out) throw IoError("cannot write " + relations_csv.string());
  out << kRelationHeader << '\n';
  for (const auto& symbol : panel.symbols) {
    auto it = panel.industry.find(symbol);
    if (it != panel.industry.end()) out << symbol << ',' << it->second << '\n';
  }
}

RelationMatrix build_relation(const StockPanel& panel) {
  const std::size_t n = panel.n_stocks();
  std::vector<const std::string*> tags(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = panel.industry.find(panel.symbols[i]);
    if (it == panel.industry.end()) throw DataError("missing industry tag for symbol " + panel.symbols[i]);
    tags[i] = &it->second;
  }
  ndgrad::Tensor a({n, n});
  std::vector<double> degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a.at(i, j) = (i == j || *tags[i] == *tags[j]) ? 1.0 : 0.0;
      degree[i] += a.at(i, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a.at(i, j) /= std::sqrt(degree[i] * degree[j]);
  }
  return {std::move(a), RelationKind::kIndustryBinary};
}

RelationMatrix identity_relation(std::size_t n_stocks) {
  ndgrad::Tensor a({n_stocks, n_stocks});
  for (std::size_t i = 0; i < n_stocks; ++i) a.at(i, i) = 1.0;
  return {std::move(a), RelationKind::kIdentity};
}

}  // namespace dishft::marketdata
