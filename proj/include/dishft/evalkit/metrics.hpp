// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dishft/marketdata/panel.hpp"

namespace dishft::evalkit {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);

double accuracy(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);
double accuracy(const Confusion& c);

// Any zero factor in the denominator gives 0.
double mcc(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth);
double mcc(const Confusion& c);

struct TTestResult {
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 1.0;  // one-sided, H1: mean(a) > mean(b)
};

// Welch two-sample t-test with Welch-Satterthwaite degrees of freedom.
TTestResult ttest(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);

}  // namespace dishft::evalkit
