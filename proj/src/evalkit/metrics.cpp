// SPDX-License-Identifier: Apache-2.0
#include "dishft/evalkit/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "dishft/error.hpp"

namespace dishft::evalkit {

Confusion confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) {
    throw ShapeError("metrics: " + std::to_string(pred.size()) + " predictions for " + std::to_string(truth.size()) +
                     " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(const Confusion& c) {
  if (c.total() == 0) throw RangeError("accuracy of an empty decision set");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double accuracy(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  return accuracy(confusion(pred, truth));
}

double mcc(const Confusion& c) {
  const double tp = c.tp, fp = c.fp, tn = c.tn, fn = c.fn;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom);
}

double mcc(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
  return mcc(confusion(pred, truth));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw RangeError("mean of an empty list");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

TTestResult ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw RangeError("ttest needs at least 2 values per group");
  const double na = a.size(), nb = b.size();
  const double va = std::pow(stddev(a), 2) / na;
  const double vb = std::pow(stddev(b), 2) / nb;
  const double diff = mean(a) - mean(b);
  TTestResult r;
  if (va + vb == 0.0) {
    if (diff == 0.0) return {0.0, na + nb - 2.0, 1.0};
    r.t_stat = diff > 0 ? INFINITY : -INFINITY;
    r.dof = na + nb - 2.0;
    r.p_value = diff > 0 ? 0.0 : 1.0;
    return r;
  }
  r.t_stat = diff / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.t_stat));
  return r;
}

}  // namespace dishft::evalkit
