#include "duraflow/metrics.hpp"

#include <cmath>

#include "duraflow/error.hpp"

namespace duraflow {
namespace {

void check_pairs(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.empty()) throw Error(ErrorCode::EmptyInput, "no prediction pairs");
  if (actual.size() != predicted.size()) {
    throw Error(ErrorCode::EmptyInput, "actual has " + std::to_string(actual.size()) + " values, predicted has " +
                                           std::to_string(predicted.size()));
  }
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

ClassScores scores_for(double tp, double fp, double fn, std::size_t support) {
  ClassScores s;
  s.precision = safe_ratio(tp, tp + fp);
  s.recall = safe_ratio(tp, tp + fn);
  s.f1 = safe_ratio(2.0 * s.precision * s.recall, s.precision + s.recall);
  s.support = support;
  return s;
}

}  // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
  check_pairs(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_pairs(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

double relative_error(std::span<const double> actual, std::span<const double> predicted) {
  check_pairs(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw Error(ErrorCode::ZeroActual, "actual value is 0 at index " + std::to_string(i));
    s += std::abs(actual[i] - predicted[i]) / actual[i];
  }
  return s / static_cast<double>(actual.size());
}

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "no labels");
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::EmptyInput, "truth has " + std::to_string(truth.size()) + " labels, predicted has " +
                                           std::to_string(predicted.size()));
  }
  ClassificationReport r;
  auto& c = r.confusion;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw Error(ErrorCode::InvalidArgument, "label outside {0, 1} at index " + std::to_string(i));
    }
    if (t == 1) {
      p == 1 ? ++c.tp : ++c.fn;
    } else {
      p == 1 ? ++c.fp : ++c.tn;
    }
  }
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double n = static_cast<double>(c.total());
  r.accuracy = (tp + tn) / n;
  r.per_class[1] = scores_for(tp, fp, fn, c.tp + c.fn);
  r.per_class[0] = scores_for(tn, fn, fp, c.tn + c.fp);

  r.macro.support = c.total();
  r.weighted.support = c.total();
  for (const auto& s : r.per_class) {
    r.macro.precision += s.precision / 2.0;
    r.macro.recall += s.recall / 2.0;
    r.macro.f1 += s.f1 / 2.0;
    const double w = static_cast<double>(s.support) / n;
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
  }
  return r;
}

}  // namespace duraflow
