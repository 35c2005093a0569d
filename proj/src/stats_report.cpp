#include "duraflow/stats_report.hpp"

#include <algorithm>
#include <cmath>

#include "duraflow/csv.hpp"
#include "duraflow/error.hpp"
#include "duraflow/quantile.hpp"

namespace duraflow {

using csv::format_double;

SummaryStats summary_stats(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "summary of an empty column");
  SummaryStats s;
  s.count = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = std::clamp(sum / static_cast<double>(s.count), s.min, s.max);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

FiveNumber five_number(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "five-number summary of an empty column");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {sorted.front(), quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.5), quantile_sorted(sorted, 0.75),
          sorted.back()};
}

CorrelationMatrix correlation_matrix(const std::vector<std::vector<double>>& columns, std::vector<std::string> names) {
  if (columns.size() != names.size()) {
    throw Error(ErrorCode::InvalidArgument, "correlation needs one name per column");
  }
  const std::size_t k = columns.size();
  const std::size_t n = k ? columns[0].size() : 0;
  for (const auto& c : columns) {
    if (c.size() != n) throw Error(ErrorCode::InvalidArgument, "correlation columns differ in length");
  }
  if (k && n < 2) throw Error(ErrorCode::TooFewRows, "correlation needs at least 2 rows");

  CorrelationMatrix m;
  m.names = std::move(names);
  m.r.assign(k * k, 0.0);
  m.constant.assign(k, false);
  std::vector<std::vector<double>> centered(k, std::vector<double>(n));
  std::vector<double> norm(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    const auto& c = columns[a];
    m.constant[a] = std::all_of(c.begin(), c.end(), [&](double v) { return v == c[0]; });
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      centered[a][i] = c[i] - mean;
      norm[a] += centered[a][i] * centered[a][i];
    }
    norm[a] = std::sqrt(norm[a]);
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (m.constant[a]) continue;
    m.r[a * k + a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      if (m.constant[b]) continue;
      double cov = 0.0;
      for (std::size_t i = 0; i < n; ++i) cov += centered[a][i] * centered[b][i];
      const double r = std::clamp(cov / (norm[a] * norm[b]), -1.0, 1.0);
      m.r[a * k + b] = r;
      m.r[b * k + a] = r;
    }
  }
  return m;
}

std::vector<SeriesPoint> prediction_series(std::span<const double> actual, std::span<const double> predicted,
                                           std::span<const int> branch, std::size_t first_n) {
  if (actual.size() != predicted.size() || (!branch.empty() && branch.size() != actual.size())) {
    throw Error(ErrorCode::InvalidArgument, "series inputs differ in length");
  }
  const std::size_t n = std::min(actual.size(), first_n);
  std::vector<SeriesPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {i, actual[i], predicted[i], branch.empty() ? -1 : branch[i]};
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "histogram of an empty column");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  Histogram h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.hi = *hi;
  h.counts.assign(bins, 0);
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - h.lo) / width) : 0;
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

void write_summary_csv(std::ostream& out, const std::vector<std::pair<std::string, SummaryStats>>& rows) {
  csv::write_row(out, {"column", "count", "max", "min", "mean", "std"});
  for (const auto& [name, s] : rows) {
    csv::write_row(out, {name, std::to_string(s.count), format_double(s.max), format_double(s.min),
                         format_double(s.mean), format_double(s.std)});
  }
}

void write_five_number_csv(std::ostream& out, const FiveNumber& f) {
  csv::write_row(out, {"min", "q1", "median", "q3", "max"});
  csv::write_row(out, {format_double(f.min), format_double(f.q1), format_double(f.median), format_double(f.q3),
                       format_double(f.max)});
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  std::vector<std::string> header{"feature"};
  header.insert(header.end(), m.names.begin(), m.names.end());
  header.push_back("constant");
  csv::write_row(out, header);
  for (std::size_t a = 0; a < m.size(); ++a) {
    std::vector<std::string> row{m.names[a]};
    for (std::size_t b = 0; b < m.size(); ++b) row.push_back(format_double(m.at(a, b)));
    row.push_back(m.constant[a] ? "1" : "0");
    csv::write_row(out, row);
  }
}

void write_series_csv(std::ostream& out, std::span<const SeriesPoint> series) {
  csv::write_row(out, {"index", "actual_minutes", "predicted_minutes", "branch"});
  for (const auto& p : series) {
    csv::write_row(out, {std::to_string(p.index), format_double(p.actual), format_double(p.predicted),
                         p.branch == 1 ? "short" : p.branch == 0 ? "long" : ""});
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  csv::write_row(out, {"bin", "lower", "upper", "count"});
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lower = h.lo + width * static_cast<double>(b);
    const double upper = b + 1 == h.counts.size() ? h.hi : h.lo + width * static_cast<double>(b + 1);
    csv::write_row(out, {std::to_string(b), format_double(lower), format_double(upper), std::to_string(h.counts[b])});
  }
}

}  // namespace duraflow
