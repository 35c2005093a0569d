#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace duraflow {

// Population standard deviation.
struct SummaryStats {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

SummaryStats summary_stats(std::span<const double> values);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

FiveNumber five_number(std::span<const double> values);

// Pearson r over named columns of equal length. Pairs involving a constant
// column are reported as 0 and the column is flagged.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> r;  // row-major, size() x size()
  std::vector<bool> constant;

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return r[i * names.size() + j]; }
};

CorrelationMatrix correlation_matrix(const std::vector<std::vector<double>>& columns,
                                     std::vector<std::string> names);

struct SeriesPoint {
  std::size_t index = 0;
  double actual = 0.0;
  double predicted = 0.0;
  int branch = -1;  // -1 when not routed
};

// The first min(n, first_n) pairs, in input order.
std::vector<SeriesPoint> prediction_series(std::span<const double> actual,
                                           std::span<const double> predicted,
                                           std::span<const int> branch = {},
                                           std::size_t first_n = 100);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

inline constexpr std::size_t kHistogramBins = 64;

// Equal-width bins over [min, max]; the maximum lands in the last bin.
Histogram histogram(std::span<const double> values, std::size_t bins = kHistogramBins);

void write_summary_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, SummaryStats>>& rows);
void write_five_number_csv(std::ostream& out, const FiveNumber& five);
void write_correlation_csv(std::ostream& out, const CorrelationMatrix& matrix);
void write_series_csv(std::ostream& out, std::span<const SeriesPoint> series);
void write_histogram_csv(std::ostream& out, const Histogram& hist);

}  // namespace duraflow
