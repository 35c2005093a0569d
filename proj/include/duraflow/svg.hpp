#pragma once

#include <span>
#include <string>
#include <vector>

#include "duraflow/stats_report.hpp"

namespace duraflow::svg {

// Horizontal bars, drawn top to bottom in the given order.
std::string bar_chart(std::span<const std::string> labels, std::span<const double> values,
                      const std::string& title);

std::string boxplot(const FiveNumber& five, const std::string& title);

std::string heatmap(const CorrelationMatrix& matrix, const std::string& title);

// Actual vs predicted lines over the series index.
std::string series_plot(std::span<const SeriesPoint> series, const std::string& title);

}  // namespace duraflow::svg
