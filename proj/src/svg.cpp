#include "duraflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "duraflow/csv.hpp"

namespace duraflow::svg {
namespace {

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string open(double width, double height, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << num(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
  return s.str();
}

}  // namespace

std::string bar_chart(std::span<const std::string> labels, std::span<const double> values, const std::string& title) {
  const double label_w = 170, bar_w = 420, row_h = 18, top = 32;
  const double height = top + row_h * static_cast<double>(labels.size()) + 16;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  std::ostringstream s;
  s << open(label_w + bar_w + 90, height, title);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = top + row_h * static_cast<double>(i);
    const double w = vmax > 0.0 ? bar_w * std::abs(values[i]) / vmax : 0.0;
    s << "<text x=\"" << num(label_w - 6) << "\" y=\"" << num(y + 12) << "\" text-anchor=\"end\">"
      << escape(labels[i]) << "</text>\n";
    s << "<rect x=\"" << num(label_w) << "\" y=\"" << num(y + 2) << "\" width=\"" << num(w) << "\" height=\""
      << num(row_h - 4) << "\" fill=\"#1f77b4\"/>\n";
    s << "<text x=\"" << num(label_w + w + 4) << "\" y=\"" << num(y + 12) << "\">" << csv::format_double(values[i])
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string boxplot(const FiveNumber& f, const std::string& title) {
  const double width = 360, height = 420, top = 40, bottom = 380, cx = 180;
  const double span = f.max - f.min;
  auto y = [&](double v) { return span > 0.0 ? bottom - (v - f.min) / span * (bottom - top) : (top + bottom) / 2; };
  std::ostringstream s;
  s << open(width, height, title);
  s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(f.max)) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(f.q3))
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(f.q1)) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(f.min))
    << "\" stroke=\"black\"/>\n";
  s << "<rect x=\"" << num(cx - 50) << "\" y=\"" << num(y(f.q3)) << "\" width=\"100\" height=\""
    << num(y(f.q1) - y(f.q3)) << "\" fill=\"#aec7e8\" stroke=\"black\"/>\n";
  const std::pair<const char*, double> marks[] = {
      {"max", f.max}, {"q3", f.q3}, {"median", f.median}, {"q1", f.q1}, {"min", f.min}};
  for (const auto& [name, v] : marks) {
    s << "<line x1=\"" << num(cx - 50) << "\" y1=\"" << num(y(v)) << "\" x2=\"" << num(cx + 50) << "\" y2=\""
      << num(y(v)) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(cx + 58) << "\" y=\"" << num(y(v) + 4) << "\">" << name << ' ' << csv::format_double(v)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string heatmap(const CorrelationMatrix& m, const std::string& title) {
  const double cell = 18, left = 170, top = 170;
  const double size = static_cast<double>(m.size());
  std::ostringstream s;
  s << open(left + cell * size + 20, top + cell * size + 20, title);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double pos = cell * static_cast<double>(i);
    s << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + pos + 13) << "\" text-anchor=\"end\">"
      << escape(m.names[i]) << "</text>\n";
    s << "<text transform=\"translate(" << num(left + pos + 13) << ',' << num(top - 4)
      << ") rotate(-90)\">" << escape(m.names[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double r = m.at(i, j);
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(r))));
      char color[16];
      if (r >= 0) {
        std::snprintf(color, sizeof color, "#%02x%02xff", shade, shade);
      } else {
        std::snprintf(color, sizeof color, "#ff%02x%02x", shade, shade);
      }
      s << "<rect x=\"" << num(left + cell * static_cast<double>(j)) << "\" y=\"" << num(top + cell * static_cast<double>(i))
        << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << color
        << "\"><title>" << escape(m.names[i]) << " / " << escape(m.names[j]) << ": " << csv::format_double(r)
        << "</title></rect>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string series_plot(std::span<const SeriesPoint> series, const std::string& title) {
  const double width = 720, height = 360, left = 50, right = 20, top = 32, bottom = 40;
  double vmax = 1.0;
  for (const auto& p : series) vmax = std::max({vmax, p.actual, p.predicted});
  const double n = static_cast<double>(std::max<std::size_t>(series.size(), 2) - 1);
  auto x = [&](std::size_t i) { return left + (width - left - right) * static_cast<double>(i) / n; };
  auto y = [&](double v) { return height - bottom - (height - top - bottom) * std::max(v, 0.0) / vmax; };
  auto polyline = [&](bool actual, const char* color) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < series.size(); ++i) {
      s << (i ? " " : "") << num(x(i)) << ',' << num(y(actual ? series[i].actual : series[i].predicted));
    }
    s << "\"/>\n";
    return s.str();
  };
  std::ostringstream s;
  s << open(width, height, title);
  s << "<line x1=\"" << num(left) << "\" y1=\"" << num(height - bottom) << "\" x2=\"" << num(width - right)
    << "\" y2=\"" << num(height - bottom) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
    << num(height - bottom) << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + 4) << "\" text-anchor=\"end\">"
    << csv::format_double(std::round(vmax)) << "</text>\n";
  s << polyline(true, "#1f77b4") << polyline(false, "#ff7f0e");
  s << "<text x=\"" << num(width - right) << "\" y=\"" << num(height - 12)
    << "\" text-anchor=\"end\"><tspan fill=\"#1f77b4\">actual</tspan> <tspan fill=\"#ff7f0e\">predicted</tspan></text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace duraflow::svg
