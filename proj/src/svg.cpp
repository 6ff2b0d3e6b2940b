#include "rfq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace rfq {

namespace {

constexpr double kWidth = 720, kHeight = 460;
constexpr double kLeft = 80, kRight = 560, kTop = 50, kBottom = 400;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#8c564b", "#e377c2"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Series {
  std::string method;
  std::vector<double> n, mean, se;
};

}  // namespace

std::string render_metric_chart(const std::vector<SummaryRow>& rows,
                                const std::string& metric) {
  std::map<std::string, Series> by_method;
  for (const auto& row : rows) {
    if (row.metric_name != metric) continue;
    auto& s = by_method[row.method];
    s.method = row.method;
    s.n.push_back(row.n);
    s.mean.push_back(row.mean);
    s.se.push_back(row.standard_error);
  }
  if (by_method.empty()) throw UnknownMetric(metric);

  const bool log_x = metric == "q_mse";
  const auto tx = [log_x](double n) { return log_x ? std::log10(n) : n; };

  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& [name, s] : by_method) {
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      x_lo = std::min(x_lo, tx(s.n[i]));
      x_hi = std::max(x_hi, tx(s.n[i]));
      y_lo = std::min(y_lo, s.mean[i] - s.se[i]);
      y_hi = std::max(y_hi, s.mean[i] + s.se[i]);
    }
  }
  if (x_hi <= x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  const double y_pad = y_hi > y_lo ? 0.05 * (y_hi - y_lo) : 1.0;
  y_lo -= y_pad;
  y_hi += y_pad;

  const auto px = [&](double n) {
    return kLeft + (tx(n) - x_lo) / (x_hi - x_lo) * (kRight - kLeft);
  };
  const auto py = [&](double v) {
    return kBottom - (v - y_lo) / (y_hi - y_lo) * (kBottom - kTop);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"28\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << metric << " vs sample size</text>\n";

  // axes
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kBottom)
      << "\" x2=\"" << num(kRight) << "\" y2=\"" << num(kBottom)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(kBottom) << "\" stroke=\"black\"/>\n";

  // x ticks at the data points
  std::vector<double> xticks;
  for (const auto& [name, s] : by_method)
    for (double n : s.n)
      if (std::find(xticks.begin(), xticks.end(), n) == xticks.end())
        xticks.push_back(n);
  std::sort(xticks.begin(), xticks.end());
  for (double n : xticks) {
    const double x = px(n);
    svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(kBottom) << "\" x2=\""
        << num(x) << "\" y2=\"" << num(kBottom + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(kBottom + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << label(n) << "</text>\n";
  }
  // y ticks
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + k * (y_hi - y_lo) / 4.0;
    const double y = py(v);
    svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(y)
        << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(y)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(kLeft - 9) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << label(v) << "</text>\n";
  }
  // axis labels
  svg << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\""
      << num(kBottom + 42)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">n (trajectories"
      << (log_x ? ", log scale" : "") << ")</text>\n";
  svg << "<text x=\"20\" y=\"" << num((kTop + kBottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 20 "
      << num((kTop + kBottom) / 2) << ")\">" << metric << "</text>\n";

  int idx = 0;
  for (const auto& [name, s] : by_method) {
    const char* color = kPalette[idx % 6];
    // +/-1 SE band
    svg << "<polygon fill=\"" << color
        << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.n.size(); ++i)
      svg << num(px(s.n[i])) << ',' << num(py(s.mean[i] + s.se[i])) << ' ';
    for (std::size_t i = s.n.size(); i-- > 0;)
      svg << num(px(s.n[i])) << ',' << num(py(s.mean[i] - s.se[i]))
          << (i ? " " : "");
    svg << "\"/>\n";
    // mean line and markers
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.n.size(); ++i)
      svg << num(px(s.n[i])) << ',' << num(py(s.mean[i]))
          << (i + 1 < s.n.size() ? " " : "");
    svg << "\"/>\n";
    for (std::size_t i = 0; i < s.n.size(); ++i)
      svg << "<circle cx=\"" << num(px(s.n[i])) << "\" cy=\""
          << num(py(s.mean[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    // legend entry
    const double ly = kTop + 18 + 22 * idx;
    svg << "<line x1=\"" << num(kRight + 14) << "\" y1=\"" << num(ly)
        << "\" x2=\"" << num(kRight + 38) << "\" y2=\"" << num(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(kRight + 44) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << name
        << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::filesystem::path plot(const std::filesystem::path& summary_csv,
                           const std::string& metric,
                           const std::filesystem::path& out_svg) {
  const auto rows = read_summary_csv(summary_csv);
  const std::string svg = render_metric_chart(rows, metric);
  std::ofstream out(out_svg, std::ios::binary);
  if (!out) throw InvalidConfig("cannot write '" + out_svg.string() + "'");
  out << svg;
  return out_svg;
}

}  // namespace rfq
