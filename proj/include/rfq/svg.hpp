#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rfq/experiment.hpp"

namespace rfq {

/// Self-contained SVG line chart of one summary metric vs sample size: one
/// polyline per method with a shaded +/-1 SE band, axis labels and a legend.
/// The x axis is log-scaled for q_mse and linear otherwise. Output bytes are
/// a pure function of the input rows. Throws UnknownMetric when no row
/// matches.
std::string render_metric_chart(const std::vector<SummaryRow>& rows,
                                const std::string& metric);

/// Reads a summary CSV and writes the chart; returns out_svg.
std::filesystem::path plot(const std::filesystem::path& summary_csv,
                           const std::string& metric,
                           const std::filesystem::path& out_svg);

}  // namespace rfq
