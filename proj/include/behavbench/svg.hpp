#pragma once

// Minimal SVG bar chart for behaviour histograms.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "behavbench/distribution.hpp"
#include "behavbench/text.hpp"

namespace behavbench {

namespace detail {
inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    case '\'': out += "&apos;"; break;
    default: out += c;
    }
  }
  return out;
}
} // namespace detail

/// Bars of probability mass, grouped into at most ~25 equal-width bins.
inline std::string histogram_svg(const ActionDistribution& d, const std::string& title,
                                 const std::string& comment = {}) {
  const auto space = d.spec().action_space();
  const auto values = space.values();
  const auto dense = d.dense();
  const std::size_t width_bins =
      space.is_numeric() ? std::max<std::size_t>(1, (values.size() + 24) / 25) : 1;

  std::vector<std::string> labels;
  std::vector<double> mass;
  for (std::size_t i = 0; i < values.size(); i += width_bins) {
    const std::size_t end = std::min(values.size(), i + width_bins);
    double m = 0;
    for (std::size_t k = i; k < end; ++k) m += dense[k];
    mass.push_back(m);
    labels.push_back(width_bins == 1 ? space.label(values[i])
                                     : space.label(values[i]) + "-" + space.label(values[end - 1]));
  }

  const double w = 640, h = 320, left = 50, right = 10, top = 30, bottom = 60;
  const double plot_w = w - left - right, plot_h = h - top - bottom;
  const double top_mass = std::max(*std::max_element(mass.begin(), mass.end()), 1e-12);
  const double bar_w = plot_w / static_cast<double>(mass.size());

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  if (!comment.empty()) svg << "<!-- " << detail::xml_escape(comment) << " -->\n";
  svg << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << detail::xml_escape(title) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << left - 4 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">"
      << format_fixed(top_mass, 2) << "</text>\n";
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double bh = plot_h * mass[i] / top_mass;
    const double x = left + bar_w * static_cast<double>(i);
    svg << "<rect x=\"" << format_fixed(x + 1, 2) << "\" y=\"" << format_fixed(top + plot_h - bh, 2)
        << "\" width=\"" << format_fixed(std::max(bar_w - 2, 1.0), 2) << "\" height=\""
        << format_fixed(bh, 2) << "\" fill=\"#4878a8\"><title>" << detail::xml_escape(labels[i])
        << ": " << format_fixed(mass[i], 4) << "</title></rect>\n";
    const double cx = x + bar_w / 2, cy = top + plot_h + 12;
    svg << "<text x=\"" << format_fixed(cx, 2) << "\" y=\"" << cy << "\" text-anchor=\"end\" transform=\"rotate(-45 "
        << format_fixed(cx, 2) << ' ' << cy << ")\">" << detail::xml_escape(labels[i]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

} // namespace behavbench
