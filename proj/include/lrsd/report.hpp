// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Trace serialization: CSV emission with round-trip-exact floats and a small
// hand-rolled SVG line chart (log-scale y) for convergence plots. Output is
// deterministic byte for byte given equal inputs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lrsd/common.hpp"
#include "lrsd/solver.hpp"

namespace lrsd {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// max(0, (F - F*)/F*); monotone solvers never dip below their own extended
// reference, the clamp only guards cross-algorithm references.
inline double relative_error(double objective, double f_star) {
  return std::max(0.0, (objective - f_star) / f_star);
}

inline const char* kTraceCsvHeader =
    "iter,objective,rel_error,stationarity,gamma,elapsed_seconds";

namespace detail {

inline void append_trace_row(std::string& out, const IterationTrace& row, double f_star,
                             const std::string& prefix) {
  out += prefix;
  out += std::to_string(row.iter);
  out += ',';
  out += format_double(row.objective);
  out += ',';
  out += format_double(relative_error(row.objective, f_star));
  out += ',';
  out += format_double(row.stationarity);
  out += ',';
  out += format_double(row.gamma);
  out += ',';
  out += format_double(row.elapsed_seconds);
  out += '\n';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ParseError("write failed for " + path.string());
}

}  // namespace detail

// One run per file: comment line with run metadata, pinned column header,
// one row per trace entry. Budget-0 runs produce a header-only file.
inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<IterationTrace>& trace, double f_star,
                            const std::string& meta_comment) {
  std::string out = "# lrsd-trace-v1";
  if (!meta_comment.empty()) {
    out += ' ';
    out += meta_comment;
  }
  out += " fstar=";
  out += format_double(f_star);
  out += '\n';
  out += kTraceCsvHeader;
  out += '\n';
  for (const IterationTrace& row : trace) detail::append_trace_row(out, row, f_star, "");
  detail::write_text_file(path, out);
}

// All runs in one file with a leading algo column.
inline void write_compare_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::vector<IterationTrace>>>& runs,
    double f_star, const std::string& meta_comment) {
  std::string out = "# lrsd-compare-v1";
  if (!meta_comment.empty()) {
    out += ' ';
    out += meta_comment;
  }
  out += " fstar=";
  out += format_double(f_star);
  out += '\n';
  out += "algo,";
  out += kTraceCsvHeader;
  out += '\n';
  for (const auto& [name, trace] : runs)
    for (const IterationTrace& row : trace)
      detail::append_trace_row(out, row, f_star, name + ",");
  detail::write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// SVG chart
// ---------------------------------------------------------------------------

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y), y plotted on log10
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string fmtg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace detail

// Log-y polyline chart. Values below the floor (default 1e-16) are clamped
// so exact zeros stay plottable.
inline void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<ChartSeries>& series, const std::string& footer,
                            double y_floor = 1e-16) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  const double width = 860, height = 560;
  const double ml = 90, mr = 30, mt = 50, mb = 70;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 0, xmax = 1, lymin = 0, lymax = 1;
  bool any = false;
  for (const ChartSeries& s : series)
    for (const auto& [x, y] : s.points) {
      const double ly = std::log10(std::max(y, y_floor));
      if (!any) {
        xmin = xmax = x;
        lymin = lymax = ly;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        lymin = std::min(lymin, ly);
        lymax = std::max(lymax, ly);
      }
    }
  if (!any) {
    xmin = 0;
    xmax = 1;
    lymin = -1;
    lymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  lymin = std::floor(lymin);
  lymax = std::ceil(lymax);
  if (lymax == lymin) lymax = lymin + 1;

  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) {
    const double ly = std::log10(std::max(y, y_floor));
    return mt + (lymax - ly) / (lymax - lymin) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmtg(width) +
         "\" height=\"" + detail::fmtg(height) + "\" viewBox=\"0 0 " + detail::fmtg(width) +
         " " + detail::fmtg(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + detail::fmt2(width / 2) + "\" y=\"28\" font-family=\"sans-serif\" "
         "font-size=\"17\" text-anchor=\"middle\">" + title + "</text>\n";

  // Axes
  svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt + ph) + "\" x2=\"" +
         detail::fmt2(ml + pw) + "\" y2=\"" + detail::fmt2(mt + ph) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(mt) + "\" x2=\"" +
         detail::fmt2(ml) + "\" y2=\"" + detail::fmt2(mt + ph) + "\" stroke=\"black\"/>\n";

  // X ticks
  for (int t = 0; t <= 5; ++t) {
    const double x = xmin + (xmax - xmin) * t / 5.0;
    const double gx = px(x);
    svg += "<line x1=\"" + detail::fmt2(gx) + "\" y1=\"" + detail::fmt2(mt + ph) + "\" x2=\"" +
           detail::fmt2(gx) + "\" y2=\"" + detail::fmt2(mt + ph + 5) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt2(gx) + "\" y=\"" + detail::fmt2(mt + ph + 20) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           detail::fmtg(x) + "</text>\n";
  }
  svg += "<text x=\"" + detail::fmt2(ml + pw / 2) + "\" y=\"" + detail::fmt2(height - 22) +
         "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" + x_label +
         "</text>\n";

  // Y ticks at integer decades (thinned to at most 12 labels)
  const int decades = static_cast<int>(lymax - lymin);
  const int step = std::max(1, (decades + 11) / 12);
  for (int e = static_cast<int>(lymin); e <= static_cast<int>(lymax); e += step) {
    const double gy = mt + (lymax - e) / (lymax - lymin) * ph;
    svg += "<line x1=\"" + detail::fmt2(ml - 5) + "\" y1=\"" + detail::fmt2(gy) + "\" x2=\"" +
           detail::fmt2(ml) + "\" y2=\"" + detail::fmt2(gy) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt2(ml) + "\" y1=\"" + detail::fmt2(gy) + "\" x2=\"" +
           detail::fmt2(ml + pw) + "\" y2=\"" + detail::fmt2(gy) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + detail::fmt2(ml - 9) + "\" y=\"" + detail::fmt2(gy + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">1e" +
           std::to_string(e) + "</text>\n";
  }
  svg += "<text x=\"20\" y=\"" + detail::fmt2(mt + ph / 2) +
         "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 " + detail::fmt2(mt + ph / 2) + ")\">" + y_label +
         "</text>\n";

  // Series
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (const auto& [x, y] : series[si].points) {
      if (!pts.empty()) pts += ' ';
      pts += detail::fmt2(px(x)) + "," + detail::fmt2(py(y));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.6\" points=\"" + pts + "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(si);
    svg += "<line x1=\"" + detail::fmt2(ml + pw - 150) + "\" y1=\"" + detail::fmt2(ly - 4) +
           "\" x2=\"" + detail::fmt2(ml + pw - 120) + "\" y2=\"" + detail::fmt2(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.6\"/>\n";
    svg += "<text x=\"" + detail::fmt2(ml + pw - 112) + "\" y=\"" + detail::fmt2(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[si].name + "</text>\n";
  }

  if (!footer.empty())
    svg += "<text x=\"" + detail::fmt2(ml) + "\" y=\"" + detail::fmt2(height - 6) +
           "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#555555\">" + footer +
           "</text>\n";
  svg += "</svg>\n";
  detail::write_text_file(path, svg);
}

}  // namespace lrsd
