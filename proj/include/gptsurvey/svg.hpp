#pragma once

// Minimal SVG emission for the report figures. Plots are a thin layer over
// the data tables; nothing downstream parses these files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace gptsurvey::svg {

struct Line {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;  // x ascending
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline void line_chart(const std::string& path, const std::vector<Line>& lines,
                       const std::string& title) {
  const double W = 900, H = 420, ml = 60, mr = 20, mt = 40, mb = 30;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& l : lines)
    for (const auto& [x, y] : l.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (ymin == ymax) { ymin -= 1; ymax += 1; }
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "'>\n";
  out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' "
      << "font-family='sans-serif' font-size='15'>" << title << "</text>\n";
  out << "<rect x='" << ml << "' y='" << mt << "' width='" << W - ml - mr
      << "' height='" << H - mt - mb
      << "' fill='none' stroke='#999'/>\n";
  if (ymin < 0 && ymax > 0)
    out << "<line x1='" << ml << "' y1='" << detail::num(py(0)) << "' x2='"
        << W - mr << "' y2='" << detail::num(py(0))
        << "' stroke='#ccc' stroke-dasharray='4'/>\n";
  int li = 0;
  for (const auto& l : lines) {
    out << "<polyline fill='none' stroke='" << l.color
        << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : l.points)
      out << detail::num(px(x)) << "," << detail::num(py(y)) << " ";
    out << "'/>\n";
    out << "<text x='" << ml + 8 << "' y='" << mt + 16 + 16 * li
        << "' font-family='sans-serif' font-size='12' fill='" << l.color
        << "'>" << l.label << "</text>\n";
    ++li;
  }
  out << "</svg>\n";
}

inline void bar_chart(const std::string& path,
                      const std::vector<std::string>& labels,
                      const std::vector<double>& values,
                      const std::string& title) {
  const double W = 900, bar_h = 22, ml = 240, mr = 30, mt = 40;
  const double H = mt + bar_h * labels.size() + 20;
  double vmax = 1e-9;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  const double x0 = ml + (W - ml - mr) / 2;
  auto len = [&](double v) { return v / vmax * (W - ml - mr) / 2; };

  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "'>\n";
  out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' "
      << "font-family='sans-serif' font-size='15'>" << title << "</text>\n";
  out << "<line x1='" << x0 << "' y1='" << mt << "' x2='" << x0 << "' y2='"
      << H - 10 << "' stroke='#999'/>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = mt + bar_h * i;
    const double v = values[i];
    const double w = len(std::abs(v));
    out << "<rect x='" << detail::num(v >= 0 ? x0 : x0 - w) << "' y='"
        << detail::num(y + 3) << "' width='" << detail::num(w) << "' height='"
        << bar_h - 6 << "' fill='" << (v >= 0 ? "#2b6cb0" : "#b03030")
        << "'/>\n";
    out << "<text x='" << ml - 6 << "' y='" << detail::num(y + bar_h - 7)
        << "' text-anchor='end' font-family='sans-serif' font-size='12'>"
        << labels[i] << "</text>\n";
    out << "<text x='" << detail::num(v >= 0 ? x0 + w + 4 : x0 - w - 34)
        << "' y='" << detail::num(y + bar_h - 7)
        << "' font-family='sans-serif' font-size='11'>" << detail::num(v)
        << "</text>\n";
  }
  out << "</svg>\n";
}

inline void heatmap(const std::string& path,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const std::vector<std::vector<std::optional<double>>>& m,
                    const std::string& title) {
  const double cell = 34, ml = 90, mt = 70;
  const double W = ml + cell * col_labels.size() + 20;
  const double H = mt + cell * row_labels.size() + 20;
  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
      << "' height='" << H << "'>\n";
  out << "<text x='" << W / 2 << "' y='20' text-anchor='middle' "
      << "font-family='sans-serif' font-size='15'>" << title << "</text>\n";
  for (std::size_t c = 0; c < col_labels.size(); ++c)
    out << "<text x='" << ml + cell * c + cell / 2 << "' y='" << mt - 8
        << "' text-anchor='middle' font-family='sans-serif' font-size='10'>"
        << col_labels[c] << "</text>\n";
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out << "<text x='" << ml - 6 << "' y='" << mt + cell * r + cell / 2 + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='10'>"
        << row_labels[r] << "</text>\n";
    for (std::size_t c = 0; c < col_labels.size(); ++c) {
      const auto& v = m[r][c];
      std::string fill = "#eee";
      if (v) {
        const int shade =
            static_cast<int>(255 - std::min(1.0, std::abs(*v)) * 200);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "#%02x%02xff", shade, shade);
        fill = buf;
      }
      out << "<rect x='" << ml + cell * c << "' y='" << mt + cell * r
          << "' width='" << cell << "' height='" << cell << "' fill='" << fill
          << "' stroke='#fff'/>\n";
      if (v)
        out << "<text x='" << ml + cell * c + cell / 2 << "' y='"
            << mt + cell * r + cell / 2 + 4
            << "' text-anchor='middle' font-family='sans-serif' "
               "font-size='9'>"
            << detail::num(*v) << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace gptsurvey::svg
