#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "motionforge/skeleton.hpp"

namespace motionforge {

// One skeleton drawing every `every_n` frames, laid out left to right
// (x-y projection).
inline void write_pose_strip_svg(const std::string& path, const MotionClip& clip,
                                 const SkeletonSpec& skeleton,
                                 std::size_t every_n = 5) {
  if (every_n == 0) throw std::invalid_argument("pose strip: every_n must be >= 1");
  std::vector<std::size_t> picks;
  for (std::size_t t = 0; t < clip.frames.size(); t += every_n) picks.push_back(t);
  if (picks.empty()) throw std::invalid_argument("pose strip: empty clip");

  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (std::size_t t : picks)
    for (const auto& j : clip.frames[t].joints) {
      lo_x = std::min(lo_x, j[0]);
      hi_x = std::max(hi_x, j[0]);
      lo_y = std::min(lo_y, j[1]);
      hi_y = std::max(hi_y, j[1]);
    }
  const double span_x = std::max(hi_x - lo_x, 1e-6);
  const double span_y = std::max(hi_y - lo_y, 1e-6);
  const double cell_w = 60.0, cell_h = 120.0, pad = 8.0;
  const double sc = std::min((cell_w - 2 * pad) / span_x, (cell_h - 2 * pad) / span_y);
  const double width = cell_w * static_cast<double>(picks.size());

  std::ofstream os(path);
  if (!os) throw std::runtime_error("pose strip: cannot open '" + path + "'");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << cell_h << "\" viewBox=\"0 0 " << width << ' ' << cell_h
     << "\">\n";
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto& pose = clip.frames[picks[i]];
    const double ox = cell_w * static_cast<double>(i) + pad;
    auto px = [&](const std::array<double, 3>& j) { return ox + (j[0] - lo_x) * sc; };
    auto py = [&](const std::array<double, 3>& j) {
      return cell_h - pad - (j[1] - lo_y) * sc;  // y up
    };
    for (const auto& b : skeleton.bones)
      os << "<line x1=\"" << px(pose.joints[b.i]) << "\" y1=\""
         << py(pose.joints[b.i]) << "\" x2=\"" << px(pose.joints[b.j])
         << "\" y2=\"" << py(pose.joints[b.j])
         << "\" stroke=\"#335\" stroke-width=\"1\"/>\n";
  }
  os << "</svg>\n";
  if (!os) throw std::runtime_error("pose strip: write to '" + path + "' failed");
}

struct PlotSeries {
  std::string label;
  std::vector<double> values;  // plotted against index
};

inline void write_line_plot_svg(const std::string& path,
                                const std::vector<PlotSeries>& series,
                                const std::string& title = "") {
  if (series.empty()) throw std::invalid_argument("line plot: no series");
  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n < 2) throw std::invalid_argument("line plot: need at least 2 points");
  if (hi - lo < 1e-12) hi = lo + 1e-12;
  const double w = 480.0, h = 280.0, pad = 36.0;
  static const char* colors[] = {"#c33", "#36c", "#2a2", "#a3a", "#873", "#088"};

  std::ofstream os(path);
  if (!os) throw std::runtime_error("line plot: cannot open '" + path + "'");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
     << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  if (!title.empty())
    os << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" "
          "font-size=\"12\">" << title << "</text>\n";
  os << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << w - 2 * pad
     << "\" height=\"" << h - 2 * pad
     << "\" fill=\"none\" stroke=\"#999\"/>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.values.size() < 2) continue;
    os << "<polyline fill=\"none\" stroke=\"" << colors[si % 6]
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double x =
          pad + (w - 2 * pad) * static_cast<double>(i) /
                    static_cast<double>(s.values.size() - 1);
      const double y = h - pad - (h - 2 * pad) * (s.values[i] - lo) / (hi - lo);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << w - pad + 2 << "\" y=\""
       << pad + 14.0 * static_cast<double>(si) << "\" font-size=\"10\" fill=\""
       << colors[si % 6] << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw std::runtime_error("line plot: write to '" + path + "' failed");
}

}  // namespace motionforge
