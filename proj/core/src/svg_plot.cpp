#include "spm/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "spm/io.hpp"
#include "spm/types.hpp"

namespace spm {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Comments may not contain "--".
std::string comment_safe(std::string s) {
  for (std::size_t p; (p = s.find("--")) != std::string::npos;) s.replace(p, 2, "- -");
  return s;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v) const {
    const double t = log ? std::log10(v) : v;
    return hi > lo ? (t - lo) / (hi - lo) : 0.5;
  }
};

Axis make_axis(const std::vector<PlotSeries>& series, bool x, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const PlotSeries& s : series) {
    const auto& v = x ? s.x : s.y;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double e = (!x && i < s.err.size()) ? s.err[i] : 0.0;
      for (double w : {v[i] - e, v[i] + e, v[i]}) {
        if (!std::isfinite(w) || (log && w <= 0.0)) continue;
        const double t = log ? std::log10(w) : w;
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-300) lo -= 0.5, hi += 0.5;
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts) {
  const Axis ax = make_axis(series, true, opts.log_x);
  const Axis ay = make_axis(series, false, opts.log_y);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.map(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };
  auto ok_x = [&](double v) { return std::isfinite(v) && (!opts.log_x || v > 0.0); };
  auto ok_y = [&](double v) { return std::isfinite(v) && (!opts.log_y || v > 0.0); };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      kWidth, kHeight, kWidth, kHeight);
  for (const PlotSeries& ser : series) {
    s += "<!-- data " + comment_safe(ser.label) + ": x,y,err\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i)
      s += format_double(ser.x[i]) + "," + format_double(ser.y[i]) + "," +
           format_double(i < ser.err.size() ? ser.err[i] : 0.0) + "\n";
    s += "-->\n";
  }
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                   kLeft, kTop, pw, ph);
  s += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   kLeft + pw / 2, escape(opts.title));
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                   kLeft + pw / 2, kHeight - 10, escape(opts.x_label));
  s += fmt::format(
      "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape(opts.y_label));
  for (int t = 0; t <= 4; ++t) {
    const double fx = ax.lo + (ax.hi - ax.lo) * t / 4.0, fy = ay.lo + (ay.hi - ay.lo) * t / 4.0;
    const double lx = ax.log ? std::pow(10.0, fx) : fx, ly = ay.log ? std::pow(10.0, fy) : fy;
    s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{:.3g}</text>\n",
                     kLeft + pw * t / 4.0, kTop + ph + 15, lx);
    s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\" font-size=\"10\">{:.3g}</text>\n",
                     kLeft - 5, kTop + ph * (1 - t / 4.0) + 3, ly);
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& ser = series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      if (!ok_x(ser.x[i]) || !ok_y(ser.y[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(ser.x[i]), py(ser.y[i]));
      if (i < ser.err.size() && ser.err[i] > 0.0) {
        const double lo = ser.y[i] - ser.err[i], hi = ser.y[i] + ser.err[i];
        const double ylo = ok_y(lo) ? py(lo) : kTop + ph;
        s += fmt::format("<line x1=\"{0:.2f}\" x2=\"{0:.2f}\" y1=\"{1:.2f}\" y2=\"{2:.2f}\" stroke=\"{3}\"/>\n",
                         px(ser.x[i]), ylo, py(hi), color);
      }
    }
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{}</text>\n", kLeft + pw + 10,
                     kTop + 14 + 16 * k, color, escape(ser.label));
  }
  s += "</svg>\n";
  return s;
}

void write_svg(const std::filesystem::path& path, const std::vector<PlotSeries>& series,
               const PlotOptions& opts) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render_svg(series, opts);
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace spm
