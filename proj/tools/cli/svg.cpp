#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "iqnet/errors.hpp"

namespace iqnet::cli {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 200;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
                                "#8c6d31", "#843c39"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

bool has_err(double e) { return std::isfinite(e) && e > 0; }

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

Frame fit(const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      const double e = has_err(p.err) ? p.err : 0;
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y - e);
      y1 = std::max(y1, p.y + e);
    }
  }
  if (!std::isfinite(x0)) return {0, 1, 0, 1};
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.05; y1 += 0.05; }
  const double padx = 0.05 * (x1 - x0), pady = 0.05 * (y1 - y0);
  return {x0 - padx, x1 + padx, y0 - pady, y1 + pady};
}

void axes(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xlabel,
          const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  const double xa = kLeft, xb = kWidth - kRight, ya = kTop, yb = kHeight - kBottom;
  os << "<rect x=\"" << xa << "\" y=\"" << ya << "\" width=\"" << xb - xa << "\" height=\"" << yb - ya
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    os << "<text x=\"" << f.px(xv) << "\" y=\"" << yb + 16 << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << xa - 6 << "\" y=\"" << f.py(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    os << "<line x1=\"" << xa << "\" x2=\"" << xb << "\" y1=\"" << f.py(yv) << "\" y2=\"" << f.py(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (xa + xb) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">" << escape(xlabel)
     << "</text>\n";
  os << "<text transform=\"translate(18," << (ya + yb) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";
}

void legend(std::ostringstream& os, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 14 + 18.0 * static_cast<double>(i);
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<rect x=\"" << kWidth - kRight + 14 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/>\n<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << y << "\">" << escape(labels[i])
       << "</text>\n";
  }
}

std::string xy_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, bool lines) {
  const Frame f = fit(series);
  std::ostringstream os;
  axes(os, f, title, xlabel, ylabel);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    labels.push_back(s.label);
    if (lines && s.points.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& p : s.points) os << f.px(p.x) << "," << f.py(p.y) << " ";
      os << "\"/>\n";
    }
    for (const auto& p : s.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
      if (has_err(p.err)) {
        os << "<line x1=\"" << f.px(p.x) << "\" x2=\"" << f.px(p.x) << "\" y1=\"" << f.py(p.y - p.err)
           << "\" y2=\"" << f.py(p.y + p.err) << "\" stroke=\"" << color << "\"/>\n";
      }
      os << "<circle cx=\"" << f.px(p.x) << "\" cy=\"" << f.py(p.y) << "\" r=\"3.5\" fill=\"" << color
         << "\"/>\n";
    }
  }
  legend(os, labels);
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
  return xy_chart(title, xlabel, ylabel, series, true);
}

std::string scatter_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<Series>& series) {
  return xy_chart(title, xlabel, ylabel, series, false);
}

std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<Bar>& bars) {
  std::vector<Series> as_series;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    as_series.push_back({bars[i].label, {{static_cast<double>(i), bars[i].value, bars[i].err}}});
  }
  Frame f = fit(as_series);
  f.y0 = std::min(0.0, f.y0);
  f.x0 = -0.75;
  f.x1 = static_cast<double>(bars.size()) - 0.25;
  std::ostringstream os;
  axes(os, f, title, "model", ylabel);
  std::vector<std::string> labels;
  const double w = 0.6 * (f.px(1) - f.px(0));
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const char* color = kPalette[i % std::size(kPalette)];
    labels.push_back(b.label);
    const double x = f.px(static_cast<double>(i));
    os << "<rect x=\"" << x - w / 2 << "\" y=\"" << f.py(b.value) << "\" width=\"" << w << "\" height=\""
       << f.py(f.y0) - f.py(b.value) << "\" fill=\"" << color << "\"/>\n";
    if (has_err(b.err)) {
      os << "<line x1=\"" << x << "\" x2=\"" << x << "\" y1=\"" << f.py(b.value - b.err) << "\" y2=\""
         << f.py(b.value + b.err) << "\" stroke=\"black\"/>\n";
    }
  }
  legend(os, labels);
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::filesystem::path& path, const std::string& svg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << svg;
}

}  // namespace iqnet::cli
