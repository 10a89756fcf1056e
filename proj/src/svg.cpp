#include <algorithm>
#include <cstdio>
#include <ostream>

#include "rshift/io.hpp"

namespace rshift::io {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

}  // namespace

void write_study_svg(std::ostream& out, const study::StudyReport& report) {
  const double left = 60, top = 30, plot_h = 300, bar_w = 28, gap = 12, bottom = 180;
  const auto cells = report.cells.size();
  const double plot_w = std::max(200.0, static_cast<double>(cells) * (bar_w + gap) + gap);
  const double width = left + plot_w + 20, height = top + plot_h + bottom;
  double ymax = std::max(report.band_hi, 0.1);
  for (const auto& c : report.cells) ymax = std::max(ymax, c.rate);
  ymax = std::min(1.0, ymax * 1.1);
  auto y_of = [&](double v) { return top + plot_h * (1.0 - v / ymax); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\">\n";
  out << "  <title>" << escape(report.spec.name) << " rejection rates</title>\n";
  out << "  <rect x=\"" << num(left) << "\" y=\"" << num(y_of(report.band_hi)) << "\" width=\"" << num(plot_w)
      << "\" height=\"" << num(y_of(report.band_lo) - y_of(report.band_hi))
      << "\" fill=\"#cfe3f7\" stroke=\"none\"/>\n";
  out << "  <line x1=\"" << num(left) << "\" y1=\"" << num(y_of(report.spec.alpha)) << "\" x2=\""
      << num(left + plot_w) << "\" y2=\"" << num(y_of(report.spec.alpha))
      << "\" stroke=\"#1f5fa0\" stroke-dasharray=\"4 3\"/>\n";
  out << "  <line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
      << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(left + plot_w)
      << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    out << "  <text x=\"" << num(left - 6) << "\" y=\"" << num(y_of(v) + 4)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < cells; ++i) {
    const auto& c = report.cells[i];
    const double x = left + gap + static_cast<double>(i) * (bar_w + gap);
    const std::string label = std::string(fields::to_string(c.scenario)) + " " +
                              std::string(fields::to_string(c.trend)) + " " + c.method;
    out << "  <rect x=\"" << num(x) << "\" y=\"" << num(y_of(c.rate)) << "\" width=\"" << num(bar_w)
        << "\" height=\"" << num(top + plot_h - y_of(c.rate)) << "\" fill=\"" << (c.in_band ? "#4a8c4a" : "#b04a3a")
        << "\"><title>" << escape(label) << " rate " << num(c.rate) << "</title></rect>\n";
    const double lx = x + bar_w / 2, ly = top + plot_h + 8;
    out << "  <text x=\"" << num(lx) << "\" y=\"" << num(ly) << "\" font-size=\"9\" transform=\"rotate(60 "
        << num(lx) << " " << num(ly) << ")\">" << escape(label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace rshift::io
