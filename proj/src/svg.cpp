#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "l2map/harness.hpp"

namespace l2map {

std::vector<std::pair<double, double>> plot_coordinates(const std::vector<std::pair<double, double>>& series,
                                                        double x_min, double x_max, double y_min, double y_max,
                                                        const PlotFrame& frame) {
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const double y_span = y_max > y_min ? y_max - y_min : 1.0;
  const double w = frame.width - 2.0 * frame.margin;
  const double h = frame.height - 2.0 * frame.margin;
  std::vector<std::pair<double, double>> out;
  out.reserve(series.size());
  for (const auto& [x, y] : series) {
    out.emplace_back(frame.margin + (x - x_min) / x_span * w, frame.height - frame.margin - (y - y_min) / y_span * h);
  }
  return out;
}

namespace {

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color, double width) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
     << width << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << pts[i].first << ',' << pts[i].second;
  os << "\"/>\n";
  return os.str();
}

}  // namespace

std::string render_curve_svg(const std::vector<std::pair<double, double>>& raw, const std::vector<double>& smoothed,
                             const PlotFrame& frame) {
  if (raw.empty()) throw std::invalid_argument("cannot plot an empty curve");
  double x_min = raw.front().first;
  double x_max = raw.front().first;
  double y_min = raw.front().second;
  double y_max = raw.front().second;
  for (const auto& [x, y] : raw) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  std::vector<std::pair<double, double>> smooth_series;
  for (std::size_t i = 0; i < smoothed.size() && i < raw.size(); ++i) smooth_series.emplace_back(raw[i].first, smoothed[i]);

  const double left = frame.margin;
  const double right = frame.width - frame.margin;
  const double top = frame.margin;
  const double bottom = frame.height - frame.margin;

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << frame.width << "\" height=\"" << frame.height
     << "\" viewBox=\"0 0 " << frame.width << ' ' << frame.height << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << frame.width << "\" height=\"" << frame.height << "\" fill=\"white\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
     << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (left + right) / 2 << "\" y=\"" << frame.height - 15 << "\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"14\">episode</text>\n"
     << "<text x=\"18\" y=\"" << (top + bottom) / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"14\" transform=\"rotate(-90 18 " << (top + bottom) / 2 << ")\">episode reward (nats)</text>\n";
  for (const auto& [label, value, y] : {std::tuple{"min", y_min, bottom}, std::tuple{"max", y_max, top}}) {
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << value << "</text>\n";
    (void)label;
  }
  os << "<text x=\"" << left << "\" y=\"" << bottom + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">"
     << x_min << "</text>\n"
     << "<text x=\"" << right << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
     << "font-size=\"11\">" << x_max << "</text>\n";
  os << polyline(plot_coordinates(raw, x_min, x_max, y_min, y_max, frame), "#9ecae1", 1.0);
  if (!smooth_series.empty()) {
    os << polyline(plot_coordinates(smooth_series, x_min, x_max, y_min, y_max, frame), "#08519c", 2.0);
  }
  os << "</svg>\n";
  return os.str();
}

void emit_curve_svg(const std::filesystem::path& curve_file, const std::filesystem::path& output,
                    double kernel_width) {
  const auto rows = read_curve(curve_file);
  if (rows.empty()) throw std::invalid_argument("curve file " + curve_file.string() + " has no data rows");
  std::vector<double> ys;
  ys.reserve(rows.size());
  for (const auto& r : rows) ys.push_back(r.second);
  const std::string svg = render_curve_svg(rows, smooth_curve(ys, kernel_width));
  std::ofstream os(output, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + output.string() + " for writing");
  os << svg;
}

}  // namespace l2map
