#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ffd::eval {

// Minimal line-chart writer for the report figures.
class SvgChart {
 public:
  struct Axis {
    std::string label;
    double min = 0, max = 1;
    std::function<double(double)> transform = [](double v) { return v; };
    std::vector<double> ticks;
    std::function<std::string(double)> tick_label = [](double v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
  };

  SvgChart(std::string title, Axis x, Axis y) : title_(std::move(title)), x_(std::move(x)), y_(std::move(y)) {}

  void add_series(const std::string& label, const std::vector<double>& xs,
                  const std::vector<double>& ys, const std::string& colour) {
    std::ostringstream path;
    path << std::setprecision(6);
    bool pen_down = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double px = map_x(xs[i]), py = map_y(ys[i]);
      if (!std::isfinite(px) || !std::isfinite(py)) {
        pen_down = false;
        continue;
      }
      path << (pen_down ? " L" : " M") << px << ',' << py;
      pen_down = true;
    }
    body_ << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << colour
          << "\" stroke-width=\"2\"/>\n";
    legend_.push_back({label, colour});
  }

  void add_vertical_line(double x, const std::string& label, const std::string& dash) {
    const double px = map_x(x);
    body_ << "<line x1=\"" << px << "\" y1=\"" << kTop << "\" x2=\"" << px << "\" y2=\""
          << kTop + kPlotH << "\" stroke=\"black\" stroke-dasharray=\"" << dash << "\"/>\n";
    body_ << "<text x=\"" << px + 4 << "\" y=\"" << kTop + 14 << "\" font-size=\"11\">" << label
          << "</text>\n";
  }

  void add_horizontal_line(double y, const std::string& label, const std::string& dash) {
    const double py = map_y(y);
    body_ << "<line x1=\"" << kLeft << "\" y1=\"" << py << "\" x2=\"" << kLeft + kPlotW
          << "\" y2=\"" << py << "\" stroke=\"black\" stroke-dasharray=\"" << dash << "\"/>\n";
    body_ << "<text x=\"" << kLeft + kPlotW - 4 << "\" y=\"" << py - 4
          << "\" font-size=\"11\" text-anchor=\"end\">" << label << "</text>\n";
  }

  void add_marker(double x, double y, const std::string& label) {
    body_ << "<circle cx=\"" << map_x(x) << "\" cy=\"" << map_y(y)
          << "\" r=\"4\" fill=\"black\"/>\n<text x=\"" << map_x(x) + 6 << "\" y=\"" << map_y(y) - 6
          << "\" font-size=\"11\">" << label << "</text>\n";
  }

  std::string str() const {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">"
       << title_ << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlotW << "\" height=\""
       << kPlotH << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : x_.ticks) {
      const double px = map_x(t);
      os << "<line x1=\"" << px << "\" y1=\"" << kTop + kPlotH << "\" x2=\"" << px << "\" y2=\""
         << kTop + kPlotH + 5 << "\" stroke=\"black\"/>\n<text x=\"" << px << "\" y=\""
         << kTop + kPlotH + 18 << "\" font-size=\"11\" text-anchor=\"middle\">" << x_.tick_label(t)
         << "</text>\n";
    }
    for (double t : y_.ticks) {
      const double py = map_y(t);
      os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\"" << kLeft << "\" y2=\"" << py
         << "\" stroke=\"black\"/>\n<text x=\"" << kLeft - 8 << "\" y=\"" << py + 4
         << "\" font-size=\"11\" text-anchor=\"end\">" << y_.tick_label(t) << "</text>\n";
    }
    os << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kHeight - 10
       << "\" font-size=\"13\" text-anchor=\"middle\">" << x_.label << "</text>\n";
    os << "<text x=\"16\" y=\"" << kTop + kPlotH / 2 << "\" font-size=\"13\" text-anchor=\"middle\""
       << " transform=\"rotate(-90 16 " << kTop + kPlotH / 2 << ")\">" << y_.label << "</text>\n";
    os << "<g clip-path=\"url(#plot)\">\n<clipPath id=\"plot\"><rect x=\"" << kLeft << "\" y=\""
       << kTop << "\" width=\"" << kPlotW << "\" height=\"" << kPlotH << "\"/></clipPath>\n"
       << body_.str() << "</g>\n";
    double ly = kTop + 16;
    for (const auto& [label, colour] : legend_) {
      os << "<line x1=\"" << kLeft + kPlotW - 150 << "\" y1=\"" << ly << "\" x2=\""
         << kLeft + kPlotW - 125 << "\" y2=\"" << ly << "\" stroke=\"" << colour
         << "\" stroke-width=\"2\"/>\n<text x=\"" << kLeft + kPlotW - 120 << "\" y=\"" << ly + 4
         << "\" font-size=\"11\">" << label << "</text>\n";
      ly += 16;
    }
    os << "</svg>\n";
    return os.str();
  }

 private:
  static constexpr double kWidth = 640, kHeight = 480;
  static constexpr double kLeft = 70, kTop = 40, kPlotW = 540, kPlotH = 380;

  double map_x(double v) const {
    const double a = x_.transform(x_.min), b = x_.transform(x_.max);
    return kLeft + (x_.transform(v) - a) / (b - a) * kPlotW;
  }
  double map_y(double v) const {
    const double a = y_.transform(y_.min), b = y_.transform(y_.max);
    return kTop + kPlotH - (y_.transform(v) - a) / (b - a) * kPlotH;
  }

  std::string title_;
  Axis x_, y_;
  std::ostringstream body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

}  // namespace ffd::eval
