#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "seglab/csvio.hpp"
#include "seglab/error.hpp"

namespace seglab {

struct ChartSeries {
  std::string name;
  std::vector<double> ys;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> xs;  // shared by every series
  std::vector<ChartSeries> series;
};

// Minimal self-contained line chart; no external fonts or scripts, so the
// file renders anywhere.
inline std::string line_chart_svg(const ChartSpec& spec) {
  require(!spec.series.empty(), ErrorKind::Contract, "chart without series");
  for (const ChartSeries& s : spec.series)
    require(s.ys.size() == spec.xs.size(), ErrorKind::Shape,
            "series '" + s.name + "' length does not match x axis");
  require(!spec.xs.empty(), ErrorKind::Contract, "chart without points");

  const double W = 720, H = 440;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = spec.xs.front(), xmax = spec.xs.front();
  for (double x : spec.xs) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  double ymin = spec.series[0].ys[0], ymax = ymin;
  for (const ChartSeries& s : spec.series)
    for (double y : s.ys) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b",
                                  "#17becf", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">"
     << spec.title << "</text>\n";

  // frame and four horizontal grid lines with value labels
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
     << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    const double yy = sy(yv);
    if (i > 0 && i < 4)
      os << "<line x1=\"" << ml << "\" y1=\"" << yy << "\" x2=\"" << W - mr
         << "\" y2=\"" << yy << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << yy + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt_num(yv) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << H - mb + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt_num(xv) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << spec.x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 16 "
     << (mt + H - mb) / 2 << ")\">" << spec.y_label << "</text>\n";

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const char* color = palette[si % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < spec.xs.size(); ++i) {
      if (i) os << " ";
      os << sx(spec.xs[i]) << "," << sy(spec.series[si].ys[i]);
    }
    os << "\"/>\n";
    const double ly = mt + 16 + 16 * double(si);
    os << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << ly << "\" x2=\""
       << W - mr - 126 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - mr - 120 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << spec.series[si].name
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace seglab
