#include "piccolo/svg.hpp"

#include "piccolo/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace piccolo {

long CsvData::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<long>(i);
  return -1;
}

CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open " + path);
  CsvData data;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (first) {
      data.header = std::move(fields);
      first = false;
    } else {
      data.rows.push_back(std::move(fields));
    }
  }
  if (first) throw ConfigError("csv: empty file " + path);
  return data;
}

namespace {

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0;
  double idx = p * (v.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(idx));
  size_t hi = static_cast<size_t>(std::ceil(idx));
  double frac = idx - lo;
  return v[lo] * (1 - frac) + v[hi] * frac;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void render_svg(const CsvData& csv, const std::string& column, const std::string& out_path) {
  long ycol = csv.column(column);
  if (ycol < 0) throw ConfigError("render: no column named '" + column + "'");
  long xcol = csv.column("n");
  if (xcol < 0) xcol = csv.column("rounds");
  if (xcol < 0) throw ConfigError("render: no x column (need 'n' or 'rounds')");
  long lcol = csv.column("label");
  if (lcol < 0) lcol = csv.column("mode");

  // series label -> x -> samples
  std::map<std::string, std::map<double, std::vector<double>>> series;
  for (const auto& row : csv.rows) {
    const std::string& ys = row[ycol];
    if (ys.empty()) continue;
    double x, y;
    try {
      x = std::stod(row[xcol]);
      y = std::stod(ys);
    } catch (...) {
      throw ConfigError("render: non-numeric cell in plotted columns");
    }
    std::string label = (lcol >= 0) ? row[lcol] : "series";
    series[label][x].push_back(y);
  }
  if (series.empty()) throw ConfigError("render: no plottable rows");

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [label, pts] : series)
    for (auto& [x, vals] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, percentile(vals, 0.25));
      ymax = std::max(ymax, percentile(vals, 0.75));
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;

  const double W = 720, H = 440, ml = 70, mr = 20, mt = 30, mb = 45;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << ml << "\" y=\"" << H - 12 << "\" font-size=\"12\">" << xmin
      << "</text>\n";
  svg << "<text x=\"" << W - mr - 40 << "\" y=\"" << H - 12 << "\" font-size=\"12\">" << xmax
      << "</text>\n";
  svg << "<text x=\"6\" y=\"" << H - mb << "\" font-size=\"12\">" << ymin << "</text>\n";
  svg << "<text x=\"6\" y=\"" << mt + 6 << "\" font-size=\"12\">" << ymax << "</text>\n";
  svg << "<text x=\"" << ml + 10 << "\" y=\"" << mt - 8 << "\" font-size=\"13\">" << column
      << "</text>\n";

  int ci = 0;
  double legend_y = mt + 10;
  for (auto& [label, pts] : series) {
    const char* color = kPalette[ci % 8];
    std::ostringstream upper, lower, mid;
    std::vector<std::pair<double, std::vector<double>>> ordered(pts.begin(), pts.end());
    for (auto& [x, vals] : ordered)
      upper << sx(x) << "," << sy(percentile(vals, 0.75)) << " ";
    for (auto it = ordered.rbegin(); it != ordered.rend(); ++it)
      lower << sx(it->first) << "," << sy(percentile(it->second, 0.25)) << " ";
    for (auto& [x, vals] : ordered) mid << sx(x) << "," << sy(percentile(vals, 0.5)) << " ";
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << mid.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"/>\n";
    svg << "<text x=\"" << W - mr - 150 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
        << color << "\">" << label << "</text>\n";
    legend_y += 16;
    ++ci;
  }
  svg << "</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw ConfigError("render: cannot write " + out_path);
  out << svg.str();
}

}  // namespace piccolo
