#pragma once

#include <string>
#include <vector>

namespace piccolo {

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  long column(const std::string& name) const;  // -1 when absent
};

CsvData read_csv(const std::string& path);

// Static line chart: per-x median across seeds with a 25..75 percentile band,
// one series per distinct label (when a label/mode column exists).
void render_svg(const CsvData& csv, const std::string& column, const std::string& out_path);

}  // namespace piccolo
