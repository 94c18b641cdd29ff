#pragma once

#include <map>
#include <string>
#include <vector>

#include "levcav/analysis.hpp"
#include "levcav/sim.hpp"

namespace levcav {

/// `#key=value` metadata lines, one header row, numeric columns.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // column-major, one vector per column

  const std::vector<double>& column(const std::string& name) const;
  std::string meta_value(const std::string& key) const;  // empty if absent
};

/// Twelve significant digits ("%.12g"); NaN renders as "nan".
std::string format_number(double v);

std::string render_csv(const CsvTable& t);
CsvTable parse_csv(const std::string& text, const std::string& source = "csv");
CsvTable read_csv(const std::string& path);

CsvTable spectrum_table(const MeasuredSpectrum& s);
MeasuredSpectrum spectrum_from_table(const CsvTable& t, const std::string& source);

CsvTable time_series_table(const TimeSeries& ts, const std::vector<double>& s_opt);

}  // namespace levcav
