#include "levcav/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "levcav/constants.hpp"
#include "levcav/errors.hpp"

namespace levcav {

const std::vector<double>& CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return data[i];
  throw DomainError("csv: missing column '" + name + "'");
}

std::string CsvTable::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return {};
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string render_csv(const CsvTable& t) {
  std::ostringstream os;
  for (const auto& [k, v] : t.meta) os << '#' << k << '=' << v << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  const std::size_t rows = t.data.empty() ? 0 : t.data.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < t.data.size(); ++c)
      os << (c ? "," : "") << format_number(t.data[c][r]);
    os << '\n';
  }
  return os.str();
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) t.meta.emplace_back(line.substr(1, eq - 1), line.substr(eq + 1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = cells;
      t.data.resize(cells.size());
      continue;
    }
    if (cells.size() != t.columns.size())
      throw DomainError(source + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(t.columns.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        t.data[c].push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::logic_error&) {
        throw DomainError(source + ":" + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
    }
  }
  if (t.columns.empty()) throw DomainError(source + ": no header row");
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), path);
}

namespace {

std::optional<double> meta_number(const CsvTable& t, const std::string& key, const std::string& src) {
  const std::string v = t.meta_value(key);
  if (v.empty()) return std::nullopt;
  try {
    return std::stod(v);
  } catch (const std::logic_error&) {
    throw DomainError(src + ": bad metadata value for '" + key + "'");
  }
}

}  // namespace

CsvTable spectrum_table(const MeasuredSpectrum& s) {
  CsvTable t;
  if (!s.meta.label.empty()) t.meta.emplace_back("label", s.meta.label);
  if (s.meta.detuning) t.meta.emplace_back("detuning_hz", format_number(in_hz(*s.meta.detuning)));
  if (s.meta.kappa) t.meta.emplace_back("kappa_hz", format_number(in_hz(*s.meta.kappa)));
  t.meta.emplace_back("mu", format_number(s.meta.mu));
  t.meta.emplace_back("pressure_pa", format_number(s.meta.pressure));
  t.meta.emplace_back("units", "freq_hz=Hz;psd=units^2/Hz");
  t.columns = {"freq_hz", "psd"};
  t.data = {s.freq_hz, s.values};
  return t;
}

MeasuredSpectrum spectrum_from_table(const CsvTable& t, const std::string& src) {
  MeasuredSpectrum s;
  s.freq_hz = t.column("freq_hz");
  s.values = t.column("psd");
  s.meta.label = t.meta_value("label");
  if (s.meta.label.empty()) s.meta.label = src;
  if (auto d = meta_number(t, "detuning_hz", src)) s.meta.detuning = angular(*d);
  if (auto k = meta_number(t, "kappa_hz", src)) s.meta.kappa = angular(*k);
  s.meta.mu = meta_number(t, "mu", src).value_or(0.0);
  s.meta.pressure = meta_number(t, "pressure_pa", src).value_or(0.0);
  validate(s);
  return s;
}

CsvTable time_series_table(const TimeSeries& ts, const std::vector<double>& s_opt) {
  if (s_opt.size() != ts.size()) throw DomainError("detector trace length differs from time series");
  CsvTable t;
  t.meta.emplace_back("seed", std::to_string(ts.seed));
  t.meta.emplace_back("dt_s", format_number(ts.dt));
  t.meta.emplace_back("detuning_hz", format_number(in_hz(ts.detuning)));
  t.meta.emplace_back("kappa_hz", format_number(in_hz(ts.kappa)));
  t.meta.emplace_back("units", "t_s=s;x_m=m;q1,q2=dimensionless;s_opt=detector units");
  t.columns = {"t_s", "x_m", "q1", "q2", "s_opt"};
  t.data.assign(5, std::vector<double>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t.data[0][i] = ts.time(i);
    t.data[1][i] = ts.x[i];
    t.data[2][i] = ts.q1(i);
    t.data[3][i] = ts.q2(i);
    t.data[4][i] = s_opt[i];
  }
  return t;
}

}  // namespace levcav
