#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "qspin/entropy_production.hpp"

namespace qspin::csv {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<std::string>& cells, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += sep;
    out += cells[i];
  }
  return out;
}

/// Field holding a list of region indices, e.g. "1;2"; empty when none.
inline std::string index_list(const std::vector<std::size_t>& indices) {
  std::vector<std::string> parts;
  for (auto i : indices) parts.push_back(std::to_string(i));
  return join(parts, ';');
}

inline std::vector<std::string> timeseries_columns(std::size_t regions) {
  std::vector<std::string> cols{"t", "S_total"};
  for (std::size_t a = 0; a < regions; ++a) cols.push_back("S_region_" + std::to_string(a));
  cols.push_back("gap_D");
  for (std::size_t a = 0; a < regions; ++a) cols.push_back("rate_eq1_region_" + std::to_string(a));
  cols.insert(cols.end(), {"e_micro_h", "e_micro_H", "e_thermo"});
  for (std::size_t a = 0; a < regions; ++a) cols.push_back("flux_region_" + std::to_string(a));
  cols.push_back("floored_regions");
  return cols;
}

inline std::vector<std::string> timeseries_row(const EPReport& r) {
  std::vector<std::string> row{number(r.t), number(r.total_entropy)};
  for (auto s : r.region_entropies) row.push_back(number(s));
  row.push_back(number(r.subadditivity_gap));
  for (const auto& rate : r.rates) row.push_back(number(rate.value));
  row.push_back(number(r.e_micro_h.value));
  row.push_back(number(r.e_micro_H.value));
  row.push_back(number(r.e_thermo));
  for (auto f : r.fluxes) row.push_back(number(f));
  row.push_back(index_list(r.floored_regions()));
  return row;
}

inline void write_timeseries(std::ostream& out, const std::vector<EPReport>& reports, std::size_t regions) {
  out << join(timeseries_columns(regions)) << '\n';
  for (const auto& r : reports) out << join(timeseries_row(r)) << '\n';
}

}  // namespace qspin::csv
