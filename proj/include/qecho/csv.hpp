#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"

namespace qecho {

namespace detail {

inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream stream(path);
  if (!stream) fail(Errc::config_invalid, "cannot open '" + path + "' for writing");
  return stream;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline double field_double(const std::string& file, const std::string& text) {
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(Errc::config_invalid, file + ": malformed numeric field '" + text + "'");
  }
  if (used != text.size())
    fail(Errc::config_invalid, file + ": malformed numeric field '" + text + "'");
  return value;
}

}  // namespace detail

inline const char* kSeriesHeader =
    "t,echo_mag,echo_phase,gamma,echo_zero,lambda_rate,entropy,variance,occupied_count,degenerate";
inline const char* kSpectrumHeader = "t,index,xi,ky";
inline const char* kTransitionsHeader =
    "t_c,kind,ky,gamma_left,gamma_right,slope_left,slope_right,occupied_change,crossing_indices";
inline const char* kLoschmidtHeader = "t,magnitude,phase,lambda";

inline void write_series_csv(const std::string& path, const std::vector<SeriesRecord>& records) {
  std::ofstream out = detail::open_output(path);
  out << kSeriesHeader << "\n";
  for (const SeriesRecord& rec : records) {
    out << detail::format_double(rec.t) << ',' << detail::format_double(rec.echo_mag) << ','
        << detail::format_double(rec.echo_phase) << ',' << detail::format_double(rec.gamma) << ','
        << (rec.echo_zero ? 1 : 0) << ',';
    if (!std::isnan(rec.lambda_rate)) out << detail::format_double(rec.lambda_rate);
    out << ',' << detail::format_double(rec.entropy) << ',' << detail::format_double(rec.variance)
        << ',' << rec.occupied_count << ',' << (rec.degenerate ? 1 : 0) << "\n";
  }
}

inline void write_spectrum_csv(const std::string& path, const std::vector<SpectrumRow>& rows) {
  std::ofstream out = detail::open_output(path);
  out << kSpectrumHeader << "\n";
  for (const SpectrumRow& row : rows) {
    out << detail::format_double(row.t) << ',' << row.index << ','
        << detail::format_double(row.xi) << ',';
    if (row.ky) out << detail::format_double(*row.ky);
    out << "\n";
  }
}

inline const char* transition_kind_name(TransitionKind kind) {
  switch (kind) {
    case TransitionKind::jump: return "jump";
    case TransitionKind::cusp: return "cusp";
    case TransitionKind::unclassifiable: return "unclassifiable";
  }
  return "unclassifiable";
}

inline void write_transitions_csv(const std::string& path,
                                  const std::vector<TransitionEvent>& events) {
  std::ofstream out = detail::open_output(path);
  out << kTransitionsHeader << "\n";
  for (const TransitionEvent& ev : events) {
    out << detail::format_double(ev.t_c) << ',' << transition_kind_name(ev.kind) << ',';
    if (ev.ky) out << detail::format_double(*ev.ky);
    out << ',' << detail::format_double(ev.gamma_left) << ','
        << detail::format_double(ev.gamma_right) << ',' << detail::format_double(ev.slope_left)
        << ',' << detail::format_double(ev.slope_right) << ',' << ev.occupied_change << ',';
    for (size_t i = 0; i < ev.crossing_indices.size(); ++i) {
      if (i) out << ';';
      out << ev.crossing_indices[i];
    }
    out << "\n";
  }
}

inline void write_loschmidt_csv(const std::string& path,
                                const std::vector<LoschmidtPoint>& points) {
  std::ofstream out = detail::open_output(path);
  out << kLoschmidtHeader << "\n";
  for (const LoschmidtPoint& point : points) {
    out << detail::format_double(point.time) << ','
        << detail::format_double(std::abs(point.amplitude)) << ','
        << detail::format_double(std::arg(point.amplitude)) << ','
        << detail::format_double(point.rate) << "\n";
  }
}

inline std::vector<SeriesRecord> read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_invalid, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kSeriesHeader)
    fail(Errc::config_invalid, path + ": unexpected header");
  std::vector<SeriesRecord> records;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_line(line);
    if (fields.size() != 10) fail(Errc::config_invalid, path + ": expected 10 fields per row");
    SeriesRecord rec;
    rec.t = detail::field_double(path, fields[0]);
    rec.echo_mag = detail::field_double(path, fields[1]);
    rec.echo_phase = detail::field_double(path, fields[2]);
    rec.gamma = detail::field_double(path, fields[3]);
    rec.echo_zero = detail::field_double(path, fields[4]) != 0.0;
    rec.lambda_rate = fields[5].empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : detail::field_double(path, fields[5]);
    rec.entropy = detail::field_double(path, fields[6]);
    rec.variance = detail::field_double(path, fields[7]);
    rec.occupied_count = static_cast<int>(detail::field_double(path, fields[8]));
    rec.degenerate = detail::field_double(path, fields[9]) != 0.0;
    records.push_back(rec);
  }
  return records;
}

inline std::vector<SpectrumRow> read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_invalid, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kSpectrumHeader)
    fail(Errc::config_invalid, path + ": unexpected header");
  std::vector<SpectrumRow> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const std::vector<std::string> fields = detail::split_line(line);
    if (fields.size() != 4) fail(Errc::config_invalid, path + ": expected 4 fields per row");
    SpectrumRow row;
    row.t = detail::field_double(path, fields[0]);
    row.index = static_cast<int>(detail::field_double(path, fields[1]));
    row.xi = detail::field_double(path, fields[2]);
    if (!fields[3].empty()) row.ky = detail::field_double(path, fields[3]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qecho
