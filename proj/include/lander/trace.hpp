// Episode trace CSV: one row per control step.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lander/common.hpp"
#include "lander/ekf.hpp"
#include "lander/environment.hpp"

namespace lander {

inline constexpr std::array<const char*, 24> kTraceColumns{
    "t",     "px",    "py",    "pz",     "vx",     "vy",     "vz", "roll", "pitch", "yaw",    "ax",       "ay",
    "az",    "pad_x", "pad_y", "pad_z",  "pad_vx", "pad_vy", "pad_vz", "fx", "fy",    "fz",     "reward", "terminal"};

inline constexpr std::array<const char*, 6> kEstimateColumns{"est_x", "est_y", "est_z", "est_vx", "est_vy", "est_vz"};

struct TraceRow {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 attitude = Vec3::Zero();
  Vec3 action = Vec3::Zero();
  Vec3 pad_position = Vec3::Zero();
  Vec3 pad_velocity = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  double reward = 0.0;
  Terminal terminal = Terminal::None;
  std::optional<Vec6> estimate;

  static TraceRow from(const StepOutcome& out) {
    TraceRow r;
    r.t = out.info.time;
    r.position = out.info.drone.position;
    r.velocity = out.info.drone.velocity;
    r.attitude = out.info.drone.attitude;
    r.action = out.info.action;
    r.pad_position = out.info.pad.position;
    r.pad_velocity = out.info.pad.velocity;
    r.force = out.info.wind_force;
    r.reward = out.reward.total;
    r.terminal = out.terminal;
    return r;
  }
};

inline std::string trace_header(bool with_estimate) {
  std::string h;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) h += std::string(i ? "," : "") + kTraceColumns[i];
  if (with_estimate)
    for (const char* c : kEstimateColumns) h += std::string(",") + c;
  return h;
}

inline std::string format_g(double v, int digits = 9) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline void write_trace(std::ostream& out, const std::vector<TraceRow>& rows) {
  const bool est = !rows.empty() && rows.front().estimate.has_value();
  out << trace_header(est) << "\n";
  for (const auto& r : rows) {
    out << format_g(r.t);
    for (const Vec3* v : {&r.position, &r.velocity, &r.attitude, &r.action, &r.pad_position, &r.pad_velocity, &r.force})
      for (int i = 0; i < 3; ++i) out << "," << format_g((*v)[i]);
    out << "," << format_g(r.reward) << "," << to_string(r.terminal);
    if (est) {
      const Vec6 e = r.estimate.value_or(Vec6::Constant(std::numeric_limits<double>::quiet_NaN()));
      for (int i = 0; i < 6; ++i) out << "," << format_g(e[i]);
    }
    out << "\n";
  }
}

inline void write_trace_file(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
  write_trace(out, rows);
}

/// Parses a trace. Throws FormatError naming the first offending column.
inline std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw FormatError("trace: empty file (missing header, expected column 't')");
  std::vector<std::string> cols;
  {
    std::istringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  const std::size_t base = kTraceColumns.size();
  for (std::size_t i = 0; i < base; ++i) {
    if (i >= cols.size()) throw FormatError(std::string("trace: missing column '") + kTraceColumns[i] + "'");
    if (cols[i] != kTraceColumns[i])
      throw FormatError("trace: bad column '" + cols[i] + "' at position " + std::to_string(i + 1) + ", expected '" +
                        kTraceColumns[i] + "'");
  }
  bool est = false;
  if (cols.size() > base) {
    for (std::size_t i = 0; i < kEstimateColumns.size(); ++i) {
      if (base + i >= cols.size()) throw FormatError(std::string("trace: missing column '") + kEstimateColumns[i] + "'");
      if (cols[base + i] != kEstimateColumns[i])
        throw FormatError("trace: bad column '" + cols[base + i] + "', expected '" + kEstimateColumns[i] + "'");
    }
    if (cols.size() > base + kEstimateColumns.size())
      throw FormatError("trace: bad column '" + cols[base + kEstimateColumns.size()] + "' (unexpected extra column)");
    est = true;
  }

  std::vector<TraceRow> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (f.size() != cols.size())
      throw FormatError("trace line " + std::to_string(lineno) + ": expected " + std::to_string(cols.size()) +
                        " fields, got " + std::to_string(f.size()));
    auto num = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(f[i], &used);
        if (used != f[i].size()) throw std::invalid_argument("trailing");
        return v;
      } catch (const std::exception&) {
        throw FormatError("trace line " + std::to_string(lineno) + ": bad value in column '" + cols[i] + "'");
      }
    };
    TraceRow r;
    r.t = num(0);
    Vec3* vecs[] = {&r.position, &r.velocity, &r.attitude, &r.action, &r.pad_position, &r.pad_velocity, &r.force};
    std::size_t k = 1;
    for (Vec3* v : vecs)
      for (int i = 0; i < 3; ++i) (*v)[i] = num(k++);
    r.reward = num(k++);
    const auto term = parse_terminal(f[k]);
    if (!term) throw FormatError("trace line " + std::to_string(lineno) + ": bad value in column 'terminal'");
    r.terminal = *term;
    ++k;
    if (est) {
      Vec6 e;
      for (int i = 0; i < 6; ++i) e[i] = num(k++);
      r.estimate = e;
    }
    rows.push_back(r);
  }
  return rows;
}

struct TraceSummary {
  std::size_t rows = 0;
  double duration = 0.0;
  double min_distance = 0.0;
  Terminal terminal = Terminal::None;
  std::optional<double> lateral_error;  // at touchdown
  Vec3 drone_min = Vec3::Zero(), drone_max = Vec3::Zero();
  Vec3 pad_min = Vec3::Zero(), pad_max = Vec3::Zero();
};

inline TraceSummary summarize_trace(const std::vector<TraceRow>& rows) {
  if (rows.empty()) throw FormatError("trace: no data rows");
  TraceSummary s;
  s.rows = rows.size();
  s.duration = rows.back().t;
  s.min_distance = std::numeric_limits<double>::infinity();
  s.drone_min = s.drone_max = rows.front().position;
  s.pad_min = s.pad_max = rows.front().pad_position;
  for (const auto& r : rows) {
    s.min_distance = std::min(s.min_distance, (r.position - r.pad_position).norm());
    s.drone_min = s.drone_min.cwiseMin(r.position);
    s.drone_max = s.drone_max.cwiseMax(r.position);
    s.pad_min = s.pad_min.cwiseMin(r.pad_position);
    s.pad_max = s.pad_max.cwiseMax(r.pad_position);
  }
  s.terminal = rows.back().terminal;
  if (s.terminal == Terminal::Touchdown)
    s.lateral_error = (rows.back().position - rows.back().pad_position).head<2>().norm();
  return s;
}

/// Keeps ceil(n / factor) rows spread evenly over the trace, endpoints included.
inline std::vector<TraceRow> downsample_trace(const std::vector<TraceRow>& rows, std::size_t factor) {
  if (factor == 0) throw ContractError("downsample_trace: factor must be >= 1");
  const std::size_t n = rows.size();
  if (n <= 2 || factor == 1) return rows;
  const std::size_t m = std::max<std::size_t>(2, (n + factor - 1) / factor);
  std::vector<TraceRow> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * (n - 1) / (m - 1)));
    out.push_back(rows[idx]);
  }
  return out;
}

}  // namespace lander
