#include "rowsim/waveform_log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "rowsim/error.hpp"

namespace rowsim {

void WaveformLog::reserve(std::size_t n) {
  for (auto* v : {&t_s, &v_bus_v, &p_load_kw, &dru_p_kw, &soc, &r_up_kw, &r_dn_kw, &sst_p_kw, &pcc_p_kw,
                  &p_chg_kw, &p_avg_kw, &h_mv_kw, &sst_setpoint_kw, &branch_a_v, &branch_b_v,
                  &reserve_sst_setpoint_kw}) {
    v->reserve(n);
  }
  tier.reserve(n);
  event.reserve(n);
  floors_ok.reserve(n);
  veto.reserve(n);
}

std::size_t WaveformLog::index_at(double t) const {
  auto it = std::lower_bound(t_s.begin(), t_s.end(), t - 1e-12);
  return static_cast<std::size_t>(it - t_s.begin());
}

std::vector<double> WaveformLog::markers_named(std::string_view name) const {
  std::vector<double> out;
  for (const auto& m : markers) {
    if (m.name == name) out.push_back(m.t_s);
  }
  return out;
}

namespace {

void append_fmt(std::string& out, const char* fmt, double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s, std::size_t line_no, std::string_view column) {
  double v = 0.0;
  // Trim spaces and a trailing carriage return.
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", column " + std::string(column) +
                                           ": not a number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string log_to_csv(const WaveformLog& log) {
  std::string out;
  out.reserve(log.size() * 110 + 128);
  out.append(kLogHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < log.size(); ++i) {
    append_fmt(out, "%.6f,", log.t_s[i]);
    append_fmt(out, "%.6f,", log.v_bus_v[i]);
    append_fmt(out, "%.6f,", log.p_load_kw[i]);
    append_fmt(out, "%.6f,", log.dru_p_kw[i]);
    append_fmt(out, "%.9f,", log.soc[i]);
    append_fmt(out, "%.6f,", log.r_up_kw[i]);
    append_fmt(out, "%.6f,", log.r_dn_kw[i]);
    append_fmt(out, "%.6f,", log.sst_p_kw[i]);
    append_fmt(out, "%.6f,", log.pcc_p_kw[i]);
    append_fmt(out, "%.6f,", log.p_chg_kw[i]);
    out += std::to_string(log.tier[i]);
    out.push_back(',');
    out += log.event[i];
    out.push_back('\n');
  }
  return out;
}

std::string aux_to_csv(const WaveformLog& log) {
  std::string out;
  out.append(kAuxHeader);
  out.push_back('\n');
  auto at = [](const std::vector<double>& v, std::size_t i) { return i < v.size() ? v[i] : 0.0; };
  for (std::size_t i = 0; i < log.size(); ++i) {
    append_fmt(out, "%.6f,", log.t_s[i]);
    append_fmt(out, "%.6f,", at(log.p_avg_kw, i));
    append_fmt(out, "%.6f,", at(log.h_mv_kw, i));
    append_fmt(out, "%.6f,", at(log.sst_setpoint_kw, i));
    out += (i < log.floors_ok.size() && log.floors_ok[i]) ? "1," : "0,";
    out += i < log.veto.size() ? log.veto[i] : std::string();
    out.push_back(',');
    append_fmt(out, "%.6f,", at(log.branch_a_v, i));
    append_fmt(out, "%.6f\n", at(log.branch_b_v, i));
  }
  return out;
}

std::string captures_to_csv(const WaveformLog& log) {
  std::string out;
  out.append(kCaptureHeader);
  out.push_back('\n');
  for (const auto& c : log.captures) {
    for (std::size_t i = 0; i < c.v_bus_v.size(); ++i) {
      append_fmt(out, "%.9f,", c.t0_s + static_cast<double>(i) * c.dt_s);
      append_fmt(out, "%.6f,", c.v_bus_v[i]);
      const bool taps = c.branch_a_v.size() == c.v_bus_v.size() && c.branch_b_v.size() == c.v_bus_v.size();
      if (taps) {
        append_fmt(out, "%.6f,", c.branch_a_v[i]);
        append_fmt(out, "%.6f,", c.branch_b_v[i]);
      } else {
        out += ",,";
      }
      out += c.label;
      out.push_back('\n');
    }
  }
  return out;
}

WaveformLog log_from_csv(std::string_view text, double v_nom_v) {
  WaveformLog log;
  log.v_nom_v = v_nom_v;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(header) || header.empty()) throw Error(ErrorCode::EmptyLog, "log has no header");
  const auto cols = split(header, ',');
  const auto expected = split(kLogHeader, ',');
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < cols.size(); ++i) index[cols[i]] = i;
  std::string missing;
  for (auto c : expected) {
    if (!index.count(c)) missing += (missing.empty() ? "" : ", ") + std::string(c);
  }
  if (!missing.empty()) throw Error(ErrorCode::MissingChannel, "log is missing columns: " + missing);

  std::string_view line;
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < cols.size() - 1) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(cols.size()) + " fields");
    }
    auto num = [&](std::string_view c) { return to_double(f[index[c]], line_no, c); };
    log.t_s.push_back(num("t_s"));
    log.v_bus_v.push_back(num("v_bus_v"));
    log.p_load_kw.push_back(num("p_load_kw"));
    log.dru_p_kw.push_back(num("dru_p_kw"));
    log.soc.push_back(num("soc"));
    log.r_up_kw.push_back(num("r_up_kw"));
    log.r_dn_kw.push_back(num("r_dn_kw"));
    log.sst_p_kw.push_back(num("sst_p_kw"));
    log.pcc_p_kw.push_back(num("pcc_p_kw"));
    log.p_chg_kw.push_back(num("p_chg_kw"));
    log.tier.push_back(static_cast<int>(num("tier")));
    const std::size_t ei = index["event"];
    std::string ev = ei < f.size() ? std::string(f[ei]) : std::string();
    if (!ev.empty()) {
      for (auto name : split(ev, '|')) log.markers.push_back({log.t_s.back(), std::string(name), {}});
    }
    log.event.push_back(std::move(ev));
  }
  if (log.t_s.size() >= 2) log.dt_s = log.t_s[1] - log.t_s[0];
  return log;
}

void captures_from_csv(std::string_view text, WaveformLog& log) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const bool with_taps = split(line, ',').size() >= 5;
  Capture* cur = nullptr;
  double last_t = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < (with_taps ? 5u : 3u)) throw Error(ErrorCode::ParseError, "captures line " + std::to_string(line_no));
    const double t = to_double(f[0], line_no, "t_s");
    const double v = to_double(f[1], line_no, "v_bus_v");
    const std::string label(f.back());
    const bool gap = cur && cur->v_bus_v.size() > 1 && t - last_t > 1.5 * cur->dt_s;
    if (!cur || cur->label != label || gap) {
      log.captures.push_back({t, 0.0, label, {}, {}, {}});
      cur = &log.captures.back();
    } else if (cur->v_bus_v.size() == 1) {
      cur->dt_s = t - last_t;
    }
    cur->v_bus_v.push_back(v);
    if (with_taps && !f[2].empty() && !f[3].empty()) {
      cur->branch_a_v.push_back(to_double(f[2], line_no, "branch_a_v"));
      cur->branch_b_v.push_back(to_double(f[3], line_no, "branch_b_v"));
    }
    last_t = t;
  }
}

}  // namespace rowsim
