#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rowsim {

/// Symbolic marker at an exact simulation time.
struct Marker {
  double t_s;
  std::string name;    // burst_on, branch_fault, feeder_trip, flisr_restore_confirmed, ...
  std::string detail;  // free-form, e.g. the device or segment id
};

/// Full-rate capture of the spine voltage around an event.
struct Capture {
  double t0_s = 0.0;
  double dt_s = 0.0;
  std::string label;
  std::vector<double> v_bus_v;
  std::vector<double> branch_a_v;  // same length as v_bus_v, or empty
  std::vector<double> branch_b_v;
};

/// Uniformly sampled record of one row. The first block of channels is the
/// CSV contract; the aux block is kept in memory and exported separately.
struct WaveformLog {
  double dt_s = 1e-3;
  double v_nom_v = 800.0;

  std::vector<double> t_s;
  std::vector<double> v_bus_v;
  std::vector<double> p_load_kw;
  std::vector<double> dru_p_kw;
  std::vector<double> soc;
  std::vector<double> r_up_kw;
  std::vector<double> r_dn_kw;
  std::vector<double> sst_p_kw;
  std::vector<double> pcc_p_kw;
  std::vector<double> p_chg_kw;
  std::vector<int> tier;
  std::vector<std::string> event;  // '|' joined marker names for the sample

  // aux channels (may be empty for imported logs)
  std::vector<double> p_avg_kw;
  std::vector<double> h_mv_kw;
  std::vector<double> sst_setpoint_kw;
  std::vector<std::uint8_t> floors_ok;
  std::vector<std::string> veto;
  std::vector<double> branch_a_v;
  std::vector<double> branch_b_v;
  std::vector<double> reserve_sst_setpoint_kw;

  std::vector<Marker> markers;
  std::vector<Capture> captures;

  std::size_t size() const { return t_s.size(); }
  bool empty() const { return t_s.empty(); }

  void reserve(std::size_t n);
  /// Index of the first sample at or after t (clamped to size()).
  std::size_t index_at(double t) const;
  std::vector<double> markers_named(std::string_view name) const;
};

inline constexpr std::string_view kLogHeader =
    "t_s,v_bus_v,p_load_kw,dru_p_kw,soc,r_up_kw,r_dn_kw,sst_p_kw,pcc_p_kw,p_chg_kw,tier,event";
inline constexpr std::string_view kAuxHeader =
    "t_s,p_avg_kw,h_mv_kw,sst_setpoint_kw,floors_ok,veto,branch_a_v,branch_b_v";
inline constexpr std::string_view kCaptureHeader = "t_s,v_bus_v,branch_a_v,branch_b_v,window";

std::string log_to_csv(const WaveformLog& log);
std::string aux_to_csv(const WaveformLog& log);
std::string captures_to_csv(const WaveformLog& log);

/// Parses a log CSV. Markers are rebuilt from the event column at sample
/// times; v_nom is taken from the caller. Throws ParseError / MissingChannel.
WaveformLog log_from_csv(std::string_view text, double v_nom_v);
/// Adds full-rate captures from a captures CSV to an existing log.
void captures_from_csv(std::string_view text, WaveformLog& log);

}  // namespace rowsim
