#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rowsim/dru_bank.hpp"

namespace rowsim {

/// Three-phase line current at unity power factor: kW / (sqrt(3) kV) = A.
double segment_current(double p_kw, double kv);

struct MvSegment {
  std::string id;
  double amp_cap_a = 400.0;
  double kv = 25.0;
  double load_kw = 0.0;            // demand of everything attached to this segment
  std::vector<std::string> rows;   // rows fed from this segment
};

/// Switch between two nodes; a node is a source id or a segment id.
struct MvSwitch {
  std::string id;
  std::string a;
  std::string b;
  bool normally_open = false;
  bool closed = true;
};

struct LoopTopology {
  std::vector<std::string> sources;
  std::vector<MvSegment> segments;
  std::vector<MvSwitch> switches;
  double flisr_delay_s = 1.5;
};

void validate(const LoopTopology& topo);

/// Two substations joined through four segments with one open tie between
/// F2 and F3; the simulated row hangs off F2.
LoopTopology default_loop(const std::string& row_id);

/// True when the closed-switch graph has no cycle.
bool is_radial(const LoopTopology& topo);

/// Segments reachable from a source over closed switches.
std::vector<std::string> energized_segments(const LoopTopology& topo);

/// Steady current per segment (A) for the current switch states; the flow
/// through a segment is its own load plus everything fed through it.
std::vector<std::pair<std::string, double>> segment_currents(const LoopTopology& topo);

struct SwitchAction {
  double t_s;
  std::string switch_id;
  bool close;
};

struct RowTrim {
  std::string row;
  double trim_kw;
};

inline constexpr double kRestoreConfirmS = 0.2;

struct RestorationPlan {
  std::string faulted_segment;
  std::vector<SwitchAction> actions;
  std::vector<std::string> interrupted_rows;  // lost supply at the fault
  std::vector<std::string> restored_rows;
  std::vector<std::string> unrestorable_rows; // bridge until exhaustion, then shed
  std::vector<RowTrim> trims;
  double t_fault_s = 0.0;
  double t_restore_s = 0.0;   // tie close
  double t_confirm_s = 0.0;   // SSTs unblocked
  bool radial = true;
  LoopTopology after;
};

/// Opens the faulted segment, closes one normally-open tie per de-energized
/// island at t_fault + flisr_delay, and trims rows on the restored block when
/// an amp cap would be exceeded. Throws UnknownLocation.
RestorationPlan flisr_reconfigure(const std::string& fault_segment, const LoopTopology& topo, double t_fault_s);

struct BridgeRow {
  std::string id;
  double p_row_kw;
  DruBankState bank;
  ShelfSpec shelf;
};

struct BridgeVerdict {
  std::string id;
  bool pass;
  bool energy_ok;
  bool power_ok;
  double e_need_kwh;
  double e_up_kwh;
  double r_up_bridge_kw;  // min(N p_pk, e_up / gap)
};

std::vector<BridgeVerdict> bridge_check(const std::vector<BridgeRow>& rows, double flisr_delay_s);

struct PodConfig {
  double p_mv_kw = 3500.0;
  int n_rows = 4;
  double p_row_kw = 1000.0;
  double u = 0.8;
  double r = 0.05;
  double l = 0.03;
  double p_assist_max_kw = 100.0;
  double t_bridge_s = 3.0;
  double feeder_ramp_kw_per_s = 50.0;    // ramp headroom available for recharge starts
  double recharge_ramp_kw_per_s = 50.0;  // per admitted row
  double stale_ms = 200.0;
  double cadence_s = 1.0;
};

void validate(const PodConfig& cfg);

struct RowSummary {
  std::string id;
  double p_demand_kw = 0.0;
  double p_chg_request_kw = 0.0;  // 0 = no recharge wanted
  double assist_need_kw = 0.0;
  double telemetry_age_ms = 0.0;
  double last_safe_setpoint_kw = 0.0;
};

struct RowAllocation {
  std::string id;
  double sst_setpoint_kw = 0.0;
  double recharge_kw = 0.0;
  bool recharge_window = false;
  bool deferred = false;
  double assist_kw = 0.0;
  bool stale = false;
};

struct PodAllocation {
  std::vector<RowAllocation> rows;
  double usable_kw = 0.0;
  double total_kw = 0.0;
  bool trimmed = false;
  double trim_scale = 1.0;
};

PodAllocation pod_allocate(const std::vector<RowSummary>& rows, const PodConfig& cfg, long tick);

struct Oversubscription {
  bool feasible;
  double required_kw;
  double margin_kw;
  double ratio;       // p_mv / (N p_row)
  double safe_ratio;  // required / (N p_row)
};

Oversubscription oversubscription_check(const PodConfig& cfg);

}  // namespace rowsim
