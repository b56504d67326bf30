#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "rowsim/workload.hpp"

namespace rowsim {

struct RechargeConfig {
  double l1 = 0.55;
  double l2 = 0.80;
  double r_safety_kw = 50.0;
  double ramp_cap_kw_per_s = 50.0;
  bool comms_blackout = true;
  double urgency_soc = 0.52;
  double urgency_gain = 2.0;
  double soc_min = 0.5;
  double floor_up_kw = 5.0;
  double floor_dn_kw = 5.0;
  double local_fault_v = 40.0;   // |v_dev| beyond this is treated as a local fault
  double load_slew_kw_per_s = 0.0;  // 0 = derive from the load profile
  std::array<double, 3> avg_windows_s{10.0, 60.0, 600.0};
  bool enabled = true;
};

void validate(const RechargeConfig& cfg);

enum class Veto {
  None,
  ReachedL2,
  FloorViolation,
  HeadroomLoss,
  TopologyChange,
  LocalFault,
  TierZero,
  ReserveUnitActive,
};

std::string_view to_string(Veto v);
/// ReachedL2 winds recharge down under the ramp cap; every other reason freezes it at once.
constexpr bool is_freeze(Veto v) { return v != Veto::None && v != Veto::ReachedL2; }

/// max(0, min(h_mv, p_avg - p_load - r_safety)) when floors hold, else 0.
double recharge_command(double p_avg_kw, double p_load_kw, double h_mv_kw, bool floors_ok, const RechargeConfig& cfg);

struct AdmissionContext {
  bool mv_event_pending = false;  // FLISR or topology change in progress
  bool headroom_ok = true;
  bool local_fault = false;
};

struct AdmissionResult {
  bool active;
  Veto veto;
};

AdmissionResult admission_step(double soc, Phase phase, double v_dev, bool floors_ok, const RechargeConfig& cfg,
                               bool active, const AdmissionContext& ctx = {});

double urgency_scale(double soc, const RechargeConfig& cfg);

/// Minimum of trailing means over nested windows, fed once per control tick.
class FlatAverage {
 public:
  FlatAverage(const std::array<double, 3>& windows_s, double tick_s, double seed_kw);
  void push(double mean_kw);
  double value() const;

 private:
  struct Window {
    std::vector<double> ring;
    std::size_t head = 0;
    double sum = 0.0;
  };
  std::array<Window, 3> w_;
};

/// Per-step slew governor: follows target under the ramp cap, never above cap.
double govern_recharge(double prev_kw, double target_kw, double cap_kw, double ramp_kw_per_s, double dt_s);

/// Cap that lets p_chg reach zero exactly as the valley margin closes while
/// falling no faster than the ramp cap: kappa * margin, kappa = ramp / margin slew.
double valley_cap_kw(double margin_kw, double ramp_kw_per_s, double margin_slew_kw_per_s);

enum class Tier { Tier0 = 0, Tier1 = 1, Tier2 = 2 };
std::string_view to_string(Tier t);

struct TierConfig {
  double skew_limit_ms = 10.0;
  double reentry_dwell_s = 5.0;
  double commit_budget_ms = 1.0;
};

struct FrpState {
  Tier tier = Tier::Tier1;
  bool comm_ok = true;
  double clock_skew_ms = 0.0;
  double last_command_age_ms = 0.0;
  bool recharge_active = false;
  double p_chg_kw = 0.0;
  double healthy_s = 1e9;  // time since comms last became healthy
};

struct TickEvents {
  bool comm_ok = true;
  double clock_skew_ms = 0.0;
  bool allocator_heartbeat = false;
  std::optional<double> commit_age_ms;  // a reserve commit arriving this tick
};

struct TierStep {
  FrpState state;
  std::optional<bool> commit_accepted;
};

TierStep tier_step(const FrpState& state, const TickEvents& ev, double dt_s, const TierConfig& cfg = {});

}  // namespace rowsim
