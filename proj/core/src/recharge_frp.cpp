#include "rowsim/recharge_frp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const RechargeConfig& cfg) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(cfg.l1 < cfg.l2, "l1 must be < l2");
  need(cfg.l1 >= 0.0 && cfg.l2 <= 1.0, "l1, l2 must lie in [0, 1]");
  need(cfg.r_safety_kw >= 0.0, "r_safety must be >= 0");
  need(cfg.ramp_cap_kw_per_s > 0.0 && cfg.ramp_cap_kw_per_s <= 50.0, "ramp_cap must lie in (0, 50] kW/s");
  need(cfg.urgency_gain >= 1.0, "urgency_gain must be >= 1");
  need(cfg.urgency_soc > cfg.soc_min, "urgency_soc must be > soc_min");
  need(cfg.floor_up_kw >= 0.0 && cfg.floor_dn_kw >= 0.0, "floors must be >= 0");
  need(cfg.avg_windows_s[0] > 0.0 && cfg.avg_windows_s[1] > 0.0 && cfg.avg_windows_s[2] > 0.0,
       "averaging windows must be > 0");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "recharge: " + bad);
}

std::string_view to_string(Veto v) {
  switch (v) {
    case Veto::None: return "";
    case Veto::ReachedL2: return "reached_L2";
    case Veto::FloorViolation: return "floor_violation";
    case Veto::HeadroomLoss: return "headroom_loss";
    case Veto::TopologyChange: return "topology_change";
    case Veto::LocalFault: return "local_fault";
    case Veto::TierZero: return "tier0";
    case Veto::ReserveUnitActive: return "reserve_unit_active";
  }
  return "";
}

double recharge_command(double p_avg_kw, double p_load_kw, double h_mv_kw, bool floors_ok, const RechargeConfig& cfg) {
  if (!floors_ok) return 0.0;
  return std::max(0.0, std::min(h_mv_kw, p_avg_kw - p_load_kw - cfg.r_safety_kw));
}

AdmissionResult admission_step(double soc, Phase phase, double v_dev, bool floors_ok, const RechargeConfig& cfg,
                               bool active, const AdmissionContext& ctx) {
  if (ctx.mv_event_pending) return {false, active ? Veto::TopologyChange : Veto::None};
  if (ctx.local_fault || std::abs(v_dev) > cfg.local_fault_v) return {false, active ? Veto::LocalFault : Veto::None};
  if (!floors_ok) return {false, active ? Veto::FloorViolation : Veto::None};
  if (!ctx.headroom_ok) return {false, active ? Veto::HeadroomLoss : Veto::None};
  if (active) {
    if (soc >= cfg.l2) return {false, Veto::ReachedL2};
    return {true, Veto::None};
  }
  const bool blackout = cfg.comms_blackout && phase == Phase::Comms;
  return {soc < cfg.l1 && !blackout, Veto::None};
}

double urgency_scale(double soc, const RechargeConfig& cfg) {
  if (soc >= cfg.urgency_soc) return 1.0;
  const double x = std::clamp((cfg.urgency_soc - soc) / (cfg.urgency_soc - cfg.soc_min), 0.0, 1.0);
  return 1.0 + (cfg.urgency_gain - 1.0) * x;
}

FlatAverage::FlatAverage(const std::array<double, 3>& windows_s, double tick_s, double seed_kw) {
  for (std::size_t i = 0; i < 3; ++i) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(windows_s[i] / tick_s)));
    w_[i].ring.assign(n, seed_kw);
    w_[i].sum = seed_kw * static_cast<double>(n);
  }
}

void FlatAverage::push(double mean_kw) {
  for (auto& w : w_) {
    w.sum += mean_kw - w.ring[w.head];
    w.ring[w.head] = mean_kw;
    w.head = (w.head + 1) % w.ring.size();
  }
}

double FlatAverage::value() const {
  double v = units::kInf;
  for (const auto& w : w_) v = std::min(v, w.sum / static_cast<double>(w.ring.size()));
  return v;
}

double govern_recharge(double prev_kw, double target_kw, double cap_kw, double ramp_kw_per_s, double dt_s) {
  const double step = ramp_kw_per_s * dt_s;
  double p = std::clamp(target_kw, prev_kw - step, prev_kw + step);
  return std::max(0.0, std::min(p, cap_kw));
}

double valley_cap_kw(double margin_kw, double ramp_kw_per_s, double margin_slew_kw_per_s) {
  if (margin_kw <= 0.0) return 0.0;
  if (margin_slew_kw_per_s <= 0.0) return units::kInf;
  return ramp_kw_per_s / margin_slew_kw_per_s * margin_kw;
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::Tier0: return "Tier0";
    case Tier::Tier1: return "Tier1";
    case Tier::Tier2: return "Tier2";
  }
  return "";
}

TierStep tier_step(const FrpState& s, const TickEvents& ev, double dt_s, const TierConfig& cfg) {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "tier_step needs dt > 0");
  TierStep out{s, std::nullopt};
  FrpState& n = out.state;
  n.comm_ok = ev.comm_ok;
  n.clock_skew_ms = ev.clock_skew_ms;
  const bool healthy = ev.comm_ok && ev.clock_skew_ms <= cfg.skew_limit_ms;
  if (!healthy) {
    n.tier = Tier::Tier0;
    n.healthy_s = 0.0;
    n.recharge_active = false;
    n.p_chg_kw = 0.0;
  } else {
    n.healthy_s += dt_s;
    if (n.tier == Tier::Tier0 && n.healthy_s >= cfg.reentry_dwell_s - 1e-9) n.tier = Tier::Tier1;
    if (n.tier != Tier::Tier0) n.tier = ev.allocator_heartbeat ? Tier::Tier2 : Tier::Tier1;
  }
  if (ev.commit_age_ms) {
    n.last_command_age_ms = *ev.commit_age_ms;
    out.commit_accepted = n.tier != Tier::Tier0 && *ev.commit_age_ms <= cfg.commit_budget_ms;
  }
  return out;
}

}  // namespace rowsim
