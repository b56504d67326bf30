#include "rowsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace rowsim {

using nlohmann::ordered_json;

namespace {

ordered_json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

ordered_json check_json(const CheckResult& c) {
  ordered_json j;
  j["name"] = c.name;
  j["evaluated"] = c.evaluated;
  j["pass"] = c.pass;
  j["measured"] = num(c.measured);
  j["limit"] = num(c.limit);
  j["margin"] = num(c.margin);
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

ordered_json gate_json(const GateResult& g) {
  return {{"pass", g.pass}, {"required", num(g.required)}, {"available", num(g.available)}, {"margin", num(g.margin)}};
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::string compliance_to_json(const ComplianceReport& r) {
  ordered_json j;
  j["pass"] = r.pass;
  j["checks"] = ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
  j["events"] = ordered_json::array();
  for (const auto& e : r.events) {
    j["events"].push_back({{"marker", e.marker},
                           {"t_s", num(e.t_s)},
                           {"depth_frac", num(e.depth_frac)},
                           {"recovery_s", num(e.recovery_s)},
                           {"overshoot_frac", num(e.overshoot_frac)},
                           {"monotone", e.monotone},
                           {"from_capture", e.from_capture}});
  }
  if (r.phase_margin) {
    const auto& pm = *r.phase_margin;
    ordered_json p;
    p["method"] = pm.method;
    p["value_deg"] = num(pm.value_deg);
    if (pm.linearized_deg) p["linearized_deg"] = num(*pm.linearized_deg);
    if (pm.fitted_deg) p["fitted_deg"] = num(*pm.fitted_deg);
    if (pm.zeta) p["zeta"] = num(*pm.zeta);
    j["phase_margin"] = p;
  }
  j["findings"] = r.findings;
  return j.dump(2) + "\n";
}

std::string compliance_to_text(const ComplianceReport& r) {
  std::ostringstream os;
  os << "overall: " << (r.pass ? "PASS" : "FAIL") << "\n";
  auto line = [&](const CheckResult& c) {
    os << (c.evaluated ? (c.pass ? "  pass " : "  FAIL ") : "  skip ") << c.name << "  measured=" << fmt(c.measured)
       << " limit=" << fmt(c.limit);
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << "\n";
  };
  for (const auto& c : r.checks) {
    if (c.evaluated && !c.pass) line(c);
  }
  for (const auto& c : r.checks) {
    if (!c.evaluated || c.pass) line(c);
  }
  for (const auto& f : r.findings) os << "  finding: " << f << "\n";
  return os.str();
}

std::string sizing_to_json(const SizingReport& s) {
  ordered_json j;
  j["pass"] = s.pass();
  j["n_required"] = s.n_required;
  j["c_bus_required_mf"] = num(s.c_bus_required_mf);
  j["pole_rad_s"] = num(s.pole_rad_s);
  j["predicted_recovery_ms"] = num(s.predicted_recovery_ms);
  j["recovery_ok"] = s.recovery_ok;
  j["bridge_energy_kwh"] = num(s.bridge_energy_kwh);
  j["lifecycle_factor"] = num(s.lifecycle_factor);
  j["count"] = {{"raw", num(s.count.raw)},
                {"n_power", num(s.count.n_power)},
                {"n_energy", num(s.count.n_energy)},
                {"n_thermal", num(s.count.n_thermal)},
                {"n_slew", num(s.count.n_slew)}};
  j["gates"] = {{"power", gate_json(s.gates.power)},
                {"energy", gate_json(s.gates.energy)},
                {"thermal", gate_json(s.gates.thermal)},
                {"slew", gate_json(s.gates.slew)}};
  return j.dump(2) + "\n";
}

std::string sizing_to_text(const SizingReport& s) {
  std::ostringstream os;
  os << "shelves N          " << s.n_required << "  (raw " << fmt(s.count.raw) << ", lifecycle x" << fmt(s.lifecycle_factor)
     << ")\n";
  os << "bus capacitance    " << fmt(s.c_bus_required_mf) << " mF\n";
  os << "droop pole         " << fmt(s.pole_rad_s) << " rad/s, 1% recovery " << fmt(s.predicted_recovery_ms) << " ms"
     << (s.recovery_ok ? "" : "  (over target)") << "\n";
  os << "bridge energy      " << fmt(s.bridge_energy_kwh) << " kWh\n";
  auto gate = [&](const char* name, const GateResult& g) {
    os << "gate " << name << (g.pass ? "  pass" : "  FAIL") << "  required=" << fmt(g.required)
       << " available=" << fmt(g.available) << "\n";
  };
  gate("power  ", s.gates.power);
  gate("energy ", s.gates.energy);
  gate("thermal", s.gates.thermal);
  gate("slew   ", s.gates.slew);
  os << "overall            " << (s.pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string events_to_json(const SimResult& r) {
  ordered_json j;
  j["markers"] = ordered_json::array();
  for (const auto& m : r.log.markers) {
    ordered_json e{{"t_s", num(m.t_s)}, {"name", m.name}};
    if (!m.detail.empty()) e["detail"] = m.detail;
    j["markers"].push_back(e);
  }
  j["trips"] = ordered_json::array();
  for (const auto& t : r.trips) {
    ordered_json e{{"device", t.device},
                   {"sectionalizer", t.sectionalizer},
                   {"t_fault_s", num(t.t_fault_s)},
                   {"t_trip_s", num(t.t_trip_s)},
                   {"clear_time_s", num(t.clear_time_s)},
                   {"clamp_energy_j", num(t.clamp_energy_j)},
                   {"i_interrupt_a", num(t.i_interrupt_a)},
                   {"isolated", t.isolated}};
    if (t.extinguished) e["extinguished"] = *t.extinguished;
    j["trips"].push_back(e);
  }
  j["spurious_trips"] = r.spurious_trips;
  j["islands"] = ordered_json::array();
  for (const auto& p : r.islands) {
    j["islands"].push_back({{"alarm", p.alarm}, {"trip", p.trip}, {"isolated", p.isolated}, {"cost", p.cost}});
  }
  j["flisr"] = ordered_json::array();
  for (const auto& p : r.flisr) {
    ordered_json e;
    e["faulted_segment"] = p.faulted_segment;
    e["t_fault_s"] = num(p.t_fault_s);
    e["t_restore_s"] = num(p.t_restore_s);
    e["t_confirm_s"] = num(p.t_confirm_s);
    e["radial"] = p.radial;
    e["interrupted_rows"] = p.interrupted_rows;
    e["restored_rows"] = p.restored_rows;
    e["unrestorable_rows"] = p.unrestorable_rows;
    e["actions"] = ordered_json::array();
    for (const auto& a : p.actions) e["actions"].push_back({{"t_s", num(a.t_s)}, {"switch", a.switch_id}, {"close", a.close}});
    e["segment_currents_a"] = ordered_json::object();
    for (const auto& [id, i] : segment_currents(p.after)) e["segment_currents_a"][id] = num(i);
    j["flisr"].push_back(e);
  }
  j["engagements"] = ordered_json::array();
  for (const auto& g : r.engagements) {
    j["engagements"].push_back({{"t_arm_s", num(g.t_arm_s)},
                                {"t_engage_s", num(g.t_engage_s)},
                                {"v_pre_v", num(g.v_pre_v)},
                                {"v_engage_v", num(g.v_engage_v)}});
  }
  const auto& E = r.ledger;
  j["energy"] = {{"pcc_kwh", num(E.pcc_kwh)},
                 {"load_kwh", num(E.load_kwh)},
                 {"bank_delta_kwh", num(E.bank_delta_kwh)},
                 {"cap_delta_kwh", num(E.cap_delta_kwh)},
                 {"conversion_loss_kwh", num(E.conversion_loss_kwh)},
                 {"esr_loss_kwh", num(E.esr_loss_kwh)},
                 {"sst_internal_kwh", num(E.sst_internal_kwh)},
                 {"fault_kwh", num(E.fault_kwh)},
                 {"dru_out_kwh", num(E.dru_out_kwh)},
                 {"recharge_kwh", num(E.recharge_kwh)},
                 {"relative_error", num(E.relative_error())}};
  j["blowup"] = r.blowup;
  if (r.blowup) j["blowup_detail"] = r.blowup_detail;
  return j.dump(2) + "\n";
}

}  // namespace rowsim
