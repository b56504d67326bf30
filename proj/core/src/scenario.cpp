#include "rowsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

using nlohmann::json;

namespace {

struct UnitRow {
  const char* unit;
  double scale;
};

const std::map<std::string, std::vector<UnitRow>, std::less<>>& unit_table() {
  static const std::map<std::string, std::vector<UnitRow>, std::less<>> t = {
      {"power", {{"W", 1e-3}, {"kW", 1.0}, {"MW", 1e3}, {"kVA", 1.0}, {"MVA", 1e3}}},
      {"energy", {{"J", 1.0 / 3.6e6}, {"kJ", 1.0 / 3600.0}, {"Wh", 1e-3}, {"kWh", 1.0}, {"MWh", 1e3}}},
      {"time", {{"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}, {"min", 60.0}, {"h", 3600.0}}},
      {"time_ms", {{"us", 1e-3}, {"ms", 1.0}, {"s", 1e3}}},
      {"time_us", {{"ns", 1e-3}, {"us", 1.0}, {"ms", 1e3}, {"s", 1e6}}},
      {"voltage", {{"mV", 1e-3}, {"V", 1.0}, {"kV", 1e3}}},
      {"kv", {{"V", 1e-3}, {"kV", 1.0}}},
      {"current", {{"mA", 1e-3}, {"A", 1.0}, {"kA", 1e3}}},
      {"capacitance", {{"uF", 1e-3}, {"mF", 1.0}, {"F", 1e3}}},
      {"inductance", {{"nH", 1e-3}, {"uH", 1.0}, {"mH", 1e3}, {"H", 1e6}}},
      {"resistance_mohm", {{"uOhm", 1e-3}, {"mOhm", 1.0}, {"Ohm", 1e3}}},
      {"resistance_kohm", {{"Ohm", 1e-3}, {"kOhm", 1.0}, {"MOhm", 1e3}}},
      {"droop", {{"mV/A", 1.0}, {"V/A", 1e3}, {"mOhm", 1.0}}},
      {"energy_j", {{"mJ", 1e-3}, {"J", 1.0}, {"kJ", 1e3}}},
      {"power_rate", {{"W/s", 1e-3}, {"kW/s", 1.0}, {"MW/s", 1e3}}},
      {"current_rate", {{"A/s", 1.0}, {"A/ms", 1e3}, {"A/us", 1e6}, {"kA/s", 1e3}}},
      {"frequency", {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}}},
      {"fraction", {{"", 1.0}, {"%", 1e-2}}},
      {"ratio", {{"", 1.0}, {"x", 1.0}}},
      {"angle", {{"deg", 1.0}}},
  };
  return t;
}

std::string normalize_unit(std::string u) {
  // micro sign and greek mu both map to 'u'; ohm symbol maps to "Ohm"
  const std::pair<const char*, const char*> subs[] = {{"\xC2\xB5", "u"}, {"\xCE\xBC", "u"}, {"\xCE\xA9", "Ohm"}};
  for (const auto& [from, to] : subs) {
    for (auto p = u.find(from); p != std::string::npos; p = u.find(from)) u.replace(p, std::string(from).size(), to);
  }
  return u;
}

struct Ctx {
  std::vector<std::string> errors;
};

class Obj {
 public:
  Obj(const json& j, std::string path, Ctx& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) throw Error(ErrorCode::ParseError, "field '" + path_ + "' must be an object");
  }
  ~Obj() = default;
  Obj(const Obj&) = delete;
  Obj& operator=(const Obj&) = delete;

  std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  bool has(std::string_view key) {
    used_.insert(std::string(key));
    return j_.contains(std::string(key));
  }

  const json& raw(std::string_view key) {
    used_.insert(std::string(key));
    return j_.at(std::string(key));
  }

  void q(std::string_view key, std::string_view dim, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(std::string(key));
    if (v.is_number() && (dim == "fraction" || dim == "ratio")) {
      out = v.get<double>();
      return;
    }
    if (!v.is_string()) throw Error(ErrorCode::ParseError, "field '" + at(key) + "': expected a quantity string with a unit");
    try {
      out = parse_quantity(v.get<std::string>(), dim);
    } catch (const Error& e) {
      const std::string w = e.what();
      const std::string code = std::string(to_string(e.code())) + ": ";
      throw Error(ErrorCode::ParseError, "field '" + at(key) + "': " + (w.rfind(code, 0) == 0 ? w.substr(code.size()) : w));
    }
  }

  void count(std::string_view key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(std::string(key));
    if (!v.is_number_integer()) throw Error(ErrorCode::ParseError, "field '" + at(key) + "': expected an integer count");
    out = v.get<int>();
  }

  void flag(std::string_view key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(std::string(key));
    if (!v.is_boolean()) throw Error(ErrorCode::ParseError, "field '" + at(key) + "': expected true or false");
    out = v.get<bool>();
  }

  void text(std::string_view key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(std::string(key));
    if (!v.is_string()) throw Error(ErrorCode::ParseError, "field '" + at(key) + "': expected a string");
    out = v.get<std::string>();
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) ctx_.errors.push_back("unknown field '" + at(it.key()) + "'");
    }
  }

  const std::string& path() const { return path_; }
  Ctx& ctx() { return ctx_; }

 private:
  const json& j_;
  std::string path_;
  Ctx& ctx_;
  std::set<std::string> used_;
};

int parse_branch(const std::string& id, const std::string& where) {
  if (id.size() < 2 || id[0] != 'B') throw Error(ErrorCode::ParseError, where + ": branch ids look like 'B3'");
  try {
    return std::stoi(id.substr(1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, where + ": bad branch id '" + id + "'");
  }
}

int parse_segment(const std::string& id, const std::string& where) {
  if (id.size() < 2 || id[0] != 'S') throw Error(ErrorCode::ParseError, where + ": segment ids look like 'S1'");
  try {
    return std::stoi(id.substr(1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, where + ": bad segment id '" + id + "'");
  }
}

void read_envelope(Obj& o, WorkloadEnvelope& e) {
  o.q("p_avg", "power", e.p_avg_kw);
  o.q("alpha_max", "fraction", e.alpha_max);
  o.q("t_surge", "time", e.t_surge_s);
  o.q("dt_edge", "time", e.dt_edge_s);
  o.q("par", "ratio", e.par);
  o.q("rho_corr", "fraction", e.rho_corr);
  o.q("idle_floor", "fraction", e.idle_floor);
  o.count("n_racks", e.n_racks);
  o.q("pdu_slew", "power_rate", e.pdu_slew_kw_per_s);
  o.q("pdu_cap", "power", e.pdu_cap_kw);
  o.flag("enforce_band", e.enforce_band);
  o.finish();
}

void read_bus(Obj& o, BusParams& b) {
  o.q("v_nom", "voltage", b.v_nom_v);
  o.q("c_bus", "capacitance", b.c_bus_mf);
  o.q("l_loop", "inductance", b.l_loop_uh);
  o.q("dru_latency", "time_us", b.dru_latency_us);
  o.q("esr", "resistance_mohm", b.esr_mohm);
  o.finish();
}

void read_shelf(Obj& o, ShelfSpec& s) {
  o.q("p_pk", "power", s.p_pk_kw);
  o.q("p_cont", "power", s.p_cont_kw);
  o.q("e_use", "energy", s.e_use_kwh);
  o.q("droop", "droop", s.droop_mv_per_a);
  o.q("slew", "power_rate", s.slew_kw_per_s);
  o.q("loop_bw", "frequency", s.loop_bw_hz);
  o.finish();
}

void read_bank(Obj& o, DruBankState& b) {
  o.count("n_shelves", b.n_shelves);
  o.q("soc", "fraction", b.soc);
  o.q("soc_min", "fraction", b.soc_min);
  o.q("soc_max", "fraction", b.soc_max);
  o.q("t_star", "time", b.t_star_s);
  o.finish();
}

void read_sst(Obj& o, SstSpec& s) {
  o.q("p_rated", "power", s.p_rated_kw);
  o.q("tau", "time", s.tau_s);
  o.q("droop", "droop", s.droop_mv_per_a);
  o.q("ramp_cap", "power_rate", s.ramp_cap_kw_per_s);
  o.count("n_units", s.n_units);
  o.flag("reverse_internal_ok", s.reverse_internal_ok);
  o.q("reverse_window", "time", s.reverse_window_s);
  o.q("pcc_dpdt_cap", "power_rate", s.pcc_dpdt_cap_kw_per_s);
  o.q("efficiency", "fraction", s.efficiency);
  o.finish();
}

void read_recharge(Obj& o, RechargeConfig& r) {
  o.flag("enabled", r.enabled);
  o.q("l1", "fraction", r.l1);
  o.q("l2", "fraction", r.l2);
  o.q("r_safety", "power", r.r_safety_kw);
  o.q("ramp_cap", "power_rate", r.ramp_cap_kw_per_s);
  o.flag("comms_blackout", r.comms_blackout);
  o.q("urgency_soc", "fraction", r.urgency_soc);
  o.q("urgency_gain", "ratio", r.urgency_gain);
  o.q("local_fault", "voltage", r.local_fault_v);
  o.q("load_slew", "power_rate", r.load_slew_kw_per_s);
  if (o.has("windows")) {
    const json& w = o.raw("windows");
    if (!w.is_array() || w.size() != 3) throw Error(ErrorCode::ParseError, "field '" + o.at("windows") + "': expected three durations");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!w[i].is_string()) throw Error(ErrorCode::ParseError, "field '" + o.at("windows") + "': expected quantity strings");
      r.avg_windows_s[i] = parse_quantity(w[i].get<std::string>(), "time");
    }
  }
  o.finish();
}

void read_tier(Obj& o, TierConfig& t) {
  o.q("skew_limit", "time_ms", t.skew_limit_ms);
  o.q("reentry_dwell", "time", t.reentry_dwell_s);
  o.q("commit_budget", "time_ms", t.commit_budget_ms);
  o.finish();
}

void read_protection(Obj& o, ProtectionConfig& p) {
  o.q("t_clear_branch", "time_us", p.t_clear_branch_us);
  o.q("t_iso_row", "time_ms", p.t_iso_row_ms);
  o.q("t_mv", "time", p.t_mv_s);
  o.q("e_clamp_max", "energy_j", p.e_clamp_max_j);
  o.q("trip_di_dt", "current_rate", p.trip_di_dt_a_per_s);
  o.q("pickup", "current", p.pickup_a);
  o.q("lifecycle_margin", "ratio", p.lifecycle_margin);
  o.q("imd_alarm", "resistance_kohm", p.imd_alarm_kohm);
  o.q("imd_trip", "resistance_kohm", p.imd_trip_kohm);
  o.q("detect_delay", "time_us", p.detect_delay_us);
  o.q("interrupt", "time_us", p.interrupt_us);
  o.q("coherence_window", "time_us", p.coherence_window_us);
  o.q("reclose_dwell", "time", p.reclose_dwell_s);
  o.finish();
}

void read_row(Obj& o, Scenario& sc) {
  o.count("n_segments", sc.row.n_segments);
  o.count("branches_per_segment", sc.row.branches_per_segment);
  o.q("l_branch", "inductance", sc.row.l_branch_uh);
  std::string a;
  std::string b;
  o.text("tap_a", a);
  o.text("tap_b", b);
  if (!a.empty()) sc.tap_a_branch = parse_branch(a, o.at("tap_a"));
  if (!b.empty()) sc.tap_b_branch = parse_branch(b, o.at("tap_b"));
  o.q("tap_series", "resistance_mohm", sc.tap_series_mohm);
  o.q("imd_response", "time", sc.imd_response_s);
  o.finish();
}

void read_mv(Obj& o, LoopTopology& t) {
  o.q("flisr_delay", "time", t.flisr_delay_s);
  if (o.has("sources")) {
    t.sources.clear();
    for (const auto& s : o.raw("sources")) t.sources.push_back(s.get<std::string>());
  }
  if (o.has("segments")) {
    t.segments.clear();
    std::size_t i = 0;
    for (const auto& s : o.raw("segments")) {
      Obj so(s, o.at("segments") + "[" + std::to_string(i++) + "]", o.ctx());
      MvSegment seg;
      so.text("id", seg.id);
      so.q("amp_cap", "current", seg.amp_cap_a);
      so.q("kv", "kv", seg.kv);
      so.q("load", "power", seg.load_kw);
      if (so.has("rows")) {
        for (const auto& r : so.raw("rows")) seg.rows.push_back(r.get<std::string>());
      }
      so.finish();
      t.segments.push_back(seg);
    }
  }
  if (o.has("switches")) {
    t.switches.clear();
    std::size_t i = 0;
    for (const auto& s : o.raw("switches")) {
      Obj so(s, o.at("switches") + "[" + std::to_string(i++) + "]", o.ctx());
      MvSwitch sw;
      so.text("id", sw.id);
      so.text("a", sw.a);
      so.text("b", sw.b);
      so.flag("normally_open", sw.normally_open);
      sw.closed = !sw.normally_open;
      so.flag("closed", sw.closed);
      so.finish();
      t.switches.push_back(sw);
    }
  }
  o.finish();
}

void read_pod(Obj& o, PodConfig& p) {
  o.q("p_mv", "power", p.p_mv_kw);
  o.count("n_rows", p.n_rows);
  o.q("p_row", "power", p.p_row_kw);
  o.q("u", "fraction", p.u);
  o.q("r", "fraction", p.r);
  o.q("l", "fraction", p.l);
  o.q("p_assist_max", "power", p.p_assist_max_kw);
  o.q("t_bridge", "time", p.t_bridge_s);
  o.q("feeder_ramp", "power_rate", p.feeder_ramp_kw_per_s);
  o.q("recharge_ramp", "power_rate", p.recharge_ramp_kw_per_s);
  o.q("stale", "time_ms", p.stale_ms);
  o.finish();
}

void read_limits(Obj& o, ContractLimits& l) {
  o.q("steady_band", "fraction", l.steady_band);
  o.q("transient_max", "fraction", l.transient_max);
  o.q("recovery_max", "time", l.recovery_max_s);
  o.q("recovery_dwell", "time", l.recovery_dwell_s);
  o.q("phase_margin_min", "angle", l.phase_margin_min_deg);
  o.q("osc_lo", "frequency", l.osc_lo_hz);
  o.q("osc_hi", "frequency", l.osc_hi_hz);
  o.q("osc_power_max", "fraction", l.osc_power_max);
  o.q("overshoot_max", "fraction", l.overshoot_max);
  o.q("floor_r_up", "power", l.floor_r_up_kw);
  o.q("floor_r_dn", "power", l.floor_r_dn_kw);
  o.q("pcc_band_ratio_max", "fraction", l.pcc_band_ratio_max);
  o.q("pcc_dpdt_max", "power_rate", l.pcc_dpdt_max_kw_per_s);
  o.finish();
}

void read_event(Obj& o, Scenario& sc) {
  std::string type;
  o.text("type", type);
  const double h = sc.horizon_s;
  if (type == "burst") {
    BurstSpec b{0.0, sc.env.t_surge_s, sc.env.alpha_max};
    o.q("start", "time", b.start_s);
    o.q("width", "time", b.width_s);
    o.q("alpha", "fraction", b.alpha);
    sc.bursts.push_back(b);
  } else if (type == "step") {
    StepSpec s{0.0, 0.0};
    o.q("t", "time", s.t_s);
    o.q("dp", "power", s.dp_kw);
    sc.steps.push_back(s);
  } else if (type == "valley") {
    ValleySpec v{0.0, 0.0, 0.0};
    std::string phase = "idle";
    o.q("start", "time", v.start_s);
    o.q("width", "time", v.width_s);
    o.q("depth", "power", v.depth_kw);
    o.text("phase", phase);
    const auto p = parse_phase(phase);
    if (!p) throw Error(ErrorCode::ParseError, "field '" + o.at("phase") + "': unknown phase '" + phase + "'");
    v.phase = *p;
    sc.valleys.push_back(v);
  } else if (type == "train") {
    TrainSpec t{0.0, 0.0, 0.5, 1, sc.env.alpha_max};
    o.q("start", "time", t.start_s);
    o.q("period", "time", t.period_s);
    o.q("duty", "fraction", t.duty);
    o.count("n", t.n_bursts);
    o.q("alpha", "fraction", t.alpha);
    sc.trains.push_back(t);
  } else if (type == "fault") {
    FaultEvent f;
    std::string kind;
    o.text("kind", kind);
    const auto k = parse_fault_kind(kind);
    if (!k) throw Error(ErrorCode::ParseError, "field '" + o.at("kind") + "': unknown fault kind '" + kind + "'");
    f.kind = *k;
    o.q("t", "time", f.t_start_s);
    o.q("magnitude", f.kind == FaultKind::GroundFault ? "resistance_kohm" : "current", f.magnitude);
    if (o.has("branches")) {
      for (const auto& b : o.raw("branches")) f.branches.push_back(parse_branch(b.get<std::string>(), o.at("branches")));
    }
    std::string seg;
    o.text("segment", seg);
    if (!seg.empty()) f.segment = parse_segment(seg, o.at("segment"));
    if (o.has("offsets")) {
      for (const auto& x : o.raw("offsets")) f.branch_onset_offsets_us.push_back(parse_quantity(x.get<std::string>(), "time_us"));
    }
    sc.faults.push_back(f);
  } else if (type == "feeder_trip") {
    FeederTripSpec f{0.0, ""};
    o.q("t", "time", f.t_s);
    o.text("segment", f.segment);
    sc.feeder_trips.push_back(f);
  } else if (type == "comm_loss") {
    WindowSpec w{0.0, h};
    o.q("start", "time", w.t0_s);
    o.q("end", "time", w.t1_s);
    sc.comm_loss.push_back(w);
  } else if (type == "clock_skew") {
    WindowSpec w{0.0, h, 0.0};
    o.q("start", "time", w.t0_s);
    o.q("end", "time", w.t1_s);
    o.q("skew", "time_ms", w.value);
    sc.clock_skew.push_back(w);
  } else if (type == "unit_loss") {
    double t = 0.0;
    o.q("t", "time", t);
    sc.unit_losses_s.push_back(t);
  } else {
    throw Error(ErrorCode::ParseError, "field '" + o.at("type") + "': unknown event type '" + type + "'");
  }
  o.finish();
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(std::min(byte, text.size())), '\n')) + 1;
}

}  // namespace

double parse_quantity(std::string_view text, std::string_view dimension) {
  const auto& table = unit_table();
  auto it = table.find(dimension);
  if (it == table.end()) throw Error(ErrorCode::InvalidArgument, "unknown dimension '" + std::string(dimension) + "'");
  std::string s(text);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "'" + s + "' does not start with a number");
  }
  std::string unit = s.substr(pos);
  unit.erase(0, unit.find_first_not_of(' '));
  unit.erase(unit.find_last_not_of(' ') + 1 == 0 ? 0 : unit.find_last_not_of(' ') + 1);
  unit = normalize_unit(unit);
  for (const auto& row : it->second) {
    if (unit == row.unit) return v * row.scale;
  }
  std::string allowed;
  for (const auto& row : it->second) allowed += (allowed.empty() ? "" : ", ") + std::string(*row.unit ? row.unit : "(none)");
  if (unit.empty()) throw Error(ErrorCode::ParseError, "'" + s + "' is missing a unit (" + std::string(dimension) + ": " + allowed + ")");
  throw Error(ErrorCode::ParseError, "'" + s + "' has unit '" + unit + "', expected " + std::string(dimension) + " (" + allowed + ")");
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  Scenario sc;
  Ctx ctx;
  try {
    Obj top(doc, "", ctx);
    top.text("name", sc.name);
    top.q("horizon", "time", sc.horizon_s);
    if (top.has("seed")) {
      if (!doc["seed"].is_number_unsigned()) throw Error(ErrorCode::ParseError, "field 'seed': expected a non-negative integer");
      sc.seed = doc["seed"].get<std::uint64_t>();
    }
    top.q("electrical_dt", "time", sc.electrical_dt_s);
    top.q("log_dt", "time", sc.log_dt_s);
    top.q("capture_pre", "time", sc.capture_pre_s);
    top.q("capture_post", "time", sc.capture_post_s);
    top.q("p_initial", "power", sc.p_initial_kw);
    top.text("row_id", sc.row_id);
    sc.mv = default_loop(sc.row_id);

    auto section = [&](const char* key, auto&& fn) {
      if (!top.has(key)) return;
      Obj o(top.raw(key), key, ctx);
      fn(o);
    };
    section("envelope", [&](Obj& o) { read_envelope(o, sc.env); });
    section("bus", [&](Obj& o) { read_bus(o, sc.bus); });
    section("shelf", [&](Obj& o) { read_shelf(o, sc.shelf); });
    section("bank", [&](Obj& o) { read_bank(o, sc.bank); });
    section("sst", [&](Obj& o) { read_sst(o, sc.sst); });
    section("recharge", [&](Obj& o) { read_recharge(o, sc.recharge); });
    section("tier", [&](Obj& o) { read_tier(o, sc.tier); });
    section("protection", [&](Obj& o) { read_protection(o, sc.protection); });
    section("row", [&](Obj& o) { read_row(o, sc); });
    section("mv", [&](Obj& o) { read_mv(o, sc.mv); });
    section("pod", [&](Obj& o) { read_pod(o, sc.pod); });
    section("limits", [&](Obj& o) { read_limits(o, sc.limits); });
    if (top.has("events")) {
      const json& ev = top.raw("events");
      if (!ev.is_array()) throw Error(ErrorCode::ParseError, "field 'events' must be an array");
      for (std::size_t i = 0; i < ev.size(); ++i) {
        Obj o(ev[i], "events[" + std::to_string(i) + "]", ctx);
        read_event(o, sc);
      }
    }
    top.finish();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!ctx.errors.empty()) {
    std::string msg;
    for (const auto& e : ctx.errors) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorCode::ParseError, msg);
  }
  sc.recharge.soc_min = sc.bank.soc_min;
  sc.recharge.floor_up_kw = sc.limits.floor_r_up_kw;
  sc.recharge.floor_dn_kw = sc.limits.floor_r_dn_kw;
  validate(sc);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void validate(const Scenario& sc) {
  std::vector<std::string> errs;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      std::string w = e.what();
      const std::string code = std::string(to_string(e.code())) + ": ";
      errs.push_back(w.rfind(code, 0) == 0 ? w.substr(code.size()) : w);
    }
  };
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  guard([&] { validate(sc.env); });
  guard([&] { validate(sc.bus); });
  guard([&] { validate(sc.shelf); });
  guard([&] { validate(sc.bank); });
  guard([&] { validate(sc.sst); });
  guard([&] { validate(sc.recharge); });
  guard([&] { validate(sc.protection); });
  guard([&] { grading_audit(sc.protection); });
  guard([&] { validate(sc.mv); });
  guard([&] { validate(sc.pod); });
  guard([&] { validate(sc.limits); });
  if (sc.bank.n_shelves > 0) guard([&] { validate_hierarchy(sc.sst, equivalent_droop_ohm(sc.shelf, sc.bank.n_shelves)); });

  need(sc.horizon_s > 0.0, "horizon must be > 0");
  need(sc.electrical_dt_s > 0.0 && sc.electrical_dt_s <= 20e-6 + 1e-15, "electrical_dt must lie in (0, 20] us");
  const double ratio = sc.log_dt_s / sc.electrical_dt_s;
  need(sc.log_dt_s > 0.0 && std::abs(ratio - std::round(ratio)) < 1e-6, "log_dt must be a multiple of electrical_dt");
  need(sc.log_dt_s <= 0.01, "log_dt must be <= 10 ms");
  need(sc.row.n_segments >= 1 && sc.row.branches_per_segment >= 1, "row needs at least one segment and branch");
  need(sc.row.valid_branch(sc.tap_a_branch), "tap_a is not a branch of the row");
  need(sc.tap_b_branch == -1 || sc.row.valid_branch(sc.tap_b_branch), "tap_b is not a branch of the row");

  const double h = sc.horizon_s;
  auto in_h = [&](double t, const std::string& what) { need(t >= 0.0 && t <= h, what + " at " + std::to_string(t) + " s lies outside the horizon"); };
  for (const auto& b : sc.bursts) {
    need(b.start_s >= 0.0 && b.start_s + b.width_s <= h, "burst at " + std::to_string(b.start_s) + " s exceeds the horizon");
    need(b.width_s >= sc.env.dt_edge_s, "burst width must be >= dt_edge");
    need(b.alpha >= 0.0, "burst alpha must be >= 0");
  }
  for (const auto& s : sc.steps) in_h(s.t_s, "step");
  for (const auto& v : sc.valleys) {
    need(v.start_s >= 0.0 && v.start_s + v.width_s <= h, "valley exceeds the horizon");
    need(v.depth_kw >= 0.0 && v.depth_kw <= sc.env.p_avg_kw * (1.0 - sc.env.idle_floor) + 1e-9,
         "valley depth must keep the load above the idle floor");
  }
  for (const auto& t : sc.trains) {
    need(t.start_s >= 0.0 && t.start_s + t.period_s * t.n_bursts <= h, "burst train exceeds the horizon");
    need(t.duty > 0.0 && t.duty <= 1.0 && t.n_bursts >= 1, "burst train needs duty in (0, 1] and n >= 1");
  }
  for (const auto& f : sc.faults) {
    in_h(f.t_start_s, std::string(to_string(f.kind)));
    for (int b : f.branches) need(sc.row.valid_branch(b), "fault references unknown branch B" + std::to_string(b));
    if (f.kind == FaultKind::BusFault) need(sc.row.valid_segment(f.segment), "bus fault references an unknown segment");
    if (f.kind == FaultKind::GroundFault) need(f.magnitude > 0.0, "ground fault needs an insulation reading");
    if (f.kind != FaultKind::BusFault && f.kind != FaultKind::GroundFault) {
      need(!f.branches.empty(), std::string(to_string(f.kind)) + " needs branches");
      need(f.magnitude > 0.0, "branch fault needs a prospective current");
    }
  }
  for (const auto& f : sc.feeder_trips) {
    in_h(f.t_s, "feeder trip");
    const bool known = std::any_of(sc.mv.segments.begin(), sc.mv.segments.end(), [&](const MvSegment& s) { return s.id == f.segment; });
    need(known, "feeder trip references unknown MV segment '" + f.segment + "'");
  }
  for (const auto& w : sc.comm_loss) need(w.t0_s >= 0.0 && w.t1_s >= w.t0_s && w.t0_s <= h, "comm loss window is malformed");
  for (const auto& w : sc.clock_skew) need(w.t0_s >= 0.0 && w.t1_s >= w.t0_s && w.value >= 0.0, "clock skew window is malformed");
  for (double t : sc.unit_losses_s) in_h(t, "unit loss");

  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorCode::ValidationError, msg);
  }
}

}  // namespace rowsim
