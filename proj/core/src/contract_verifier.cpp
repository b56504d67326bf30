#include "rowsim/contract_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/spectrum.hpp"
#include "rowsim/sst_gateway.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const ContractLimits& l) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(l.steady_band > 0.0 && l.steady_band < l.transient_max, "need 0 < steady_band < transient_max");
  need(l.recovery_max_s > 0.0 && l.recovery_dwell_s > 0.0, "recovery limits must be > 0");
  need(l.phase_margin_min_deg > 0.0, "phase_margin_min must be > 0");
  need(l.osc_lo_hz > 0.0 && l.osc_hi_hz > l.osc_lo_hz, "oscillation band must be increasing and positive");
  need(l.osc_power_max > 0.0 && l.overshoot_max > 0.0, "oscillation and overshoot limits must be > 0");
  need(l.floor_r_up_kw >= 0.0 && l.floor_r_dn_kw >= 0.0, "reserve floors must be >= 0");
  need(l.pcc_band_ratio_max > 0.0 && l.pcc_dpdt_max_kw_per_s > 0.0, "PCC limits must be > 0");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "limits: " + bad);
}

namespace {

constexpr double kRel = 1e-9;

bool within(double measured, double limit) { return measured <= limit * (1.0 + kRel) + 1e-15; }

CheckResult upper_check(std::string name, double measured, double limit) {
  CheckResult c;
  c.name = std::move(name);
  c.measured = measured;
  c.limit = limit;
  c.pass = within(measured, limit);
  c.margin = measured > 0.0 ? limit / measured : units::kInf;
  return c;
}

CheckResult skipped(std::string name, std::string why) {
  CheckResult c;
  c.name = std::move(name);
  c.evaluated = false;
  c.detail = std::move(why);
  return c;
}

struct Cluster {
  std::string marker;
  double t0;
  double t1;
};

// Markers closer than the guard collapse into one disturbance window.
std::vector<Cluster> clusters(const WaveformLog& log, double guard) {
  std::vector<Marker> m = log.markers;
  std::stable_sort(m.begin(), m.end(), [](const Marker& a, const Marker& b) { return a.t_s < b.t_s; });
  std::vector<Cluster> out;
  for (const auto& k : m) {
    if (!out.empty() && k.t_s - out.back().t1 <= guard) {
      out.back().t1 = k.t_s;
    } else {
      out.push_back({k.name, k.t_s, k.t_s});
    }
  }
  return out;
}

struct Series {
  std::vector<double> t;
  std::vector<double> d;  // v_bus - v_nom
  bool from_capture = false;
};

// Log samples in [a, b] with full-rate capture samples substituted where they exist.
Series window_series(const WaveformLog& log, double a, double b) {
  Series s;
  std::vector<std::pair<double, double>> cover;
  for (const auto& c : log.captures) {
    if (c.v_bus_v.empty()) continue;
    const double c1 = c.t0_s + c.dt_s * static_cast<double>(c.v_bus_v.size() - 1);
    if (c1 < a || c.t0_s > b) continue;
    cover.emplace_back(c.t0_s, c1);
    for (std::size_t i = 0; i < c.v_bus_v.size(); ++i) {
      const double t = c.t0_s + c.dt_s * static_cast<double>(i);
      if (t >= a && t <= b) {
        s.t.push_back(t);
        s.d.push_back(c.v_bus_v[i] - log.v_nom_v);
        s.from_capture = true;
      }
    }
  }
  for (std::size_t i = log.index_at(a); i < log.size() && log.t_s[i] <= b; ++i) {
    const double t = log.t_s[i];
    const bool covered = std::any_of(cover.begin(), cover.end(),
                                     [&](const auto& r) { return t >= r.first && t <= r.second; });
    if (!covered) {
      s.t.push_back(t);
      s.d.push_back(log.v_bus_v[i] - log.v_nom_v);
    }
  }
  std::vector<std::size_t> idx(s.t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return s.t[x] < s.t[y]; });
  Series out;
  out.from_capture = s.from_capture;
  for (auto i : idx) {
    out.t.push_back(s.t[i]);
    out.d.push_back(s.d[i]);
  }
  return out;
}

struct Bridging {
  std::vector<std::pair<double, double>> spans;
  bool contains(double t) const {
    return std::any_of(spans.begin(), spans.end(), [&](const auto& s) { return t >= s.first && t <= s.second; });
  }
};

Bridging bridging_windows(const WaveformLog& log) {
  Bridging b;
  const auto starts = log.markers_named("bridge_start");
  const auto ends = log.markers_named("bridge_end");
  for (double s : starts) {
    double e = units::kInf;
    for (double x : ends) {
      if (x >= s) {
        e = x;
        break;
      }
    }
    b.spans.emplace_back(s, e);
  }
  return b;
}

}  // namespace

CheckResult check_steady(const WaveformLog& log, const ContractLimits& limits) {
  const double guard = 2.0 * limits.recovery_max_s;
  const auto cl = clusters(log, guard);
  double worst = 0.0;
  std::size_t n = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double t = log.t_s[i];
    while (c < cl.size() && cl[c].t1 + guard < t) ++c;
    if (c < cl.size() && t >= cl[c].t0 - guard) continue;
    worst = std::max(worst, std::abs(log.v_bus_v[i] - log.v_nom_v) / log.v_nom_v);
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::NoSteadyWindow, "every sample lies inside an event guard window");
  auto r = upper_check("steady", worst, limits.steady_band);
  r.detail = std::to_string(n) + " steady samples";
  return r;
}

TransientResult check_transient(const WaveformLog& log, const ContractLimits& limits) {
  TransientResult res;
  const double guard = 2.0 * limits.recovery_max_s;
  const double band_v = limits.steady_band * log.v_nom_v;
  const double noise_v = limits.noise_floor * log.v_nom_v;
  const auto cl = clusters(log, guard);
  const double t_end = log.empty() ? 0.0 : log.t_s.back();

  std::vector<std::pair<double, double>> covered;
  for (const auto& c : cl) {
    const Series s = window_series(log, c.t0, t_end);
    EventWindow ev;
    ev.marker = c.marker;
    ev.t_s = c.t0;
    ev.from_capture = s.from_capture;

    // recovery: start of the first in-band run lasting the dwell, crossing interpolated
    double t_rec = units::kInf;
    std::size_t run = 0;
    bool in_run = false;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      if (std::abs(s.d[k]) <= band_v) {
        if (!in_run) {
          in_run = true;
          run = k;
        }
        if (s.t[k] - s.t[run] >= limits.recovery_dwell_s - 1e-12) {
          if (run == 0) {
            t_rec = s.t[0];
          } else {
            const double a = std::abs(s.d[run - 1]);
            const double b = std::abs(s.d[run]);
            const double f = a > b ? (a - band_v) / (a - b) : 1.0;
            t_rec = s.t[run - 1] + f * (s.t[run] - s.t[run - 1]);
          }
          break;
        }
      } else {
        in_run = false;
      }
    }
    ev.recovery_s = std::isfinite(t_rec) ? std::max(0.0, t_rec - c.t0) : units::kInf;

    const double t_stop = std::max(c.t1 + guard, std::isfinite(t_rec) ? t_rec : t_end);
    double e1 = 0.0;
    std::size_t k1 = 0;
    for (std::size_t k = 0; k < s.t.size() && s.t[k] <= t_stop; ++k) {
      if (std::abs(s.d[k]) > std::abs(e1)) {
        e1 = s.d[k];
        k1 = k;
      }
    }
    ev.depth_frac = std::abs(e1) / log.v_nom_v;
    const double t_look = std::max(t_stop, (std::isfinite(t_rec) ? t_rec : t_end) + guard);
    double e2 = 0.0;
    for (std::size_t k = k1; k < s.t.size() && s.t[k] <= t_look; ++k) {
      if (s.d[k] * e1 < 0.0) e2 = std::max(e2, std::abs(s.d[k]));
    }
    if (std::abs(e1) > noise_v) {
      ev.overshoot_frac = e2 / log.v_nom_v;
      ev.monotone = !(e2 > limits.hunting_ratio * std::abs(e1) && e2 > noise_v);
    }
    covered.emplace_back(c.t0 - 1e-3, std::isfinite(t_rec) ? std::max(t_rec + limits.recovery_dwell_s, c.t1 + guard)
                                                            : units::kInf);
    res.events.push_back(ev);
  }

  if (res.events.empty()) {
    res.depth = skipped("transient_depth", "no event markers");
    res.recovery = skipped("transient_recovery", "no event markers");
    res.overshoot = skipped("overshoot", "no event markers");
    res.monotone = skipped("monotone_settling", "no event markers");
  } else {
    double depth = 0.0;
    double rec = 0.0;
    double over = 0.0;
    int hunting = 0;
    std::string worst_depth;
    std::string worst_rec;
    for (const auto& e : res.events) {
      if (e.depth_frac >= depth) {
        depth = e.depth_frac;
        worst_depth = e.marker + "@" + std::to_string(e.t_s);
      }
      if (e.recovery_s >= rec) {
        rec = e.recovery_s;
        worst_rec = e.marker + "@" + std::to_string(e.t_s);
      }
      over = std::max(over, e.overshoot_frac);
      hunting += e.monotone ? 0 : 1;
    }
    res.depth = upper_check("transient_depth", depth, limits.transient_max);
    res.depth.detail = worst_depth;
    res.recovery = upper_check("transient_recovery", rec, limits.recovery_max_s);
    res.recovery.detail = worst_rec;
    res.overshoot = upper_check("overshoot", over, limits.overshoot_max);
    res.monotone = upper_check("monotone_settling", hunting, 0.0);
    res.monotone.detail = std::to_string(hunting) + " events with a second extremum";
  }

  int unmarked = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (std::abs(log.v_bus_v[i] - log.v_nom_v) <= band_v) continue;
    const double t = log.t_s[i];
    const bool ok = std::any_of(covered.begin(), covered.end(),
                                [&](const auto& w) { return t >= w.first && t <= w.second; });
    if (!ok) {
      if (unmarked == 0) res.findings.push_back("unmarked transient at t=" + std::to_string(t) + " s");
      ++unmarked;
    }
  }
  res.unmarked = upper_check("unmarked_transient", unmarked, 0.0);
  res.unmarked.detail = std::to_string(unmarked) + " out-of-band samples outside event windows";
  return res;
}

CheckResult check_oscillation(const WaveformLog& log, const ContractLimits& limits) {
  const double duration = log.size() > 1 ? log.t_s.back() - log.t_s.front() : 0.0;
  if (duration < 10.0 - 1e-9) throw Error(ErrorCode::InsufficientDuration, "oscillation check needs >= 10 s");
  if (log.dt_s > 0.01 + 1e-12) throw Error(ErrorCode::InsufficientDuration, "oscillation check needs >= 100 Hz");
  std::vector<double> dev(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) dev[i] = log.v_bus_v[i] - log.v_nom_v;
  // transients are judged by depth and recovery; only what rings on afterwards counts here
  std::size_t masked = 0;
  for (const auto& ev : check_transient(log, limits).events) {
    const double t1 = ev.t_s + ev.recovery_s + limits.recovery_dwell_s;
    for (std::size_t i = log.index_at(ev.t_s - 1e-3); i < log.size() && log.t_s[i] <= t1; ++i) {
      masked += dev[i] != 0.0;
      dev[i] = 0.0;
    }
  }
  const auto bp = spectrum::band_power(dev, log.dt_s, limits.osc_lo_hz, limits.osc_hi_hz);
  const double ref = limits.steady_band * log.v_nom_v;
  auto r = upper_check("oscillation", bp.mean_square / (ref * ref), limits.osc_power_max);
  r.detail = "dominant " + std::to_string(bp.dominant_hz) + " Hz";
  if (masked) r.detail += ", event windows excluded";
  return r;
}

double linearized_phase_margin(const LoopParams& p) {
  if (!(p.r_eq_ohm > 0.0) || !(p.c_bus_f > 0.0)) throw Error(ErrorCode::InvalidArgument, "loop params must be > 0");
  if (p.loop_bw_hz <= 0.0 || !std::isfinite(p.loop_bw_hz)) return 90.0;
  const double kc = 1.0 / p.r_eq_ohm / p.c_bus_f;
  const double wb = 2.0 * M_PI * p.loop_bw_hz;
  // |L(jw)| = kc / (w sqrt(1 + (w/wb)^2)) is decreasing; bisect for |L| = 1
  double lo = 0.0;
  double hi = kc;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double mag = kc / (mid * std::sqrt(1.0 + (mid / wb) * (mid / wb)));
    (mag > 1.0 ? lo : hi) = mid;
  }
  return 90.0 - std::atan(0.5 * (lo + hi) / wb) * 180.0 / M_PI;
}

double zeta_to_phase_margin(double zeta) {
  const double z2 = zeta * zeta;
  return std::atan(2.0 * zeta / std::sqrt(std::sqrt(4.0 * z2 * z2 + 1.0) - 2.0 * z2)) * 180.0 / M_PI;
}

double overshoot_to_zeta(double overshoot) {
  if (overshoot <= 0.0) return 1.0;
  if (overshoot >= 1.0) return 0.0;
  const double l = std::log(overshoot);
  return -l / std::sqrt(M_PI * M_PI + l * l);
}

PhaseMarginEstimate estimate_phase_margin(const WaveformLog& log, const std::optional<LoopParams>& params,
                                          const ContractLimits& limits) {
  PhaseMarginEstimate est;
  if (params) est.linearized_deg = linearized_phase_margin(*params);

  const double guard = 2.0 * limits.recovery_max_s;
  const double noise_v = limits.noise_floor * log.v_nom_v;
  double best = 0.0;
  for (const auto& c : clusters(log, guard)) {
    const Series s = window_series(log, c.t0, c.t1 + guard);
    if (s.t.size() < 8) continue;
    // settle reference: mean over the last fifth of the window
    const std::size_t tail = s.t.size() - s.t.size() / 5;
    double fin = 0.0;
    for (std::size_t k = tail; k < s.t.size(); ++k) fin += s.d[k];
    fin /= static_cast<double>(s.t.size() - tail);
    double e1 = 0.0;
    std::size_t k1 = 0;
    for (std::size_t k = 0; k < s.t.size(); ++k) {
      if (std::abs(s.d[k] - fin) > std::abs(e1)) {
        e1 = s.d[k] - fin;
        k1 = k;
      }
    }
    if (std::abs(e1) <= noise_v || std::abs(e1) <= best) continue;
    double e2 = 0.0;
    for (std::size_t k = k1; k < s.t.size(); ++k) {
      const double y = s.d[k] - fin;
      if (y * e1 < 0.0) e2 = std::max(e2, std::abs(y));
    }
    best = std::abs(e1);
    est.zeta = overshoot_to_zeta(e2 / std::abs(e1));
    est.fitted_deg = zeta_to_phase_margin(*est.zeta);
  }
  if (est.linearized_deg) {
    est.method = "linearized";
    est.value_deg = *est.linearized_deg;
  } else if (est.fitted_deg) {
    est.method = "step-fit";
    est.value_deg = *est.fitted_deg;
  } else {
    throw Error(ErrorCode::Unidentifiable, "no loop parameters and no clean step window");
  }
  return est;
}

std::vector<CheckResult> check_reserves_and_pcc(const WaveformLog& log, const ContractLimits& limits) {
  if (log.r_up_kw.size() != log.size() || log.r_dn_kw.size() != log.size() || log.pcc_p_kw.size() != log.size()) {
    throw Error(ErrorCode::MissingChannel, "reserve or PCC channel missing");
  }
  std::vector<CheckResult> out;
  const Bridging bridge = bridging_windows(log);

  double worst = units::kInf;
  std::size_t exempt = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const bool in_bridge = bridge.contains(log.t_s[i]);
    const double up = limits.floor_r_up_kw > 0.0 ? log.r_up_kw[i] / limits.floor_r_up_kw : units::kInf;
    const double dn = limits.floor_r_dn_kw > 0.0 ? log.r_dn_kw[i] / limits.floor_r_dn_kw : units::kInf;
    if (in_bridge) {
      exempt += std::min(up, dn) < 1.0;
      continue;
    }
    worst = std::min({worst, up, dn});
  }
  CheckResult floors;
  floors.name = "reserve_floors";
  floors.measured = worst;
  floors.limit = 1.0;
  floors.margin = worst;
  floors.pass = worst >= 1.0 - kRel;
  if (exempt) floors.detail = std::to_string(exempt) + " floor dips inside bridging windows (exempt)";
  out.push_back(floors);

  std::size_t reverse = 0;
  double ramp = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    reverse += log.pcc_p_kw[i] < 0.0;
    if (i > 0 && !bridge.contains(log.t_s[i]) && !bridge.contains(log.t_s[i - 1])) {
      ramp = std::max(ramp, std::abs(log.pcc_p_kw[i] - log.pcc_p_kw[i - 1]) / (log.t_s[i] - log.t_s[i - 1]));
    }
  }
  out.push_back(upper_check("pcc_reverse", static_cast<double>(reverse), 0.0));
  out.push_back(upper_check("pcc_ramp", ramp, limits.pcc_dpdt_max_kw_per_s));

  if (!bridge.spans.empty()) {
    out.push_back(skipped("pcc_band", "feeder outage in log; band ratio undefined across a supply interruption"));
    return out;
  }
  try {
    const auto pcc = pcc_signature(log.pcc_p_kw, log.dt_s, limits.pcc_lo_hz, limits.pcc_hi_hz);
    const auto load = pcc_signature(log.p_load_kw, log.dt_s, limits.pcc_lo_hz, limits.pcc_hi_hz);
    CheckResult band;
    band.name = "pcc_band";
    band.limit = limits.pcc_band_ratio_max;
    if (load.band_power <= 1e-15) {
      band.measured = pcc.band_power <= 1e-15 ? 0.0 : units::kInf;
    } else {
      band.measured = pcc.band_power / load.band_power;
    }
    band.pass = band.measured < band.limit;
    band.margin = band.measured > 0.0 ? band.limit / band.measured : units::kInf;
    band.detail = "pcc " + std::to_string(pcc.band_power) + ", load " + std::to_string(load.band_power);
    out.push_back(band);
  } catch (const Error& e) {
    out.push_back(skipped("pcc_band", e.what()));
  }
  return out;
}

const CheckResult* ComplianceReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

void check_uniform(const WaveformLog& log) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    const double d = log.t_s[i] - log.t_s[i - 1];
    if (std::abs(d - log.dt_s) > 2e-6 + 1e-6 * log.dt_s) {
      throw Error(ErrorCode::NonuniformSampling, "sample spacing changes at t=" + std::to_string(log.t_s[i]));
    }
  }
}

void spine_checks(const WaveformLog& log, const ContractLimits& limits, const std::string& prefix,
                  ComplianceReport& rep) {
  try {
    auto c = check_steady(log, limits);
    c.name = prefix + c.name;
    rep.checks.push_back(c);
  } catch (const Error& e) {
    rep.checks.push_back(skipped(prefix + "steady", e.what()));
    rep.findings.push_back(prefix + "steady: " + e.what());
  }
  auto tr = check_transient(log, limits);
  for (auto* c : {&tr.depth, &tr.recovery, &tr.overshoot, &tr.monotone, &tr.unmarked}) {
    c->name = prefix + c->name;
    rep.checks.push_back(*c);
  }
  if (prefix.empty()) rep.events = tr.events;
  for (auto& f : tr.findings) rep.findings.push_back(prefix + f);
}

}  // namespace

ComplianceReport verify(const WaveformLog& log, const ContractLimits& limits, const std::optional<LoopParams>& params) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "log has no samples");
  validate(limits);
  check_uniform(log);
  ComplianceReport rep;

  if (!log.markers_named("numeric_blowup").empty()) {
    CheckResult c = upper_check("numeric_stability", 1.0, 0.0);
    c.detail = "simulation aborted on numeric blowup";
    rep.checks.push_back(c);
  }
  spine_checks(log, limits, "", rep);

  try {
    rep.checks.push_back(check_oscillation(log, limits));
  } catch (const Error& e) {
    rep.checks.push_back(skipped("oscillation", e.what()));
  }

  try {
    rep.phase_margin = estimate_phase_margin(log, params, limits);
    CheckResult c;
    c.name = "phase_margin";
    c.measured = rep.phase_margin->value_deg;
    c.limit = limits.phase_margin_min_deg;
    c.margin = c.measured / c.limit;
    c.pass = c.measured >= c.limit * (1.0 - kRel);
    c.detail = rep.phase_margin->method;
    if (rep.phase_margin->linearized_deg && rep.phase_margin->fitted_deg) {
      c.detail += "; step-fit " + std::to_string(*rep.phase_margin->fitted_deg) + " deg";
    }
    rep.checks.push_back(c);
  } catch (const Error& e) {
    rep.checks.push_back(skipped("phase_margin", e.what()));
  }

  for (auto& c : check_reserves_and_pcc(log, limits)) rep.checks.push_back(c);

  for (const auto* tap : {&log.branch_a_v, &log.branch_b_v}) {
    if (tap->size() != log.size()) continue;
    WaveformLog b = log;
    b.v_bus_v = *tap;
    b.captures.clear();
    for (const auto& c : log.captures) {
      const auto& v = tap == &log.branch_a_v ? c.branch_a_v : c.branch_b_v;
      if (v.size() != c.v_bus_v.size()) continue;
      Capture bc = c;
      bc.v_bus_v = v;
      b.captures.push_back(std::move(bc));
    }
    spine_checks(b, limits, tap == &log.branch_a_v ? "branch_a." : "branch_b.", rep);
  }

  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckResult& c) { return !c.evaluated || c.pass; });
  return rep;
}

}  // namespace rowsim
