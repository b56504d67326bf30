// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rowsim/contract_verifier.hpp"
#include "rowsim/engine.hpp"
#include "rowsim/error.hpp"
#include "rowsim/mv_flisr.hpp"
#include "rowsim/runner.hpp"
#include "rowsim/scenario.hpp"
#include "rowsim/sizing.hpp"
#include "rowsim/units.hpp"
#include "rowsim/workload.hpp"
#include "synth_log.hpp"

using namespace rowsim;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const std::vector<std::string> kShipped = {"canonical_burst",   "ablation_no_dru",    "tier0_comm_loss",
                                           "burst_train",       "mixed_recharge",     "feeder_trip_flisr",
                                           "branch_fault",      "segment_fault",      "multi_branch_fault",
                                           "ground_fault",      "first_dip_step"};

const std::vector<std::string> kBurstCorpus = {"canonical_burst", "tier0_comm_loss", "burst_train", "mixed_recharge"};

Scenario shipped(const std::string& name) { return load_scenario(std::string(ROWSIM_SCENARIO_DIR "/") + name + ".json"); }

struct Timed {
  RunOutcome out;
  double wall_s;
};

std::map<std::string, Timed>& cache() {
  static std::map<std::string, Timed> c;
  return c;
}

const Timed& run_shipped(const std::string& name) {
  auto it = cache().find(name);
  if (it != cache().end()) return it->second;
  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome out = run_scenario(shipped(name));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return cache().emplace(name, Timed{std::move(out), wall}).first->second;
}

bool check_passes(const ComplianceReport& r, const std::string& name) {
  const auto* c = r.find(name);
  return c && c->evaluated && c->pass;
}

bool check_fails(const ComplianceReport& r, const std::string& name) {
  const auto* c = r.find(name);
  return c && c->evaluated && !c->pass;
}

const std::vector<std::string> kVoltageChecks = {"steady",           "transient_depth",   "transient_recovery",
                                                 "overshoot",        "monotone_settling", "oscillation",
                                                 "reserve_floors",   "pcc_reverse"};

// Indices of log samples between the first marker a and the first marker b after it.
std::pair<std::size_t, std::size_t> span_between(const WaveformLog& log, const std::string& a, const std::string& b) {
  const auto ta = log.markers_named(a);
  const auto tb = log.markers_named(b);
  if (ta.empty() || tb.empty()) return {0, 0};
  return {log.index_at(ta.front()), log.index_at(tb.front())};
}

// ---------------------------------------------------------------------------

Verdict c1_capacitance() {
  const double c = size_bus_capacitance(360.0, 800.0, 75.0, 0.02);
  return {std::abs(c / 2.1 - 1.0) <= 0.02, fmt("C = %.4f mF (target 2.1 mF +-2%%)", c)};
}

Verdict c2_surge_energy() {
  WorkloadEnvelope env;
  env.alpha_max = 0.25;
  env.p_avg_kw = 1000.0;
  env.t_surge_s = 60.0;
  const double e60 = surge_energy_kwh(env);
  env.t_surge_s = 90.0;
  const double e90 = surge_energy_kwh(env);
  const bool ok = std::abs(e60 / 4.17 - 1) <= 0.005 && std::abs(e90 / 6.25 - 1) <= 0.005;
  return {ok, fmt("60 s: %.4f kWh, 90 s: %.4f kWh", e60, e90)};
}

Verdict c3_feeder_current() {
  const double a25 = segment_current(15000.0, 25.0);
  const double a35 = segment_current(15000.0, 35.0);
  return {std::abs(a25 - 346) <= 1 && std::abs(a35 - 247) <= 1, fmt("25 kV: %.1f A, 35 kV: %.1f A", a25, a35)};
}

Verdict c4_canonical() {
  const auto sc = shipped("canonical_burst");
  // bank sized for the band-edge surge (90 s), no lifecycle margin
  WorkloadEnvelope env = sc.env;
  env.t_surge_s = 90.0;
  const int n = size_dru_count(env, sc.shelf, 1.0);
  const auto& t = run_shipped("canonical_burst");
  const auto& r = t.out.report;
  bool ok = r.pass && sc.bank.n_shelves == n && std::abs(sc.bus.c_bus_mf - 2.1) < 1e-9 && t.wall_s < 60.0;
  std::string failed;
  for (const auto& c : kVoltageChecks) {
    if (!check_passes(r, c)) {
      ok = false;
      failed += " " + c;
    }
  }
  const auto* d = r.find("transient_depth");
  const auto* rec = r.find("transient_recovery");
  std::string det = "N=" + std::to_string(sc.bank.n_shelves) + " (sized " + std::to_string(n) + ")" +
                    fmt(", depth %.3f%%, recovery %.2f ms, wall %.1f s", d ? 100 * d->measured : -1,
                        rec ? 1e3 * rec->measured : -1, t.wall_s);
  if (!failed.empty()) det += ", failing:" + failed;
  return {ok, det};
}

Verdict c5_first_dip() {
  const auto base = shipped("first_dip_step");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dp(100.0, 250.0), c(2.1, 4.2), lat(50.0, 150.0), t(1.0, 2.0);
  double worst = 0.0;
  int bad = 0;
  for (int k = 0; k < 20; ++k) {
    Scenario sc = base;
    sc.horizon_s = 3.0;
    sc.steps = {{t(rng), dp(rng)}};
    sc.bus.c_bus_mf = c(rng);
    sc.bus.dru_latency_us = lat(rng);
    const auto sim = simulate(sc);
    const double law = units::current_a(sc.steps[0].dp_kw, sc.bus.v_nom_v) * units::us_to_s(sc.bus.dru_latency_us) /
                       units::mf_to_f(sc.bus.c_bus_mf);
    double measured = 0.0;
    for (const auto& cap : sim.log.captures) {
      if (cap.t0_s > sc.steps[0].t_s || cap.v_bus_v.empty()) continue;
      const std::size_t i0 = static_cast<std::size_t>(std::llround((sc.steps[0].t_s - cap.t0_s) / cap.dt_s));
      if (i0 >= cap.v_bus_v.size()) continue;
      const double pre = cap.v_bus_v[i0 > 0 ? i0 - 1 : 0];
      const std::size_t i1 = std::min(cap.v_bus_v.size(), i0 + static_cast<std::size_t>(2e-3 / cap.dt_s));
      for (std::size_t i = i0; i < i1; ++i) measured = std::max(measured, pre - cap.v_bus_v[i]);
    }
    const double err = std::abs(measured / law - 1.0);
    worst = std::max(worst, err);
    bad += err > 0.10;
  }
  return {bad == 0, fmt("20 steps, worst |dip/law - 1| = %.2f%%", 100 * worst)};
}

int run_cli(const std::string& args) {
#ifdef ROWSIM_CLI
  const auto out = std::filesystem::temp_directory_path() / "rowsim-acceptance";
  const std::string cmd =
      "ROWSIM_OUT='" + out.string() + "' '" ROWSIM_CLI "' " + args + " > /dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
#else
  (void)args;
  return -1;
#endif
}

Verdict c6_ablation() {
  const auto& r = run_shipped("ablation_no_dru").out.report;
  const bool depth = check_fails(r, "transient_depth");
  const bool rec = check_fails(r, "transient_recovery");
  const int code = run_cli("run '" ROWSIM_SCENARIO_DIR "/ablation_no_dru.json' -q");
  return {!r.pass && depth && rec && code == 1,
          std::string("depth ") + (depth ? "fails" : "passes") + ", recovery " + (rec ? "fails" : "passes") +
              ", cli exit " + std::to_string(code)};
}

Scenario random_recharge(std::mt19937_64& rng) {
  Scenario sc = shipped("mixed_recharge");
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  sc.name = "recharge_random";
  sc.horizon_s = 20.0;
  sc.seed = rng();
  sc.bank.soc = 0.50 + 0.045 * u01(rng);
  sc.bursts.clear();
  sc.steps.clear();
  sc.valleys.clear();
  const int nv = 1 + static_cast<int>(u01(rng) * 4);
  double t = 1.0 + 2.0 * u01(rng);
  for (int i = 0; i < nv && t < 17.0; ++i) {
    const double w = std::min(1.0 + 4.0 * u01(rng), 18.5 - t);
    const Phase ph = u01(rng) < 0.2 ? Phase::Comms : (u01(rng) < 0.5 ? Phase::Idle : Phase::Compute);
    sc.valleys.push_back({t, w, 100.0 + 300.0 * u01(rng), ph});
    t += w + 0.5 + 3.0 * u01(rng);
  }
  if (u01(rng) < 0.3) {
    const double s = 1.0 + 10.0 * u01(rng);
    sc.bursts.push_back({s, 2.0 + 5.0 * u01(rng), 0.10 + 0.15 * u01(rng)});
  }
  return sc;
}

Verdict c7_valley_exclusivity() {
  std::mt19937_64 rng(77);
  long violations = 0;
  long active = 0;
  long v_valley = 0, v_mv = 0, v_floor = 0;
  int recharged = 0;
  double max_ramp = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Scenario sc = random_recharge(rng);
    const auto sim = simulate(sc);
    const auto& L = sim.log;
    bool any = false;
    for (std::size_t i = 0; i < L.size(); ++i) {
      if (L.p_chg_kw[i] > 0.0) {
        ++active;
        any = true;
        const bool valley = L.p_load_kw[i] < L.p_avg_kw[i] - sc.recharge.r_safety_kw;
        v_valley += !valley;
        v_mv += !(L.h_mv_kw[i] > 0.0);
        v_floor += !L.floors_ok[i];
        if (!valley || !(L.h_mv_kw[i] > 0.0) || !L.floors_ok[i]) ++violations;
      }
      if (i > 0) max_ramp = std::max(max_ramp, std::abs(L.p_chg_kw[i] - L.p_chg_kw[i - 1]) / (L.t_s[i] - L.t_s[i - 1]));
    }
    recharged += any;
  }
  const bool ok = violations == 0 && max_ramp <= 50.0 * (1 + 1e-9) && recharged > 0;
  return {ok, std::to_string(recharged) + "/100 runs recharged, " + std::to_string(active) + " active samples, " +
                  std::to_string(violations) + " violations (" + std::to_string(v_valley) + " outside valley, " +
                  std::to_string(v_mv) + " no MV headroom, " + std::to_string(v_floor) + " floor)" + fmt(", max |dp_chg/dt| %.6f kW/s", max_ramp)};
}

double soc_recovery_s(const WaveformLog& log, double t_from, double soc_target) {
  for (std::size_t i = log.index_at(t_from); i < log.size(); ++i) {
    if (log.soc[i] >= soc_target) return log.t_s[i] - t_from;
  }
  return std::numeric_limits<double>::infinity();
}

Verdict c8_tier0() {
  const auto& t0 = run_shipped("tier0_comm_loss").out;
  const auto& t2 = run_shipped("canonical_burst").out;
  bool ok = true;
  std::string failed;
  for (const auto& c : kVoltageChecks) {
    if (!check_passes(t0.report, c)) {
      ok = false;
      failed += " " + c;
    }
  }
  bool all_tier0 = std::all_of(t0.sim.log.tier.begin(), t0.sim.log.tier.end(), [](int x) { return x == 0; });
  const auto sc = shipped("canonical_burst");
  const double end = sc.bursts.front().start_s + sc.bursts.front().width_s;
  const double soc0 = t2.sim.log.soc.front() - 1e-3;
  const double r0 = soc_recovery_s(t0.sim.log, end, soc0);
  const double r2 = soc_recovery_s(t2.sim.log, end, soc0);
  ok = ok && all_tier0 && r0 >= r2;
  std::string det = std::string("voltage checks ") + (failed.empty() ? "pass" : "fail:" + failed) +
                    (all_tier0 ? ", Tier0 throughout" : ", tier left Tier0") +
                    fmt(", SoC recovery Tier0 %.1f s vs Tier2 %.1f s", r0, r2);
  return {ok, det};
}

Verdict c9_selectivity() {
  const auto base = shipped("branch_fault");
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> amp(200.0, 550.0), t(4.0, 6.0);
  std::uniform_int_distribution<int> br(0, base.row.n_branches() - 1);
  int sect = 0, slow = 0, hot = 0, deep = 0, missing = 0;
  double worst_clear = 0.0, worst_clamp = 0.0, worst_depth = 0.0;
  for (int k = 0; k < 50; ++k) {
    Scenario sc = base;
    sc.horizon_s = 11.0;
    sc.faults.front().branches = {br(rng)};
    sc.faults.front().magnitude = amp(rng);
    sc.faults.front().t_start_s = t(rng);
    const auto out = run_scenario(sc);
    bool branch_trip = false;
    for (const auto& tr : out.sim.trips) {
      if (tr.sectionalizer) {
        ++sect;
        continue;
      }
      branch_trip = true;
      worst_clear = std::max(worst_clear, tr.clear_time_s);
      worst_clamp = std::max(worst_clamp, tr.clamp_energy_j);
      slow += tr.clear_time_s >= 100e-6;
      hot += tr.clamp_energy_j > sc.protection.e_clamp_max_j;
    }
    missing += !branch_trip;
    const auto* d = out.report.find("transient_depth");
    const double depth = d ? d->measured : 1.0;
    worst_depth = std::max(worst_depth, depth);
    deep += depth > 0.02;
  }
  int corpus_trips = 0;
  for (const auto& n : kBurstCorpus) {
    const auto& sim = run_shipped(n).out.sim;
    corpus_trips += static_cast<int>(sim.trips.size()) + sim.spurious_trips;
  }
  const bool ok = sect == 0 && slow == 0 && hot == 0 && deep == 0 && missing == 0 && corpus_trips == 0;
  return {ok, fmt("worst clear %.1f us, clamp %.3f J, depth %.3f%%", 1e6 * worst_clear, worst_clamp,
                  100 * worst_depth) +
                  ", sectionalizer trips " + std::to_string(sect) + ", burst-corpus trips " +
                  std::to_string(corpus_trips)};
}

Verdict c10_flisr() {
  const auto sc = shipped("feeder_trip_flisr");
  const auto& out = run_shipped("feeder_trip_flisr").out;
  const auto& L = out.sim.log;
  std::vector<std::string> bad;
  if (out.sim.flisr.empty()) return {false, "no restoration plan"};
  const auto& plan = out.sim.flisr.front();
  const double t_trip = plan.t_fault_s;
  if (std::abs(plan.t_restore_s - t_trip - 1.5) > 1e-9) bad.push_back("restore not at +1.5 s");
  if (L.markers_named("bridge_start").empty() || L.markers_named("bridge_end").empty()) bad.push_back("no bridging");
  // recharge frozen from trip to confirmation
  const auto [i0, i1] = span_between(L, "feeder_trip", "flisr_restore_confirmed");
  if (i1 <= i0) bad.push_back("markers missing");
  for (std::size_t i = i0; i < i1; ++i) {
    if (L.p_chg_kw[i] != 0.0) {
      bad.push_back("p_chg during FLISR");
      break;
    }
  }
  if (!plan.radial || !is_radial(plan.after)) bad.push_back("ring closed");
  for (const auto& [seg, amps] : segment_currents(plan.after)) {
    for (const auto& s : plan.after.segments) {
      if (s.id == seg && amps > s.amp_cap_a + 1e-9) bad.push_back(seg + " over cap");
    }
  }
  // bridge energy: SoC drop vs integral of bank power over the bridge
  const auto [b0, b1] = span_between(L, "bridge_start", "bridge_end");
  double e_int = 0.0;
  for (std::size_t i = b0; i < b1; ++i) e_int += L.dru_p_kw[i] * L.dt_s;
  e_int = units::kws_to_kwh(e_int);
  const double e_soc = (L.soc[b0] - L.soc[b1]) * sc.bank.e_tot_kwh(sc.shelf);
  const double err = e_int > 0 ? std::abs(e_soc / e_int - 1.0) : 1.0;
  if (err > 0.01) bad.push_back("SoC mismatch");
  if (!out.report.pass) bad.push_back("contract fails");
  std::string det = fmt("bridge %.3f kWh by SoC vs %.3f kWh integrated (%.3f%%)", e_soc, e_int, 100 * err);
  for (const auto& b : bad) det += "; " + b;
  return {bad.empty(), det};
}

Verdict c11_oversubscription() {
  PodConfig pod;
  pod.n_rows = 4;
  pod.u = 0.8;
  pod.r = 0.05;
  pod.l = 0.03;
  pod.p_row_kw = 1000.0;
  pod.p_mv_kw = 3500.0;
  const auto o = oversubscription_check(pod);
  bool ok = std::abs(o.required_kw - 3496.0) < 1e-6 && o.feasible;
  double lo = 1e9, hi = -1e9;
  for (const auto& row : sweep_oversubscription(pod, {0.70, 0.75, 0.80, 0.85})) {
    lo = std::min(lo, row.safe_ratio);
    hi = std::max(hi, row.safe_ratio);
  }
  ok = ok && lo >= 0.75 && hi <= 0.95;
  return {ok, fmt("required %.1f kW; safe ratio over u in [0.70, 0.85]: %.4f .. %.4f", o.required_kw, lo, hi)};
}

Verdict c12_verifier_oracles() {
  using rowsim::testing::exp_dip;
  using rowsim::testing::make_log;
  ContractLimits lim;
  const double depth_v = 14.0, rec_s = 0.02;
  const auto log = make_log(3.0, 1e-5, exp_dip(1.0, depth_v, rec_s), {{1.0, "step", ""}});
  const auto tr = check_transient(log, lim);
  const double d = tr.events.empty() ? 0 : tr.events[0].depth_frac;
  const double r = tr.events.empty() ? 0 : tr.events[0].recovery_s;
  const double d_err = std::abs(d / (depth_v / 800.0) - 1);
  const double r_err = std::abs(r / rec_s - 1);

  const double amp = 4.0;
  const auto s5 = make_log(12.0, 1e-3, [&](double t) { return 800.0 + amp * std::sin(2 * std::numbers::pi * 5.0 * t); });
  const auto osc = check_oscillation(s5, lim);
  const double want = (amp * amp / 2) / std::pow(lim.steady_band * 800.0, 2);
  const double b_err = std::abs(osc.measured / want - 1);
  const bool ok = d_err <= 0.01 && r_err <= 0.01 && b_err <= 0.01 && !osc.pass;
  return {ok, fmt("depth err %.3f%%, recovery err %.3f%%, 5 Hz band-power err %.3f%%", 100 * d_err, 100 * r_err,
                  100 * b_err)};
}

Verdict c13_energy() {
  double worst = 0.0;
  std::string who;
  for (const auto& n : kShipped) {
    const double e = run_shipped(n).out.sim.ledger.relative_error();
    if (e >= worst) {
      worst = e;
      who = n;
    }
  }
  return {worst <= 0.005, std::to_string(kShipped.size()) + " scenarios, worst " + fmt("%.2e", worst) + " (" + who + ")"};
}

Verdict c14_round_trip() {
  std::mt19937_64 rng(1414);
  std::uniform_real_distribution<double> a(0.10, 0.25), ts(10.0, 90.0), edge(0.1, 0.8), par(1.1, 1.25), rho(0.2, 0.6);
  const ShelfSpec shelf;
  std::vector<WorkloadEnvelope> envs;
  int gate_fail = 0;
  for (int k = 0; k < 200; ++k) {
    WorkloadEnvelope e;
    e.alpha_max = a(rng);
    e.t_surge_s = ts(rng);
    e.dt_edge_s = edge(rng);
    e.rho_corr = rho(rng);
    e.par = std::max(par(rng), 1.0 + e.alpha_max);
    DruBankState b;
    b.n_shelves = size_dru_count(e, shelf);
    gate_fail += !gates_check(e, b, shelf).all_pass();
    envs.push_back(e);
  }
  const auto tmpl = shipped("canonical_burst");
  int sim_fail = 0;
  std::string first;
  for (int k = 0; k < 20; ++k) {
    const auto& e = envs[static_cast<std::size_t>(k * 10)];
    Scenario sc = tmpl;
    sc.env.dt_edge_s = e.dt_edge_s;
    sc.env.rho_corr = e.rho_corr;
    sc.env.par = e.par;
    sc.seed = 100 + static_cast<std::uint64_t>(k);
    sc = sweep_cell(sc, e.alpha_max, e.t_surge_s, true);
    const auto out = run_scenario(sc);
    if (!out.report.pass) {
      ++sim_fail;
      if (first.empty()) {
        first = fmt(" (first failure: alpha %.3f, t_surge %.1f s, N %.0f:", e.alpha_max, e.t_surge_s,
                    sc.bank.n_shelves);
        for (const auto& c : out.report.checks) {
          if (c.evaluated && !c.pass) first += " " + c.name;
        }
        first += ")";
      }
    }
  }
  return {gate_fail == 0 && sim_fail == 0, std::to_string(200 - gate_fail) + "/200 gate round-trips, " +
                                               std::to_string(20 - sim_fail) + "/20 simulated contract runs" + first};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"capacitance sizing", c1_capacitance},
      {"surge energy", c2_surge_energy},
      {"feeder current", c3_feeder_current},
      {"canonical burst contract", c4_canonical},
      {"first-dip law", c5_first_dip},
      {"ablation sensitivity", c6_ablation},
      {"valley exclusivity", c7_valley_exclusivity},
      {"tier-0 autonomy", c8_tier0},
      {"protection selectivity", c9_selectivity},
      {"FLISR ride-through", c10_flisr},
      {"oversubscription", c11_oversubscription},
      {"verifier oracles", c12_verifier_oracles},
      {"energy conservation", c13_energy},
      {"sizing round-trip", c14_round_trip},
  };
  std::vector<bool> selected(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
  }
  int failed = 0;
  int ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("criterion %2zu %-26s %s  %s [%.1f s]\n", i + 1, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                v.detail.c_str(), wall);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed ? 1 : 0;
}
