#include "rowsim/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "rowsim/dru_bank.hpp"
#include "rowsim/error.hpp"
#include "rowsim/report.hpp"
#include "rowsim/sizing.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

ComplianceReport assess(const Scenario& sc, const SimResult& sim) {
  ComplianceReport rep = verify(sim.log, sc.limits, sim.loop);
  CheckResult e;
  e.name = "energy_balance";
  e.measured = sim.ledger.relative_error();
  e.limit = kEnergyBalanceTol;
  e.pass = e.measured <= e.limit;
  e.margin = e.measured > 0.0 ? e.limit / e.measured : units::kInf;
  rep.checks.push_back(e);
  rep.pass = rep.pass && e.pass;
  return rep;
}

RunOutcome run_scenario(const Scenario& sc) {
  RunOutcome out;
  out.sim = simulate(sc);
  out.report = assess(sc, out.sim);
  return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
  f << text;
  if (!f) throw Error(ErrorCode::Io, "short write to " + p.string());
}

}  // namespace

void write_artifacts(const RunOutcome& out, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir + ": " + ec.message());
  const fs::path d(dir);
  write_file(d / "log.csv", log_to_csv(out.sim.log));
  write_file(d / "aux.csv", aux_to_csv(out.sim.log));
  write_file(d / "captures.csv", captures_to_csv(out.sim.log));
  write_file(d / "events.json", events_to_json(out.sim));
  write_file(d / "report.json", compliance_to_json(out.report));
  write_file(d / "report.txt", compliance_to_text(out.report));
}

Scenario sweep_cell(const Scenario& tmpl, double alpha, double t_surge_s, bool resize) {
  Scenario sc = tmpl;
  sc.env.alpha_max = alpha;
  sc.env.t_surge_s = t_surge_s;
  double end = 0.0;
  for (auto& b : sc.bursts) {
    b.alpha = alpha;
    b.width_s = t_surge_s;
    end = std::max(end, b.start_s + b.width_s);
  }
  const double tail = std::max(20.0, 4.0 * sc.sst.tau_s);
  sc.horizon_s = std::max(sc.horizon_s, end + tail);
  if (resize) {
    const double ratio = tmpl.bank.n_shelves > 0
                             ? units::mv_per_a_to_ohm(sc.sst.droop_mv_per_a) /
                                   equivalent_droop_ohm(sc.shelf, tmpl.bank.n_shelves)
                             : 0.0;
    sc.bank.n_shelves = size_dru_count(sc.env, sc.shelf);
    // keep the template's SST/bank droop ratio
    if (ratio > 0.0 && sc.bank.n_shelves > 0) {
      sc.sst.droop_mv_per_a = ratio * equivalent_droop_ohm(sc.shelf, sc.bank.n_shelves) * 1e3;
    }
    const double dp = alpha * sc.env.p_avg_kw;
    sc.bus.c_bus_mf = std::max(sc.bus.c_bus_mf, size_bus_capacitance(dp, sc.bus.v_nom_v, sc.bus.dru_latency_us, 0.02));
  }
  return sc;
}

std::vector<SweepRow> sweep_bursts(const Scenario& tmpl, const SweepGrid& grid, unsigned threads) {
  std::vector<std::pair<double, double>> cells;
  for (double a : grid.alpha) {
    for (double t : grid.t_surge_s) cells.emplace_back(a, t);
  }
  std::vector<SweepRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    SweepRow& r = rows[i];
    r.alpha = cells[i].first;
    r.t_surge_s = cells[i].second;
    try {
      const Scenario sc = sweep_cell(tmpl, r.alpha, r.t_surge_s, grid.resize);
      r.n_shelves = sc.bank.n_shelves;
      r.c_bus_mf = sc.bus.c_bus_mf;
      const RunOutcome o = run_scenario(sc);
      r.pass = o.report.pass;
      if (const auto* c = o.report.find("transient_depth")) r.depth_frac = c->measured;
      if (const auto* c = o.report.find("transient_recovery")) r.recovery_s = c->measured;
      const auto& soc = o.sim.log.soc;
      r.min_soc = soc.empty() ? 0.0 : *std::min_element(soc.begin(), soc.end());
      for (const auto& c : o.report.checks) {
        if (c.evaluated && !c.pass) r.failed += (r.failed.empty() ? "" : " ") + c.name;
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.failed = e.what();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n = std::max(1u, threads == 0 ? hw : threads);
  for (std::size_t start = 0; start < cells.size(); start += n) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(cells.size(), start + n); ++i) {
      batch.push_back(std::async(std::launch::async, run_cell, i));
    }
    for (auto& f : batch) f.get();
  }
  return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string s = "alpha,t_surge_s,n_shelves,c_bus_mf,verdict,depth_frac,recovery_s,min_soc,failed\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.3f,%d,%.4f,%s,%.6f,%.6f,%.6f,", r.alpha, r.t_surge_s, r.n_shelves, r.c_bus_mf,
                  r.pass ? "pass" : "fail", r.depth_frac, r.recovery_s, r.min_soc);
    s += buf;
    s += "\"" + r.failed + "\"\n";
  }
  return s;
}

std::vector<OversubRow> sweep_oversubscription(const PodConfig& pod, const std::vector<double>& u) {
  std::vector<OversubRow> out;
  for (double x : u) {
    PodConfig p = pod;
    p.u = x;
    const auto o = oversubscription_check(p);
    out.push_back({x, o.feasible, o.required_kw, o.ratio, o.safe_ratio});
  }
  return out;
}

std::string oversub_table(const std::vector<OversubRow>& rows) {
  std::string s = "u,feasible,required_kw,ratio,safe_ratio\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%s,%.3f,%.6f,%.6f\n", r.u, r.feasible ? "yes" : "no", r.required_kw, r.ratio,
                  r.safe_ratio);
    s += buf;
  }
  return s;
}

}  // namespace rowsim
