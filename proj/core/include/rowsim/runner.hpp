#pragma once

#include <string>
#include <vector>

#include "rowsim/contract_verifier.hpp"
#include "rowsim/engine.hpp"
#include "rowsim/scenario.hpp"

namespace rowsim {

inline constexpr double kEnergyBalanceTol = 0.005;

struct RunOutcome {
  SimResult sim;
  ComplianceReport report;
};

/// Contract verification of a simulated log plus the energy-balance check.
ComplianceReport assess(const Scenario& sc, const SimResult& sim);
RunOutcome run_scenario(const Scenario& sc);

/// Writes log.csv, aux.csv, captures.csv, events.json, report.json and report.txt into dir.
void write_artifacts(const RunOutcome& out, const std::string& dir);

struct SweepGrid {
  std::vector<double> alpha;
  std::vector<double> t_surge_s;
  bool resize = true;  // re-size the bank and capacitance for each cell
};

struct SweepRow {
  double alpha = 0.0;
  double t_surge_s = 0.0;
  int n_shelves = 0;
  double c_bus_mf = 0.0;
  bool pass = false;
  double depth_frac = 0.0;
  double recovery_s = 0.0;
  double min_soc = 0.0;
  std::string failed;  // failing checks, or the error for a cell that did not run
};

/// Cell scenario: every burst takes the cell's alpha and width, the horizon stretches to fit.
Scenario sweep_cell(const Scenario& tmpl, double alpha, double t_surge_s, bool resize);
/// Cells in alpha-major order; errors are recorded per cell and the sweep continues.
std::vector<SweepRow> sweep_bursts(const Scenario& tmpl, const SweepGrid& grid, unsigned threads = 0);
std::string sweep_table(const std::vector<SweepRow>& rows);

struct OversubRow {
  double u;
  bool feasible;
  double required_kw;
  double ratio;
  double safe_ratio;
};

std::vector<OversubRow> sweep_oversubscription(const PodConfig& pod, const std::vector<double>& u);
std::string oversub_table(const std::vector<OversubRow>& rows);

}  // namespace rowsim
