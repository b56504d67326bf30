#pragma once

#include "rowsim/dru_bank.hpp"

namespace rowsim {

inline constexpr double kDefaultLifecycle = 1.25;
inline constexpr double kSettle1Pct = 4.6;  // ln(100)

struct DruCount {
  int n;
  double raw;  // unrounded requirement before the lifecycle factor
  double n_power;
  double n_energy;
  double n_thermal;
  double n_slew;
};

/// Bank population from the power, energy, thermal and slew gates with the lifecycle factor applied.
DruCount size_dru_count_detail(const WorkloadEnvelope& env, const ShelfSpec& shelf, double lifecycle);
int size_dru_count(const WorkloadEnvelope& env, const ShelfSpec& shelf, double lifecycle = kDefaultLifecycle);

/// C >= I_step * latency / dV with I_step = dp/v and dV = dv_frac * v. Returns mF.
double size_bus_capacitance(double dp_max_kw, double v_bus_v, double latency_us, double dv_frac);

/// E = p_row * t_bridge, kWh.
double size_bridge(double p_row_kw, double t_bridge_s);

struct DroopTuning {
  double r_eq_ohm;
  double pole_rad_s;
  double predicted_recovery_ms;
  double r_eq_max_ohm;  // largest bank droop that still meets the target
};

/// Throws Infeasible when the first-order 1% recovery exceeds the target.
DroopTuning tune_droop(double c_bus_mf, double target_recovery_ms, const ShelfSpec& shelf, int n);

struct SizingInputs {
  WorkloadEnvelope env;
  ShelfSpec shelf;
  double lifecycle = kDefaultLifecycle;
  double v_bus_v = 800.0;
  double latency_us = 75.0;
  double dv_frac = 0.02;
  double dp_step_kw = 0.0;  // 0 = alpha_max * p_avg
  double t_bridge_s = 3.0;
  double target_recovery_ms = 50.0;
};

struct SizingReport {
  int n_required = 0;
  double c_bus_required_mf = 0.0;
  double pole_rad_s = 0.0;
  double predicted_recovery_ms = 0.0;
  double bridge_energy_kwh = 0.0;
  double lifecycle_factor = 1.0;
  DruCount count{};
  GateReport gates{};
  bool recovery_ok = false;

  bool pass() const { return gates.all_pass() && recovery_ok; }
};

SizingReport size_row(const SizingInputs& in);

}  // namespace rowsim
