#pragma once

#include "rowsim/workload.hpp"

namespace rowsim {

/// One DRU shelf. Ratings are per shelf; the bank is N identical shelves.
struct ShelfSpec {
  double p_pk_kw = 40.0;      // 40 s rating
  double p_cont_kw = 24.0;    // 90 s rating
  double e_use_kwh = 0.6;
  double droop_mv_per_a = 10.0;
  double slew_kw_per_s = 250.0;
  double loop_bw_hz = 100e3;
};

void validate(const ShelfSpec& spec);

struct DruBankState {
  int n_shelves = 11;
  double soc = 0.65;
  double soc_min = 0.5;
  double soc_max = 0.8;
  double p_out_kw = 0.0;               // +injection / -absorption
  double thermal_window_avg_kw = 0.0;  // running mean of |p_out| over the thermal window
  double t_star_s = 90.0;

  double e_tot_kwh(const ShelfSpec& spec) const { return n_shelves * spec.e_use_kwh; }
};

void validate(const DruBankState& state);

inline constexpr double kThermalWindowS = 90.0;

/// Droop resistance of the whole bank in ohms (r_dru / N).
double equivalent_droop_ohm(const ShelfSpec& spec, int n_shelves);

/// Applies, in order, the slew cap against prev_kw, the +-N*p_pk power gate
/// and the SoC energy gates to a candidate output.
double clamp_dru_power(double candidate_kw, double prev_kw, const DruBankState& state, const ShelfSpec& spec,
                       double dt_s);

/// Droop power command for a bus deviation v_dev = v_nom - v_bus (positive on a sag).
/// The droop target is first passed through the single-pole inner-loop lag,
/// then clamped (slew, power gate, energy gates).
double dru_power_command(double v_dev, double v_bus, const DruBankState& state, const ShelfSpec& spec,
                         double dt_s);

/// Integrates SoC for the current p_out over dt. Throws IntegratorFault if SoC leaves [0, 1].
DruBankState step_soc(const DruBankState& state, const ShelfSpec& spec, double dt_s);

struct Reserves {
  double r_up_kw;
  double r_dn_kw;
  double e_up_kwh;
  double e_dn_kwh;
};

Reserves reserves(const DruBankState& state, const ShelfSpec& spec);

struct GateResult {
  bool pass;
  double required;
  double available;
  double margin;  // available / required, +inf when nothing is required
};

struct GateReport {
  GateResult power;
  GateResult energy;
  GateResult thermal;
  GateResult slew;

  bool all_pass() const { return power.pass && energy.pass && thermal.pass && slew.pass; }
};

/// Evaluates the four bank gates for one burst of the envelope. The thermal
/// gate uses the mean burst power over the thermal window for a single surge.
GateReport gates_check(const WorkloadEnvelope& env, const DruBankState& state, const ShelfSpec& spec);

}  // namespace rowsim
