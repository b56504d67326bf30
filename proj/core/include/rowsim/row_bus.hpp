#pragma once

#include "rowsim/dru_bank.hpp"

namespace rowsim {

struct BusParams {
  double v_nom_v = 800.0;
  double c_bus_mf = 2.1;
  double l_loop_uh = 5.0;
  double dru_latency_us = 75.0;
  double esr_mohm = 0.2;
};

void validate(const BusParams& p);

struct BusState {
  double v_c_v = 800.0;    // capacitor voltage
  double v_bus_v = 800.0;  // terminal voltage, v_c + esr * i_net
  double i_net_a = 0.0;
};

/// DRU engagement latency. A sharp bus slope arms a hold during which the
/// bank output is frozen; the loop re-arms after a quiet tracking interval.
struct DruEngagement {
  double slope_trip_v_per_s = 2e4;
  double rearm_s = 1e-3;
  double hold_remaining_s = 0.0;
  double quiet_s = 1e9;
  bool engaged_this_step = false;  // the hold ended inside the last step
  double engage_t_offset_s = 0.0;  // offset of that instant within the step
  double v_at_engage_v = 0.0;
};

struct BusStepResult {
  double p_dru_kw = 0.0;
  double e_dru_kj = 0.0;  // energy delivered by the bank at its terminals
  double vdt_vs = 0.0;    // integral of mid-step terminal voltage, for the other devices' energy
  double esr_loss_kj = 0.0;
  bool held = false;
};

/// One electrical sub-step. i_other_a is the sum of every non-DRU current
/// into the bus (sources positive, constant-power draws negative), evaluated
/// by the caller at the previous terminal voltage. The bank droop loop and
/// the capacitor are solved together implicitly; if the bank output hits
/// a slew, power or SoC clamp it is held at the clamp and the capacitor
/// is advanced explicitly. Throws NumericBlowup if |v_bus - v_nom| > 50%.
BusStepResult step_bus(BusState& bus, const BusParams& params, DruBankState& bank, const ShelfSpec& shelf,
                       DruEngagement& engage, double i_other_a, double dt_s);

struct OvervoltageResult {
  double v_ov_v;
  double e_clamp_j;
};

/// Inductive kick L*di/dt and the clamp energy 1/2 L i^2 for the interrupted current.
OvervoltageResult clamp_overvoltage(double l_loop_uh, double di_dt_a_per_s, double i_interrupted_a = 0.0);

struct PoleResult {
  double omega_rad_s;
  double settling_s;  // 2% settling, 4 / omega
};

PoleResult small_signal_pole(double droop_eq_ohm, double c_bus_f);

}  // namespace rowsim
