#pragma once

#include <cstddef>
#include <vector>

namespace rowsim {

struct SstSpec {
  double p_rated_kw = 1200.0;
  double tau_s = 5.0;
  double droop_mv_per_a = 10.0;     // bank-relative softness checked by validate_hierarchy
  double ramp_cap_kw_per_s = 120.0;  // 0.1 x nameplate per second
  int n_units = 4;                   // one unit held as N+1 reserve
  bool reverse_internal_ok = true;
  double reverse_window_s = 0.2;
  double pcc_dpdt_cap_kw_per_s = 120.0;
  double efficiency = 0.98;
};

void validate(const SstSpec& spec);

/// Checks the SST droop is 5-15x softer than the bank droop r_dru/N.
void validate_hierarchy(const SstSpec& sst, double dru_equivalent_droop_ohm);

struct SstState {
  double p_filtered_kw = 0.0;
  double p_out_kw = 0.0;   // DC side
  double p_pcc_kw = 0.0;   // utility side, import positive
  double setpoint_kw = 0.0;
  double reverse_time_s = 0.0;  // time spent with p_out < 0 in the current excursion
  double internal_absorbed_kw = 0.0;  // reverse power kept inside the converter this step
};

/// Advances the SST by dt. v_dev = v_nom - v_bus; v_bus converts the droop
/// current into power. ramp_scale < 1 tightens the ramp (Tier-0 fallback).
SstState sst_power_command(const SstState& state, const SstSpec& spec, double v_dev, double v_bus, double dt_s,
                           double ramp_scale = 1.0);

struct PccSignature {
  double max_dpdt_kw_per_s = 0.0;
  double band_power = 0.0;  // band mean-square normalized by mean power squared
  std::size_t reverse_count = 0;
  double max_import_kw = 0.0;
  double dominant_hz = 0.0;
};

/// PCC signature of a uniformly sampled import channel. Requires >= 10 s at >= 10 Hz.
PccSignature pcc_signature(const std::vector<double>& p_pcc_kw, double dt_s, double band_lo_hz = 0.2,
                           double band_hi_hz = 3.0);

}  // namespace rowsim
