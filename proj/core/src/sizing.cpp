#include "rowsim/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

DruCount size_dru_count_detail(const WorkloadEnvelope& env, const ShelfSpec& shelf, double lifecycle) {
  validate(env);
  validate(shelf);
  if (!(lifecycle >= 1.0)) throw Error(ErrorCode::InvalidArgument, "lifecycle factor must be >= 1");
  const double dp = env.alpha_max * env.p_avg_kw;
  DruCount c{};
  c.n_power = dp / shelf.p_pk_kw;
  c.n_energy = surge_energy_kwh(env) / shelf.e_use_kwh;
  c.n_thermal = dp * std::min(env.t_surge_s, kThermalWindowS) / kThermalWindowS / shelf.p_cont_kw;
  c.n_slew = env.dt_edge_s > 0.0 ? dp / env.dt_edge_s / shelf.slew_kw_per_s : 0.0;
  c.raw = std::max({c.n_power, c.n_energy, c.n_thermal, c.n_slew});
  c.n = static_cast<int>(units::ceil_tolerant(lifecycle * c.raw));
  return c;
}

int size_dru_count(const WorkloadEnvelope& env, const ShelfSpec& shelf, double lifecycle) {
  return size_dru_count_detail(env, shelf, lifecycle).n;
}

double size_bus_capacitance(double dp_max_kw, double v_bus_v, double latency_us, double dv_frac) {
  if (dp_max_kw < 0.0 || !(v_bus_v > 0.0) || !(latency_us > 0.0) || !(dv_frac > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "capacitance sizing needs positive inputs");
  }
  const double i_step = units::current_a(dp_max_kw, v_bus_v);
  const double c_f = i_step * units::us_to_s(latency_us) / (dv_frac * v_bus_v);
  return c_f * 1e3;
}

double size_bridge(double p_row_kw, double t_bridge_s) {
  if (p_row_kw < 0.0 || t_bridge_s < 0.0) throw Error(ErrorCode::InvalidArgument, "bridge inputs must be >= 0");
  return units::kws_to_kwh(p_row_kw * t_bridge_s);
}

DroopTuning tune_droop(double c_bus_mf, double target_recovery_ms, const ShelfSpec& shelf, int n) {
  if (!(c_bus_mf > 0.0) || !(target_recovery_ms > 0.0) || n <= 0) {
    throw Error(ErrorCode::InvalidArgument, "droop tuning needs positive inputs");
  }
  const double c = units::mf_to_f(c_bus_mf);
  DroopTuning t{};
  t.r_eq_ohm = equivalent_droop_ohm(shelf, n);
  t.pole_rad_s = (1.0 / t.r_eq_ohm) / c;
  t.predicted_recovery_ms = kSettle1Pct / t.pole_rad_s * 1e3;
  t.r_eq_max_ohm = units::ms_to_s(target_recovery_ms) / (kSettle1Pct * c);
  if (t.predicted_recovery_ms > target_recovery_ms) {
    throw Error(ErrorCode::Infeasible, "predicted recovery " + std::to_string(t.predicted_recovery_ms) +
                                           " ms exceeds target " + std::to_string(target_recovery_ms) + " ms");
  }
  return t;
}

SizingReport size_row(const SizingInputs& in) {
  SizingReport r;
  r.lifecycle_factor = in.lifecycle;
  r.count = size_dru_count_detail(in.env, in.shelf, in.lifecycle);
  r.n_required = r.count.n;
  const double dp = in.dp_step_kw > 0.0 ? in.dp_step_kw : in.env.alpha_max * in.env.p_avg_kw;
  r.c_bus_required_mf = size_bus_capacitance(dp, in.v_bus_v, in.latency_us, in.dv_frac);
  r.bridge_energy_kwh = size_bridge(in.env.p_avg_kw, in.t_bridge_s);

  DruBankState bank;
  bank.n_shelves = r.n_required;
  r.gates = gates_check(in.env, bank, in.shelf);

  const double c = units::mf_to_f(r.c_bus_required_mf);
  if (c > 0.0) {
    r.pole_rad_s = (1.0 / equivalent_droop_ohm(in.shelf, r.n_required)) / c;
    r.predicted_recovery_ms = kSettle1Pct / r.pole_rad_s * 1e3;
  }
  r.recovery_ok = r.predicted_recovery_ms <= in.target_recovery_ms;
  return r;
}

}  // namespace rowsim
