#include "rowsim/dru_bank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const ShelfSpec& spec) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(spec.p_cont_kw > 0.0 && spec.p_pk_kw >= spec.p_cont_kw, "need p_pk >= p_cont > 0");
  need(spec.e_use_kwh > 0.0, "e_use must be > 0");
  need(spec.droop_mv_per_a > 0.0, "droop must be > 0");
  need(spec.slew_kw_per_s > 0.0, "slew must be > 0");
  need(spec.loop_bw_hz >= 1000.0, "loop_bw must be kHz-class (>= 1000 Hz)");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "shelf: " + bad);
}

void validate(const DruBankState& s) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(s.n_shelves >= 0, "n_shelves must be >= 0");
  need(s.soc_min < s.soc_max, "soc_min must be < soc_max");
  need(s.soc_min >= 0.0 && s.soc_max <= 1.0, "SoC band must lie in [0, 1]");
  need(s.soc >= 0.0 && s.soc <= 1.0, "soc must lie in [0, 1]");
  need(s.t_star_s > 0.0, "t_star must be > 0");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "bank: " + bad);
}

double equivalent_droop_ohm(const ShelfSpec& spec, int n_shelves) {
  return units::mv_per_a_to_ohm(spec.droop_mv_per_a) / n_shelves;
}

double clamp_dru_power(double candidate_kw, double prev_kw, const DruBankState& state, const ShelfSpec& spec,
                       double dt_s) {
  const double n = state.n_shelves;
  const double max_step = n * spec.slew_kw_per_s * dt_s;
  double p = std::clamp(candidate_kw, prev_kw - max_step, prev_kw + max_step);
  const double gate = n * spec.p_pk_kw;
  p = std::clamp(p, -gate, gate);
  if (p > 0.0 && state.soc <= state.soc_min) p = 0.0;
  if (p < 0.0 && state.soc >= state.soc_max) p = 0.0;
  return p;
}

double dru_power_command(double v_dev, double v_bus, const DruBankState& state, const ShelfSpec& spec,
                         double dt_s) {
  if (state.n_shelves == 0) return 0.0;
  const double r_eq = equivalent_droop_ohm(spec, state.n_shelves);
  const double target_kw = units::power_kw(v_dev / r_eq, v_bus);
  const double alpha = 1.0 - std::exp(-2.0 * M_PI * spec.loop_bw_hz * dt_s);
  const double lagged = state.p_out_kw + alpha * (target_kw - state.p_out_kw);
  return clamp_dru_power(lagged, state.p_out_kw, state, spec, dt_s);
}

DruBankState step_soc(const DruBankState& state, const ShelfSpec& spec, double dt_s) {
  DruBankState next = state;
  if (state.n_shelves > 0) {
    const double e_tot_kws = units::kwh_to_kws(state.e_tot_kwh(spec));
    next.soc = state.soc - state.p_out_kw * dt_s / e_tot_kws;
  }
  if (!(next.soc >= 0.0 && next.soc <= 1.0)) {
    throw Error(ErrorCode::IntegratorFault, "SoC left [0, 1]: " + std::to_string(next.soc));
  }
  const double w = std::min(1.0, dt_s / kThermalWindowS);
  next.thermal_window_avg_kw += w * (std::abs(state.p_out_kw) - state.thermal_window_avg_kw);
  return next;
}

Reserves reserves(const DruBankState& s, const ShelfSpec& spec) {
  const double e_tot = s.e_tot_kwh(spec);
  Reserves r{};
  r.e_up_kwh = std::max(0.0, (s.soc - s.soc_min) * e_tot);
  r.e_dn_kwh = std::max(0.0, (s.soc_max - s.soc) * e_tot);
  const double gate = s.n_shelves * spec.p_pk_kw;
  r.r_up_kw = std::min(gate, units::kwh_to_kws(r.e_up_kwh) / s.t_star_s);
  r.r_dn_kw = std::min(gate, units::kwh_to_kws(r.e_dn_kwh) / s.t_star_s);
  return r;
}

namespace {

GateResult gate(double required, double available) {
  GateResult g{};
  g.required = required;
  g.available = available;
  g.margin = required > 0.0 ? available / required : units::kInf;
  g.pass = available >= required;
  return g;
}

}  // namespace

GateReport gates_check(const WorkloadEnvelope& env, const DruBankState& state, const ShelfSpec& spec) {
  const double n = state.n_shelves;
  const double dp = env.alpha_max * env.p_avg_kw;
  GateReport rep{};
  rep.power = gate(dp, n * spec.p_pk_kw);
  rep.energy = gate(surge_energy_kwh(env), n * spec.e_use_kwh);
  const double mean_burst_kw = dp * std::min(env.t_surge_s, kThermalWindowS) / kThermalWindowS;
  rep.thermal = gate(mean_burst_kw, n * spec.p_cont_kw);
  const double need_slew = env.dt_edge_s > 0.0 ? dp / env.dt_edge_s : (dp > 0.0 ? units::kInf : 0.0);
  rep.slew = gate(need_slew, n * spec.slew_kw_per_s);
  return rep;
}

}  // namespace rowsim
