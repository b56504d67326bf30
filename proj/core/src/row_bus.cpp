#include "rowsim/row_bus.hpp"

#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const BusParams& p) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(p.v_nom_v > 0.0, "v_nom must be > 0");
  need(p.c_bus_mf > 0.0, "c_bus must be > 0");
  need(p.l_loop_uh > 0.0, "l_loop must be > 0");
  need(p.esr_mohm >= 0.0, "esr must be >= 0");
  need(p.dru_latency_us >= 50.0 && p.dru_latency_us <= 150.0, "dru_latency must lie in [50, 150] us");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "bus: " + bad);
}

namespace {

struct Sub {
  double e_dru_kj;
  double vdt_vs;
  double esr_kj;
};

Sub advance(BusState& bus, const BusParams& p, DruBankState& bank, const ShelfSpec& shelf, double i_other,
            double dt, bool frozen) {
  const double c = units::mf_to_f(p.c_bus_mf);
  const double r = units::mohm_to_ohm(p.esr_mohm);
  const double v_prev = bus.v_bus_v;
  const double v_c0 = bus.v_c_v;
  double i_d = units::current_a(bank.p_out_kw, v_prev);
  double p_after = bank.p_out_kw;
  bool implicit = false;

  if (bank.n_shelves == 0) {
    i_d = 0.0;
  } else if (!frozen) {
    const double k = 1.0 / equivalent_droop_ohm(shelf, bank.n_shelves);
    const double a = 1.0 - std::exp(-2.0 * M_PI * shelf.loop_bw_hz * dt);
    const double g = dt / c + r;
    const double base = (1.0 - a) * i_d + a * k * p.v_nom_v + i_other;
    const double v_new = (v_c0 + g * base) / (1.0 + a * k * g);
    const double i_try = (1.0 - a) * i_d + a * k * (p.v_nom_v - v_new);
    const double p_try = units::power_kw(i_try, v_new);
    const double p_ok = clamp_dru_power(p_try, bank.p_out_kw, bank, shelf, dt);
    if (std::abs(p_ok - p_try) <= 1e-9 * (1.0 + std::abs(p_try))) {
      i_d = i_try;
      implicit = true;
    } else {
      i_d = units::current_a(p_ok, v_prev);
      p_after = p_ok;
    }
  }

  const double i_net = i_d + i_other;
  bus.v_c_v = v_c0 + dt / c * i_net;
  bus.v_bus_v = bus.v_c_v + r * i_net;
  bus.i_net_a = i_net;
  bank.p_out_kw = implicit ? units::power_kw(i_d, bus.v_bus_v) : p_after;
  const double v_mid = 0.5 * (v_c0 + bus.v_c_v) + r * i_net;
  return {i_d * v_mid * dt / units::kWattsPerKw, v_mid * dt, r * i_net * i_net * dt / units::kWattsPerKw};
}

void accumulate(BusStepResult& out, const Sub& s) {
  out.e_dru_kj += s.e_dru_kj;
  out.vdt_vs += s.vdt_vs;
  out.esr_loss_kj += s.esr_kj;
}

}  // namespace

BusStepResult step_bus(BusState& bus, const BusParams& params, DruBankState& bank, const ShelfSpec& shelf,
                       DruEngagement& engage, double i_other_a, double dt_s) {
  BusStepResult out;
  engage.engaged_this_step = false;

  if (bank.n_shelves > 0 && engage.hold_remaining_s <= 0.0 && engage.quiet_s >= engage.rearm_s) {
    BusState trial = bus;
    DruBankState trial_bank = bank;
    advance(trial, params, trial_bank, shelf, i_other_a, dt_s, true);
    if (std::abs(trial.v_c_v - bus.v_c_v) / dt_s > engage.slope_trip_v_per_s) {
      engage.hold_remaining_s = units::us_to_s(params.dru_latency_us);
    }
  }

  constexpr double kTiny = 1e-15;
  if (bank.n_shelves > 0 && engage.hold_remaining_s > kTiny) {
    out.held = true;
    const double h = std::min(engage.hold_remaining_s, dt_s);
    accumulate(out, advance(bus, params, bank, shelf, i_other_a, h, true));
    engage.hold_remaining_s -= h;
    if (engage.hold_remaining_s <= kTiny) {
      engage.hold_remaining_s = 0.0;
      engage.engaged_this_step = true;
      engage.engage_t_offset_s = h;
      engage.v_at_engage_v = bus.v_bus_v;
      engage.quiet_s = 0.0;
      if (dt_s - h > kTiny) {
        accumulate(out, advance(bus, params, bank, shelf, i_other_a, dt_s - h, false));
        engage.quiet_s = dt_s - h;
      }
    }
  } else {
    accumulate(out, advance(bus, params, bank, shelf, i_other_a, dt_s, false));
    engage.quiet_s += dt_s;
  }
  out.p_dru_kw = bank.p_out_kw;

  if (!std::isfinite(bus.v_bus_v) || std::abs(bus.v_bus_v - params.v_nom_v) > 0.5 * params.v_nom_v) {
    throw Error(ErrorCode::NumericBlowup, "bus voltage " + std::to_string(bus.v_bus_v) + " V");
  }
  return out;
}

OvervoltageResult clamp_overvoltage(double l_loop_uh, double di_dt_a_per_s, double i_interrupted_a) {
  if (!(l_loop_uh > 0.0)) throw Error(ErrorCode::InvalidArgument, "l_loop must be > 0");
  const double l = units::uh_to_h(l_loop_uh);
  return {l * di_dt_a_per_s, 0.5 * l * i_interrupted_a * i_interrupted_a};
}

PoleResult small_signal_pole(double droop_eq_ohm, double c_bus_f) {
  if (!(droop_eq_ohm > 0.0) || !(c_bus_f > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "droop and capacitance must be > 0");
  }
  const double w = (1.0 / droop_eq_ohm) / c_bus_f;
  return {w, 4.0 / w};
}

}  // namespace rowsim
