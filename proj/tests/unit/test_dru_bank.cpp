#include <doctest.h>

#include <cmath>
#include <limits>

#include "rowsim/dru_bank.hpp"
#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

using namespace rowsim;

namespace {

DruBankState bank(int n, double soc = 0.65) {
  DruBankState s;
  s.n_shelves = n;
  s.soc = soc;
  return s;
}

// settled command: long dt lets the lag and slew converge
double settled(double v_dev, const DruBankState& s, const ShelfSpec& spec) {
  return dru_power_command(v_dev, 800.0 - v_dev, s, spec, 10.0);
}

double steady_dev_for(double dp_kw, int n, const ShelfSpec& spec) {
  double lo = 0.0, hi = 50.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (settled(mid, bank(n), spec) < dp_kw ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST_CASE("droop command clamps at the power gate") {
  ShelfSpec spec;
  // 8 V / 1 mOhm = 8000 A -> 6.3 MW, gate 10 * 40 kW
  CHECK(settled(8.0, bank(10), spec) == doctest::Approx(400.0));
  CHECK(settled(-8.0, bank(10), spec) == doctest::Approx(-400.0));
}

TEST_CASE("zero deviation commands zero") { CHECK(settled(0.0, bank(10), ShelfSpec{}) == 0.0); }

TEST_CASE("energy gates") {
  ShelfSpec spec;
  CHECK(settled(4.0, bank(10, 0.5), spec) == 0.0);
  CHECK(settled(-4.0, bank(10, 0.8), spec) == 0.0);
  CHECK(settled(-4.0, bank(10, 0.5), spec) < 0.0);
}

TEST_CASE("slew cap per step") {
  ShelfSpec spec;
  auto s = bank(11);
  const double p = dru_power_command(8.0, 792.0, s, spec, 1e-3);
  CHECK(p <= 11 * spec.slew_kw_per_s * 1e-3 + 1e-9);
  CHECK(clamp_dru_power(1000.0, 100.0, s, spec, 0.01) == doctest::Approx(100.0 + 11 * 250.0 * 0.01));
}

TEST_CASE("droop linearity below saturation") {
  ShelfSpec spec;
  const auto s = bank(10);
  for (double dv : {0.01, 0.05, 0.1}) {
    const double slope = (800.0 - dv) * 10 / units::mv_per_a_to_ohm(spec.droop_mv_per_a) / 1000.0;
    CHECK(settled(dv, s, spec) == doctest::Approx(slope * dv).epsilon(0.01));
  }
}

TEST_CASE("doubling N halves the steady deviation") {
  ShelfSpec spec;
  const double d1 = steady_dev_for(100.0, 10, spec);
  const double d2 = steady_dev_for(100.0, 20, spec);
  CHECK(d2 / d1 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("equivalent droop") { CHECK(equivalent_droop_ohm(ShelfSpec{}, 10) == doctest::Approx(1e-3)); }

TEST_CASE("step_soc arithmetic") {
  ShelfSpec spec;
  spec.e_use_kwh = 0.6;
  auto s = bank(10);
  s.p_out_kw = 400.0;
  // 400 kW for 1 s out of 6 kWh
  CHECK(step_soc(s, spec, 1.0).soc - s.soc == doctest::Approx(-400.0 / (6.0 * 3600.0)));
  s.p_out_kw = 0.0;
  CHECK(step_soc(s, spec, 1.0).soc == s.soc);
  spec.e_use_kwh = 0.66;
  s.p_out_kw = -150.0;
  CHECK(step_soc(s, spec, 10.0).soc - s.soc == doctest::Approx(0.0631).epsilon(0.001));
}

TEST_CASE("step_soc faults outside the unit interval") {
  ShelfSpec spec;
  auto s = bank(1, 0.01);
  s.p_out_kw = 400.0;
  try {
    step_soc(s, spec, 100.0);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IntegratorFault);
  }
}

TEST_CASE("thermal window tracks the running mean") {
  ShelfSpec spec;
  spec.e_use_kwh = 100.0;
  auto s = bank(11);
  s.p_out_kw = 100.0;
  for (int k = 0; k < 9000; ++k) s = step_soc(s, spec, 0.1);
  CHECK(s.thermal_window_avg_kw == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("reserves") {
  ShelfSpec spec;
  auto s = bank(11);
  const auto r = reserves(s, spec);
  CHECK(r.e_up_kwh == doctest::Approx(0.99));
  CHECK(r.e_dn_kwh == doctest::Approx(0.99));
  CHECK(r.r_up_kw == doctest::Approx(39.6));
  CHECK(r.r_dn_kw == doctest::Approx(39.6));
  CHECK(r.e_up_kwh + r.e_dn_kwh == doctest::Approx((s.soc_max - s.soc_min) * s.e_tot_kwh(spec)));
  s.soc = s.soc_min;
  CHECK(reserves(s, spec).r_up_kw == 0.0);
  s.soc = 0.65;
  s.t_star_s = 1e-9;
  CHECK(reserves(s, spec).r_up_kw == doctest::Approx(440.0));
}

TEST_CASE("gates for the 90 s envelope") {
  WorkloadEnvelope env;
  env.t_surge_s = 90.0;
  ShelfSpec spec;
  const auto rep = gates_check(env, bank(11), spec);
  CHECK(rep.all_pass());
  CHECK(rep.power.required / spec.p_pk_kw == doctest::Approx(6.25));
  CHECK(rep.energy.required / spec.e_use_kwh == doctest::Approx(10.42).epsilon(0.001));
  CHECK_FALSE(gates_check(env, bank(10), spec).energy.pass);
}

TEST_CASE("slew gate") {
  WorkloadEnvelope env;
  env.dt_edge_s = 0.1;
  const auto rep = gates_check(env, bank(11), ShelfSpec{});
  CHECK(rep.slew.required == doctest::Approx(2500.0));
  CHECK(rep.slew.available == doctest::Approx(2750.0));
  CHECK(rep.slew.pass);
}

TEST_CASE("zero overage passes with infinite margins") {
  WorkloadEnvelope env;
  env.enforce_band = false;
  env.alpha_max = 0.0;
  const auto rep = gates_check(env, bank(11), ShelfSpec{});
  CHECK(rep.all_pass());
  CHECK(std::isinf(rep.power.margin));
  CHECK(std::isinf(rep.energy.margin));
  CHECK(std::isinf(rep.slew.margin));
}

TEST_CASE("gate safety under a random drive") {
  ShelfSpec spec;
  auto s = bank(11);
  std::uint64_t x = 12345;
  for (int k = 0; k < 20000; ++k) {
    x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    const double dv = (static_cast<double>(x >> 11) / 9007199254740992.0 - 0.5) * 40.0;
    s.p_out_kw = dru_power_command(dv, 800.0 - dv, s, spec, 1e-3);
    s = step_soc(s, spec, 1e-3);
    REQUIRE(std::abs(s.p_out_kw) <= 11 * spec.p_pk_kw + 1e-9);
    REQUIRE(s.soc >= 0.0);
    REQUIRE(s.soc <= 1.0);
  }
}
