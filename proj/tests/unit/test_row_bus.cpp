#include <doctest.h>

#include <algorithm>

#include "rowsim/error.hpp"
#include "rowsim/row_bus.hpp"
#include "rowsim/units.hpp"

using namespace rowsim;

namespace {

// Constant-power step of dp_kw on a balanced bus; returns the deepest sag.
double first_dip(double dp_kw, double c_mf, int n = 11) {
  BusParams bp;
  bp.c_bus_mf = c_mf;
  ShelfSpec shelf;
  shelf.slew_kw_per_s = 1e8;
  DruBankState bank;
  bank.n_shelves = n;
  DruEngagement eng;
  BusState bus;
  double v_min = bus.v_bus_v;
  const double dt = 1e-5;
  for (int k = 0; k < 2000; ++k) {
    const double i_other = -units::current_a(dp_kw, bus.v_bus_v);
    step_bus(bus, bp, bank, shelf, eng, i_other, dt);
    v_min = std::min(v_min, bus.v_bus_v);
  }
  return bp.v_nom_v - v_min;
}

}  // namespace

TEST_CASE("first dip follows I dt / C") {
  const double law = 450.0 * 75e-6 / 2.1e-3;  // 16.07 V
  CHECK(law == doctest::Approx(16.07).epsilon(0.001));
  CHECK(first_dip(360.0, 2.1) == doctest::Approx(law).epsilon(0.10));
}

TEST_CASE("doubling C halves the first dip") {
  CHECK(first_dip(360.0, 4.2) / first_dip(360.0, 2.1) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("balanced bus stays put") {
  BusParams bp;
  ShelfSpec shelf;
  DruBankState bank;
  DruEngagement eng;
  BusState bus;
  for (int k = 0; k < 1000; ++k) {
    const auto r = step_bus(bus, bp, bank, shelf, eng, 0.0, 1e-5);
    REQUIRE(bus.v_bus_v == 800.0);
    REQUIRE(r.p_dru_kw == 0.0);
  }
}

TEST_CASE("unsupported bus blows up") {
  BusParams bp;
  ShelfSpec shelf;
  DruBankState bank;
  bank.n_shelves = 0;
  DruEngagement eng;
  BusState bus;
  try {
    for (int k = 0; k < 100000; ++k) step_bus(bus, bp, bank, shelf, eng, -2000.0, 1e-5);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericBlowup);
  }
}

TEST_CASE("clamp overvoltage") {
  CHECK(clamp_overvoltage(5.0, 450.0 / 75e-6).v_ov_v == doctest::Approx(30.0));
  CHECK(clamp_overvoltage(5.0, 0.0).v_ov_v == 0.0);
  CHECK(clamp_overvoltage(5.0, 0.0, 450.0).e_clamp_j == doctest::Approx(0.506).epsilon(0.001));
  CHECK_THROWS_AS(clamp_overvoltage(0.0, 1.0), Error);
}

TEST_CASE("small-signal pole") {
  const auto p = small_signal_pole(1e-3, 2.1e-3);
  CHECK(p.omega_rad_s == doctest::Approx(4.76e5).epsilon(0.001));
  CHECK(small_signal_pole(2e-3, 2.1e-3).omega_rad_s == doctest::Approx(p.omega_rad_s / 2));
  CHECK(p.settling_s == doctest::Approx(8.4e-6).epsilon(0.001));
  CHECK(p.settling_s < 0.05);
}
