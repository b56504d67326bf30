#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rowsim/dru_bank.hpp"
#include "rowsim/error.hpp"
#include "rowsim/sst_gateway.hpp"
#include "rowsim/units.hpp"

using namespace rowsim;

namespace {

SstSpec free_spec() {
  SstSpec s;
  s.ramp_cap_kw_per_s = 1e12;
  s.tau_s = 2.0;
  return s;
}

}  // namespace

TEST_CASE("first-order filter step response") {
  const auto spec = free_spec();
  SstState st;
  st.setpoint_kw = 100.0;
  const double dt = 1e-3;
  for (int k = 0; k < 2000; ++k) st = sst_power_command(st, spec, 0.0, 800.0, dt);
  CHECK(st.p_filtered_kw == doctest::Approx(100.0 * (1 - std::exp(-1.0))).epsilon(1e-4));
  for (double t = 2.0; t < 6.0; t += dt) {
    st = sst_power_command(st, spec, 0.0, 800.0, dt);
    const double want = 100.0 * (1 - std::exp(-(t + dt) / spec.tau_s));
    REQUIRE(st.p_out_kw == doctest::Approx(want).epsilon(0.01));
  }
}

TEST_CASE("equilibrium is a fixed point") {
  SstSpec spec;
  SstState st;
  st.setpoint_kw = st.p_filtered_kw = st.p_out_kw = 500.0;
  const auto next = sst_power_command(st, spec, 0.0, 800.0, 0.01);
  CHECK(next.p_filtered_kw == doctest::Approx(500.0));
  CHECK(next.p_out_kw == doctest::Approx(500.0));
}

TEST_CASE("ramp cap limits change to 120 kW per second") {
  SstSpec spec;
  spec.p_rated_kw = 1200.0;
  spec.tau_s = 1.0;
  SstState st;
  st.setpoint_kw = 1200.0;
  for (int k = 0; k < 100; ++k) {
    const auto next = sst_power_command(st, spec, 0.0, 800.0, 0.01);
    REQUIRE(std::abs(next.p_out_kw - st.p_out_kw) <= 120.0 * 0.01 + 1e-9);
    st = next;
  }
  CHECK(st.p_out_kw == doctest::Approx(120.0));
}

TEST_CASE("pcc import never negative and reverse window bounded") {
  auto spec = free_spec();
  SstState st;
  int reverse_steps = 0;
  for (int k = 0; k < 100; ++k) {
    st = sst_power_command(st, spec, -2.0, 802.0, 0.01);
    CHECK(st.p_pcc_kw >= 0.0);
    if (st.p_out_kw < 0.0) ++reverse_steps;
  }
  CHECK(reverse_steps * 0.01 <= spec.reverse_window_s + 1e-9);
  spec.reverse_internal_ok = false;
  CHECK(sst_power_command(SstState{}, spec, -2.0, 802.0, 0.01).p_out_kw == 0.0);
}

TEST_CASE("hierarchy keeps most of a step on the bank") {
  ShelfSpec shelf;
  DruBankState bank;
  bank.n_shelves = 11;
  const double r_eq = equivalent_droop_ohm(shelf, 11);
  SstSpec sst = free_spec();
  sst.droop_mv_per_a = 5.0 * r_eq * 1e3;
  const double dp = 200.0;
  // steady split: bisect on the bus deviation
  auto dru = [&](double v) { return dru_power_command(v, 800.0 - v, bank, shelf, 10.0); };
  auto sst_droop = [&](double v) {
    SstState st;
    return sst_power_command(st, sst, v, 800.0 - v, 1e-9).p_out_kw;
  };
  double lo = 0.0, hi = 20.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (dru(mid) + sst_droop(mid) < dp ? lo : hi) = mid;
  }
  // divider oracle: r_sst / (r_sst + r_eq) = 5/6
  CHECK(dru(lo) / dp >= 0.8);
  CHECK(dru(lo) / dp == doctest::Approx(5.0 / 6.0).epsilon(0.01));
}

TEST_CASE("hierarchy ratio validation") {
  SstSpec sst;
  sst.droop_mv_per_a = 10.0;
  CHECK_NOTHROW(validate_hierarchy(sst, 1e-3));
  CHECK_THROWS_AS(validate_hierarchy(sst, 1e-2), Error);
  CHECK_THROWS_AS(validate_hierarchy(sst, 1e-4), Error);
}

TEST_CASE("signature of a flat import") {
  const auto sig = pcc_signature(std::vector<double>(200, 850.0), 0.1);
  CHECK(sig.band_power == doctest::Approx(0.0));
  CHECK(sig.max_dpdt_kw_per_s == 0.0);
  CHECK(sig.reverse_count == 0);
  CHECK(sig.max_import_kw == 850.0);
}

TEST_CASE("signature of a 1 Hz sinusoid") {
  const double dt = 0.01;
  std::vector<double> p(2000);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = 850.0 + 100.0 * std::sin(2 * std::numbers::pi * k * dt);
  const auto sig = pcc_signature(p, dt);
  CHECK(sig.dominant_hz == doctest::Approx(1.0).epsilon(0.02));
  // mean square of the sine over mean squared
  CHECK(sig.band_power == doctest::Approx(5000.0 / (850.0 * 850.0)).epsilon(0.02));
  CHECK(sig.band_power > 0.001);
  CHECK(sig.max_dpdt_kw_per_s == doctest::Approx(200 * std::numbers::pi).epsilon(0.01));
}

TEST_CASE("a single reverse sample is counted") {
  std::vector<double> p(200, 850.0);
  p[50] = -1.0;
  CHECK(pcc_signature(p, 0.1).reverse_count == 1);
}

TEST_CASE("signature errors") {
  try {
    pcc_signature(std::vector<double>(50, 1.0), 0.1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LogTooShort);
  }
  try {
    pcc_signature(std::vector<double>(50, 1.0), 0.5);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonuniformSampling);
  }
}
