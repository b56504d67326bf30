#include <doctest.h>

#include <random>

#include "rowsim/error.hpp"
#include "rowsim/sizing.hpp"

using namespace rowsim;

namespace {

WorkloadEnvelope env90() {
  WorkloadEnvelope e;
  e.t_surge_s = 90.0;
  return e;
}

}  // namespace

TEST_CASE("dru count") {
  ShelfSpec shelf;
  const auto d = size_dru_count_detail(env90(), shelf, 1.0);
  CHECK(d.n_power == doctest::Approx(6.25));
  CHECK(d.n_energy == doctest::Approx(10.4167).epsilon(1e-4));
  CHECK(d.n == 11);
  CHECK(size_dru_count(env90(), shelf, 1.25) == 14);
}

TEST_CASE("short surge is power limited") {
  WorkloadEnvelope e;
  e.enforce_band = false;
  e.t_surge_s = 1e-3;
  const auto d = size_dru_count_detail(e, ShelfSpec{}, 1.0);
  CHECK(d.n == 7);
  CHECK(d.n_power >= d.n_energy);
}

TEST_CASE("bus capacitance") {
  CHECK(size_bus_capacitance(360.0, 800.0, 75.0, 0.02) == doctest::Approx(2.1).epsilon(0.02));
  CHECK(size_bus_capacitance(0.0, 800.0, 75.0, 0.02) == 0.0);
  CHECK(size_bus_capacitance(360.0, 800.0, 150.0, 0.02) ==
        doctest::Approx(2 * size_bus_capacitance(360.0, 800.0, 75.0, 0.02)));
  CHECK(size_bus_capacitance(720.0, 800.0, 75.0, 0.02) ==
        doctest::Approx(2 * size_bus_capacitance(360.0, 800.0, 75.0, 0.02)));
}

TEST_CASE("bridge energy") {
  CHECK(size_bridge(1000.0, 3.0) == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(size_bridge(1000.0, 0.0) == 0.0);
  CHECK(size_bridge(1000.0, 90.0) == doctest::Approx(25.0));
}

TEST_CASE("droop tuning") {
  ShelfSpec shelf;  // 10 mV/A
  auto t = tune_droop(2.1, 50.0, shelf, 10);
  CHECK(t.pole_rad_s == doctest::Approx(4.76e5).epsilon(0.001));
  CHECK(t.predicted_recovery_ms == doctest::Approx(9.66e-3).epsilon(0.01));
  shelf.droop_mv_per_a = 1000.0;
  t = tune_droop(2.1, 50.0, shelf, 1);
  CHECK(t.pole_rad_s == doctest::Approx(476.2).epsilon(0.001));
  CHECK(t.predicted_recovery_ms == doctest::Approx(9.66).epsilon(0.01));
  try {
    tune_droop(2.1, 1e-3, ShelfSpec{}, 10);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Infeasible);
  }
}

TEST_CASE("sized banks pass the gates over random envelopes") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> a(0.10, 0.25), ts(10.0, 90.0), edge(0.1, 0.8), p(200.0, 3000.0);
  ShelfSpec shelf;
  for (int k = 0; k < 500; ++k) {
    WorkloadEnvelope e;
    e.alpha_max = a(rng);
    e.t_surge_s = ts(rng);
    e.dt_edge_s = edge(rng);
    e.p_avg_kw = p(rng);
    e.pdu_cap_kw = e.p_avg_kw * 1.25 / e.n_racks;
    DruBankState b;
    b.n_shelves = size_dru_count(e, shelf, 1.0);
    REQUIRE(gates_check(e, b, shelf).all_pass());
  }
}

TEST_CASE("count is monotone in alpha and surge length") {
  ShelfSpec shelf;
  int prev = 0;
  for (int pct = 10; pct <= 25; ++pct) {
    WorkloadEnvelope e;
    e.alpha_max = pct / 100.0;
    const int n = size_dru_count(e, shelf);
    CHECK(n >= prev);
    prev = n;
  }
  prev = 0;
  for (double t = 10.0; t <= 90.0; t += 5.0) {
    WorkloadEnvelope e;
    e.t_surge_s = t;
    const int n = size_dru_count(e, shelf);
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("full row sizing passes") {
  SizingInputs in;
  in.env = env90();
  const auto rep = size_row(in);
  CHECK(rep.pass());
  CHECK(rep.n_required == 14);
  CHECK(rep.bridge_energy_kwh == doctest::Approx(0.8333).epsilon(1e-4));
}
