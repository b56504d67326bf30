#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/dru_bank.hpp"
#include "rowsim/engine.hpp"
#include "rowsim/runner.hpp"
#include "rowsim/scenario.hpp"

using namespace rowsim;

namespace {

std::string step_json(const std::string& dt, const std::string& events) {
  return R"({"name": "t", "horizon": "3 s", "seed": 3, "electrical_dt": ")" + dt + R"(",
    "envelope": {"p_avg": "1 MW", "alpha_max": 0.25, "t_surge": "60 s", "dt_edge": "200 ms"},
    "shelf": {"slew": "100000000 kW/s"},
    "sst": {"p_rated": "1300 kW", "tau": "8 s", "droop": "13.5 mV/A"},
    "events": [)" + events + "]}";
}

}  // namespace

TEST_CASE("null scenario is an equilibrium") {
  const auto sim = simulate(parse_scenario(step_json("10 us", "")));
  REQUIRE_FALSE(sim.blowup);
  const auto [lo, hi] = std::minmax_element(sim.log.v_bus_v.begin(), sim.log.v_bus_v.end());
  CHECK(*lo == doctest::Approx(800.0));
  CHECK(*hi == doctest::Approx(800.0));
  CHECK(sim.log.soc.front() == sim.log.soc.back());
}

TEST_CASE("runs are deterministic") {
  const auto sc = parse_scenario(step_json("10 us", R"({"type": "step", "t": "1 s", "dp": "200 kW"})"));
  CHECK(log_to_csv(simulate(sc).log) == log_to_csv(simulate(sc).log));
}

TEST_CASE("halving the electrical step barely moves the trajectory") {
  const std::string ev = R"({"type": "step", "t": "1 s", "dp": "200 kW"})";
  const auto a = simulate(parse_scenario(step_json("10 us", ev))).log;
  const auto b = simulate(parse_scenario(step_json("5 us", ev))).log;
  REQUIRE(a.size() == b.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += std::pow(a.v_bus_v[i] - b.v_bus_v[i], 2);
  CHECK(std::sqrt(ss / a.size()) / 800.0 < 1e-3);
}

TEST_CASE("energy budget closes") {
  const auto sim = simulate(parse_scenario(step_json("10 us", R"({"type": "step", "t": "1 s", "dp": "200 kW"})")));
  CHECK(sim.ledger.relative_error() < 0.005);
}

TEST_CASE("step engagement is recorded") {
  const auto sim = simulate(parse_scenario(step_json("10 us", R"({"type": "step", "t": "1 s", "dp": "200 kW"})")));
  REQUIRE_FALSE(sim.engagements.empty());
  const auto& e = sim.engagements.front();
  CHECK(e.t_engage_s - e.t_arm_s == doctest::Approx(75e-6).epsilon(0.01));
  CHECK(e.v_pre_v - e.v_engage_v == doctest::Approx(250.0 * 75e-6 / 2.1e-3).epsilon(0.1));
  CHECK_FALSE(sim.log.captures.empty());
  CHECK(sim.log.captures.front().branch_a_v.size() == sim.log.captures.front().v_bus_v.size());
}

TEST_CASE("capture csv round trip keeps branch taps") {
  const auto sim = simulate(parse_scenario(step_json("10 us", R"({"type": "step", "t": "1 s", "dp": "200 kW"})")));
  WaveformLog back;
  captures_from_csv(captures_to_csv(sim.log), back);
  REQUIRE(back.captures.size() == sim.log.captures.size());
  CHECK(back.captures.front().v_bus_v.size() == sim.log.captures.front().v_bus_v.size());
  CHECK(back.captures.front().branch_b_v.size() == sim.log.captures.front().v_bus_v.size());
  CHECK(back.captures.front().dt_s == doctest::Approx(1e-5));
}

TEST_CASE("a quiet run passes the contract") {
  const auto out = run_scenario(parse_scenario(step_json("10 us", R"({"type": "step", "t": "1 s", "dp": "100 kW"})")));
  CHECK(out.report.pass);
}

TEST_CASE("resized sweep cell keeps the droop hierarchy") {
  const auto tmpl = load_scenario(ROWSIM_SCENARIO_DIR "/canonical_burst.json");
  const auto cell = sweep_cell(tmpl, 0.15, 40.0, true);
  const double before = tmpl.sst.droop_mv_per_a * 1e-3 / equivalent_droop_ohm(tmpl.shelf, tmpl.bank.n_shelves);
  const double after = cell.sst.droop_mv_per_a * 1e-3 / equivalent_droop_ohm(cell.shelf, cell.bank.n_shelves);
  CHECK(cell.bank.n_shelves != tmpl.bank.n_shelves);
  CHECK(after == doctest::Approx(before));
  CHECK(cell.horizon_s >= 40.0 + tmpl.bursts.front().start_s + 32.0);
}
