#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "rowsim/error.hpp"
#include "rowsim/workload.hpp"

using namespace rowsim;

namespace {

double at(const LoadTrace& tr, double t) { return tr.samples_kw[static_cast<std::size_t>(t / tr.dt_s + 0.5)]; }

double mean(const std::vector<double>& v, std::size_t i0, std::size_t i1) {
  return std::accumulate(v.begin() + static_cast<long>(i0), v.begin() + static_cast<long>(i1), 0.0) /
         static_cast<double>(i1 - i0);
}

}  // namespace

TEST_CASE("surge energy matches alpha * p_avg * t_surge") {
  WorkloadEnvelope env;
  env.alpha_max = 0.25;
  env.p_avg_kw = 1000.0;
  env.t_surge_s = 60.0;
  CHECK(surge_energy_kwh(env) == doctest::Approx(4.17).epsilon(0.005));
  env.t_surge_s = 90.0;
  CHECK(surge_energy_kwh(env) == doctest::Approx(6.25).epsilon(0.005));
  env.enforce_band = false;
  env.alpha_max = 0.0;
  CHECK(surge_energy_kwh(env) == 0.0);
}

TEST_CASE("step burst plateau and baseline") {
  WorkloadEnvelope env;
  const auto tr = synth_step_burst(env, 100.0, 10.0, 7);
  CHECK(at(tr, 5.0) == doctest::Approx(1000.0));
  CHECK(at(tr, 9.99) == doctest::Approx(1000.0));
  CHECK(at(tr, 10.5) == doctest::Approx(1250.0));
  CHECK(at(tr, 69.0) == doctest::Approx(1250.0));
  CHECK(at(tr, 85.0) == doctest::Approx(1000.0));
  const auto [lo, hi] = std::minmax_element(tr.samples_kw.begin(), tr.samples_kw.end());
  CHECK(*hi <= env.par * env.p_avg_kw + 1e-9);
  CHECK(*lo >= env.idle_floor * env.p_avg_kw);
}

TEST_CASE("step burst energy equals surge energy within one percent") {
  WorkloadEnvelope env;
  const auto tr = synth_step_burst(env, 100.0, 10.0, 3);
  double e = 0.0;
  for (double p : tr.samples_kw) e += (p - env.p_avg_kw) * tr.dt_s;
  CHECK(e / 3600.0 == doctest::Approx(surge_energy_kwh(env)).epsilon(0.01));
}

TEST_CASE("zero overage gives a constant trace") {
  WorkloadEnvelope env;
  env.enforce_band = false;
  env.alpha_max = 0.0;
  const auto tr = synth_step_burst(env, 80.0, 5.0, 1);
  for (double p : tr.samples_kw) REQUIRE(p == doctest::Approx(env.p_avg_kw));
}

TEST_CASE("full correlation aligns every rack onset") {
  WorkloadEnvelope env;
  env.enforce_band = false;
  env.rho_corr = 1.0;
  env.n_racks = 100;
  env.t_surge_s = 10.0;
  const auto tr = synth_step_burst(env, 30.0, 5.0, 11, {1e-3, true});
  REQUIRE(tr.burst_onsets_s.size() == 1);
  const auto& on = tr.burst_onsets_s.front();
  CHECK(*std::max_element(on.begin(), on.end()) == doctest::Approx(*std::min_element(on.begin(), on.end())));
  // aggregate edge spans exactly dt_edge
  const double p_hi = env.p_avg_kw * (1 + env.alpha_max);
  std::size_t first = 0, last = 0;
  for (std::size_t i = 0; i < tr.samples_kw.size(); ++i) {
    if (!first && tr.samples_kw[i] > env.p_avg_kw + 1e-9) first = i;
    if (tr.samples_kw[i] >= p_hi - 1e-9) {
      last = i;
      break;
    }
  }
  CHECK(static_cast<double>(last - first + 1) * tr.dt_s == doctest::Approx(env.dt_edge_s).epsilon(0.01));
}

TEST_CASE("rack onset correlation tracks rho") {
  for (double rho : {0.2, 0.4, 0.6}) {
    WorkloadEnvelope env;
    env.rho_corr = rho;
    env.n_racks = 20;
    env.pdu_cap_kw = 100.0;
    const auto tr = synth_burst_train(env, 2.0, 0.5, 400, 5, {0.01, false});
    auto rel = tr.burst_onsets_s;
    for (std::size_t b = 0; b < rel.size(); ++b)
      for (double& t : rel[b]) t -= 2.0 * static_cast<double>(b);
    CHECK(std::abs(mean_pairwise_onset_correlation(rel) - rho) <= 0.05);
  }
}

TEST_CASE("rack sum equals aggregate") {
  WorkloadEnvelope env;
  env.t_surge_s = 10.0;
  const auto tr = synth_step_burst(env, 20.0, 2.0, 9, {1e-3, true});
  REQUIRE(tr.racks_kw.size() == static_cast<std::size_t>(env.n_racks));
  for (std::size_t i = 0; i < tr.samples_kw.size(); i += 97) {
    double s = 0.0;
    for (const auto& r : tr.racks_kw) s += r[i];
    REQUIRE(s == doctest::Approx(tr.samples_kw[i]).epsilon(1e-12));
  }
}

TEST_CASE("rack ramps respect the PDU slew") {
  WorkloadEnvelope env;
  env.t_surge_s = 10.0;
  const auto tr = synth_step_burst(env, 20.0, 2.0, 4, {1e-3, true});
  double worst = 0.0;
  for (const auto& r : tr.racks_kw)
    for (std::size_t i = 1; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - r[i - 1]) / tr.dt_s);
  CHECK(worst <= env.pdu_slew_kw_per_s * (1 + 1e-9));
}

TEST_CASE("determinism") {
  WorkloadEnvelope env;
  CHECK(synth_step_burst(env, 80.0, 10.0, 42).samples_kw == synth_step_burst(env, 80.0, 10.0, 42).samples_kw);
}

TEST_CASE("burst train mean per period") {
  WorkloadEnvelope env;
  env.alpha_max = 0.2;
  const auto tr = synth_burst_train(env, 20.0, 0.5, 3, 1);
  // oracle: square wave mean = p_avg (1 + alpha duty) = 1100
  const std::size_t per = static_cast<std::size_t>(20.0 / tr.dt_s);
  CHECK(mean(tr.samples_kw, per, 2 * per) == doctest::Approx(1100.0).epsilon(0.005));
}

TEST_CASE("single-burst train equals a step burst") {
  WorkloadEnvelope env;
  env.t_surge_s = 10.0;
  const auto a = synth_burst_train(env, 20.0, 0.5, 1, 8);
  const auto b = synth_step_burst(env, a.duration_s(), 0.0, 8);
  REQUIRE(a.samples_kw.size() == b.samples_kw.size());
  for (std::size_t i = 0; i < a.samples_kw.size(); ++i) REQUIRE(a.samples_kw[i] == doctest::Approx(b.samples_kw[i]));
}

TEST_CASE("unit duty is a contiguous plateau") {
  WorkloadEnvelope env;
  const auto tr = synth_burst_train(env, 20.0, 1.0, 2, 2);
  const std::size_t per = static_cast<std::size_t>(20.0 / tr.dt_s);
  CHECK(mean(tr.samples_kw, per, 2 * per) == doctest::Approx(1250.0).epsilon(0.01));
}

TEST_CASE("errors") {
  WorkloadEnvelope env;
  env.alpha_max = 0.3;
  CHECK_THROWS_AS(synth_step_burst(env, 100.0, 10.0, 1), Error);
  try {
    validate(env);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EnvelopeOutOfRange);
  }
  env.alpha_max = 0.25;
  try {
    synth_step_burst(env, 50.0, 10.0, 1);
    FAIL("no throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BurstExceedsHorizon);
  }
  CHECK_THROWS_AS(synth_burst_train(env, 20.0, 1.5, 2, 1), Error);
  CHECK_THROWS_AS(synth_burst_train(env, 20.0, 0.0, 2, 1), Error);
}

TEST_CASE("trace csv header") {
  WorkloadEnvelope env;
  const auto csv = to_csv(synth_step_burst(env, 61.0, 0.5, 1, {0.5, false}));
  CHECK(csv.rfind("t_s,p_kw,phase\n", 0) == 0);
}
