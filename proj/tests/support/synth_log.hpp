#pragma once
// Closed-form waveform logs for verifier oracles.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rowsim/waveform_log.hpp"

namespace rowsim::testing {

inline WaveformLog make_log(double duration_s, double dt_s, const std::function<double(double)>& v_bus,
                            const std::vector<Marker>& markers = {}) {
  WaveformLog log;
  log.dt_s = dt_s;
  const auto n = static_cast<std::size_t>(std::llround(duration_s / dt_s)) + 1;
  log.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt_s;
    log.t_s.push_back(t);
    log.v_bus_v.push_back(v_bus(t));
    log.p_load_kw.push_back(1000.0);
    log.dru_p_kw.push_back(0.0);
    log.soc.push_back(0.65);
    log.r_up_kw.push_back(39.6);
    log.r_dn_kw.push_back(39.6);
    log.sst_p_kw.push_back(1000.0);
    log.pcc_p_kw.push_back(1000.0 / 0.98);
    log.p_chg_kw.push_back(0.0);
    log.tier.push_back(2);
    log.event.emplace_back();
  }
  for (const auto& m : markers) {
    log.markers.push_back(m);
    auto& cell = log.event[log.index_at(m.t_s)];
    cell += (cell.empty() ? "" : "|") + m.name;
  }
  return log;
}

/// Dip of depth_v at t0 that decays exponentially and re-enters the band
/// (band_v) exactly recovery_s later.
inline std::function<double(double)> exp_dip(double t0, double depth_v, double recovery_s, double band_v = 8.0,
                                             double v_nom = 800.0) {
  const double tau = recovery_s / std::log(depth_v / band_v);
  return [=](double t) { return t < t0 ? v_nom : v_nom - depth_v * std::exp(-(t - t0) / tau); };
}

}  // namespace rowsim::testing
