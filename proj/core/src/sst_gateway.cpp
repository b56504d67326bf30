#include "rowsim/sst_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rowsim/error.hpp"
#include "rowsim/spectrum.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const SstSpec& spec) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(spec.p_rated_kw > 0.0, "p_rated must be > 0");
  need(spec.tau_s >= 1.0, "tau must be >= 1 s");
  need(spec.droop_mv_per_a > 0.0, "droop must be > 0");
  need(spec.ramp_cap_kw_per_s > 0.0, "ramp_cap must be > 0");
  need(spec.n_units >= 2, "n_units must be >= 2 (N+1)");
  need(spec.efficiency > 0.0 && spec.efficiency <= 1.0, "efficiency must lie in (0, 1]");
  need(spec.reverse_window_s >= 0.0, "reverse window must be >= 0");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "sst: " + bad);
}

void validate_hierarchy(const SstSpec& sst, double dru_equivalent_droop_ohm) {
  const double ratio = units::mv_per_a_to_ohm(sst.droop_mv_per_a) / dru_equivalent_droop_ohm;
  if (ratio < 5.0 - 1e-9 || ratio > 15.0 + 1e-9) {
    throw Error(ErrorCode::ValidationError,
                "sst droop must be 5-15x softer than the DRU bank droop; ratio is " + std::to_string(ratio));
  }
}

SstState sst_power_command(const SstState& state, const SstSpec& spec, double v_dev, double v_bus, double dt_s,
                           double ramp_scale) {
  SstState next = state;
  next.p_filtered_kw = state.p_filtered_kw + (1.0 - std::exp(-dt_s / spec.tau_s)) * (state.setpoint_kw - state.p_filtered_kw);
  const double droop_kw = units::power_kw(v_dev / units::mv_per_a_to_ohm(spec.droop_mv_per_a), v_bus);
  double raw = next.p_filtered_kw + droop_kw;
  const double max_step = spec.ramp_cap_kw_per_s * ramp_scale * dt_s;
  raw = std::clamp(raw, state.p_out_kw - max_step, state.p_out_kw + max_step);
  raw = std::clamp(raw, -spec.p_rated_kw, spec.p_rated_kw);
  if (raw < 0.0) {
    if (spec.reverse_internal_ok && state.reverse_time_s + dt_s <= spec.reverse_window_s + 1e-12) {
      next.reverse_time_s = state.reverse_time_s + dt_s;
    } else {
      raw = 0.0;
      next.reverse_time_s = state.reverse_time_s + dt_s;
    }
  } else {
    next.reverse_time_s = 0.0;
  }
  next.p_out_kw = raw;
  next.p_pcc_kw = std::max(0.0, raw) / spec.efficiency;
  next.internal_absorbed_kw = std::max(0.0, -raw);
  return next;
}

PccSignature pcc_signature(const std::vector<double>& p, double dt_s, double band_lo_hz, double band_hi_hz) {
  if (!(dt_s > 0.0) || dt_s > 0.1 + 1e-12) {
    throw Error(ErrorCode::NonuniformSampling, "PCC channel must be uniformly sampled at >= 10 Hz");
  }
  if (static_cast<double>(p.size()) * dt_s < 10.0 - 1e-9) {
    throw Error(ErrorCode::LogTooShort, "PCC signature needs >= 10 s of data");
  }
  PccSignature sig;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += p[i];
    if (p[i] < 0.0) ++sig.reverse_count;
    sig.max_import_kw = std::max(sig.max_import_kw, p[i]);
    if (i > 0) sig.max_dpdt_kw_per_s = std::max(sig.max_dpdt_kw_per_s, std::abs(p[i] - p[i - 1]) / dt_s);
  }
  const double mean = sum / static_cast<double>(p.size());
  // join the endpoints so the periodic extension has no wrap step
  std::vector<double> d(p);
  const double slope = p.size() > 1 ? (p.back() - p.front()) / static_cast<double>(p.size() - 1) : 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= slope * static_cast<double>(i);
  const auto bp = spectrum::band_power(d, dt_s, band_lo_hz, band_hi_hz);
  sig.band_power = mean != 0.0 ? bp.mean_square / (mean * mean) : bp.mean_square;
  sig.dominant_hz = bp.dominant_hz;
  return sig;
}

}  // namespace rowsim
