#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rowsim/waveform_log.hpp"

namespace rowsim {

struct ContractLimits {
  double steady_band = 0.01;
  double transient_max = 0.02;
  double recovery_max_s = 0.05;
  double recovery_dwell_s = 0.1;
  double phase_margin_min_deg = 45.0;
  double osc_lo_hz = 1.0;
  double osc_hi_hz = 30.0;
  double osc_power_max = 0.001;
  double overshoot_max = 0.02;
  double hunting_ratio = 0.5;
  double noise_floor = 0.001;  // fraction of v_nom below which extrema are not compared
  double floor_r_up_kw = 5.0;
  double floor_r_dn_kw = 5.0;
  double pcc_lo_hz = 0.2;
  double pcc_hi_hz = 3.0;
  double pcc_band_ratio_max = 0.01;
  double pcc_dpdt_max_kw_per_s = 175.0;
};

void validate(const ContractLimits& limits);

struct CheckResult {
  std::string name;
  bool evaluated = true;
  bool pass = true;
  double measured = 0.0;
  double limit = 0.0;
  double margin = 0.0;  // limit / measured style ratio, >= 1 passes; +inf when measured is 0
  std::string detail;
};

struct EventWindow {
  std::string marker;
  double t_s = 0.0;
  double depth_frac = 0.0;
  double recovery_s = 0.0;
  double overshoot_frac = 0.0;
  bool monotone = true;
  bool from_capture = false;
};

struct TransientResult {
  CheckResult depth;
  CheckResult recovery;
  CheckResult overshoot;
  CheckResult monotone;
  CheckResult unmarked;
  std::vector<EventWindow> events;
  std::vector<std::string> findings;
};

/// Samples outside every event +- 2 * recovery_max. Throws NoSteadyWindow.
CheckResult check_steady(const WaveformLog& log, const ContractLimits& limits);
TransientResult check_transient(const WaveformLog& log, const ContractLimits& limits);
/// Throws InsufficientDuration for < 10 s or < 100 Hz.
CheckResult check_oscillation(const WaveformLog& log, const ContractLimits& limits);

struct LoopParams {
  double r_eq_ohm;
  double c_bus_f;
  double loop_bw_hz;  // <= 0 for an ideal (pole-free) inner loop
};

/// Droop gain, inner-loop pole and bus integrator; phase at gain crossover.
double linearized_phase_margin(const LoopParams& p);
/// Standard second-order mapping from damping ratio to phase margin, degrees.
double zeta_to_phase_margin(double zeta);
/// Damping ratio from a fractional overshoot (0 gives 1).
double overshoot_to_zeta(double overshoot);

struct PhaseMarginEstimate {
  std::optional<double> linearized_deg;
  std::optional<double> fitted_deg;
  std::optional<double> zeta;
  std::string method;  // "linearized" or "step-fit"
  double value_deg = 0.0;
};

/// Throws Unidentifiable when neither loop parameters nor a clean step exist.
PhaseMarginEstimate estimate_phase_margin(const WaveformLog& log, const std::optional<LoopParams>& params,
                                          const ContractLimits& limits);

/// Marked bridging windows (bridge_start .. bridge_end) exempt the floor check.
std::vector<CheckResult> check_reserves_and_pcc(const WaveformLog& log, const ContractLimits& limits);

struct ComplianceReport {
  std::vector<CheckResult> checks;
  std::vector<EventWindow> events;
  std::vector<std::string> findings;
  std::optional<PhaseMarginEstimate> phase_margin;
  bool pass = false;

  const CheckResult* find(const std::string& name) const;
};

/// Runs every check on the spine and, when present, both branch taps. Throws EmptyLog.
ComplianceReport verify(const WaveformLog& log, const ContractLimits& limits,
                        const std::optional<LoopParams>& params = std::nullopt);

}  // namespace rowsim
