#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rowsim/contract_verifier.hpp"
#include "rowsim/mv_flisr.hpp"
#include "rowsim/protection.hpp"
#include "rowsim/scenario.hpp"
#include "rowsim/waveform_log.hpp"

namespace rowsim {

/// Energy terms integrated over one run, kWh.
struct EnergyLedger {
  double pcc_kwh = 0.0;
  double load_kwh = 0.0;
  double bank_delta_kwh = 0.0;   // e_tot * delta SoC, positive when the bank gained energy
  double cap_delta_kwh = 0.0;
  double conversion_loss_kwh = 0.0;
  double esr_loss_kwh = 0.0;
  double sst_internal_kwh = 0.0;  // reverse power absorbed inside the SST
  double fault_kwh = 0.0;
  double dru_out_kwh = 0.0;       // bank terminal energy, for reference
  double recharge_kwh = 0.0;

  double lhs() const { return pcc_kwh; }
  double rhs() const {
    return load_kwh + bank_delta_kwh + cap_delta_kwh + conversion_loss_kwh + esr_loss_kwh + sst_internal_kwh + fault_kwh;
  }
  double relative_error() const;
};

/// The DRU loop engaging after a capacitor-only interval.
struct EngagementRecord {
  double t_arm_s;
  double t_engage_s;
  double v_pre_v;
  double v_engage_v;
};

struct SimResult {
  WaveformLog log;
  EnergyLedger ledger;
  std::vector<TripRecord> trips;
  std::vector<IslandPlan> islands;
  std::vector<RestorationPlan> flisr;
  std::vector<EngagementRecord> engagements;
  std::optional<LoopParams> loop;
  int spurious_trips = 0;  // branch trips raised by load edges
  bool blowup = false;
  std::string blowup_detail;
};

/// Load demand for a scenario before any protection action.
LoadProfile build_profile(const Scenario& sc);

/// Largest finite slope of the aggregate load, kW/s (steps excluded).
double max_load_slope_kw_per_s(const LoadProfile& profile);

/// Runs the multirate row model. Throws ValidationError for a bad scenario;
/// a numeric blowup truncates the log and is reported in the result.
SimResult simulate(const Scenario& sc);

}  // namespace rowsim
