#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rowsim/contract_verifier.hpp"
#include "rowsim/dru_bank.hpp"
#include "rowsim/mv_flisr.hpp"
#include "rowsim/protection.hpp"
#include "rowsim/recharge_frp.hpp"
#include "rowsim/row_bus.hpp"
#include "rowsim/sst_gateway.hpp"
#include "rowsim/workload.hpp"

namespace rowsim {

struct BurstSpec {
  double start_s;
  double width_s;
  double alpha;
};

struct StepSpec {
  double t_s;
  double dp_kw;
};

struct ValleySpec {
  double start_s;
  double width_s;
  double depth_kw;
  Phase phase = Phase::Idle;
};

struct TrainSpec {
  double start_s;
  double period_s;
  double duty;
  int n_bursts;
  double alpha;
};

struct FeederTripSpec {
  double t_s;
  std::string segment;
};

struct WindowSpec {
  double t0_s;
  double t1_s;
  double value = 0.0;  // clock skew in ms for skew windows
};

struct Scenario {
  std::string name = "unnamed";
  double horizon_s = 10.0;
  std::uint64_t seed = 1;
  double electrical_dt_s = 1e-5;
  double log_dt_s = 1e-3;
  double capture_pre_s = 1e-3;
  double capture_post_s = 0.06;
  double p_initial_kw = -1.0;  // < 0 means the envelope average

  WorkloadEnvelope env;
  BusParams bus;
  ShelfSpec shelf;
  DruBankState bank;
  SstSpec sst;
  RechargeConfig recharge;
  TierConfig tier;
  ProtectionConfig protection;
  RowTopology row;
  int tap_a_branch = 0;
  int tap_b_branch = -1;       // -1 = last branch
  double tap_series_mohm = 2.0;
  double imd_response_s = 1.0;
  LoopTopology mv;
  std::string row_id = "row1";
  PodConfig pod;
  ContractLimits limits;

  std::vector<BurstSpec> bursts;
  std::vector<StepSpec> steps;
  std::vector<ValleySpec> valleys;
  std::vector<TrainSpec> trains;
  std::vector<FaultEvent> faults;
  std::vector<FeederTripSpec> feeder_trips;
  std::vector<WindowSpec> comm_loss;
  std::vector<WindowSpec> clock_skew;
  std::vector<double> unit_losses_s;
};

/// Cross-checks the whole scenario and throws ValidationError listing every problem.
void validate(const Scenario& sc);

/// Parses a quantity such as "2.1 mF" into SI-scaled rowsim units for the
/// named dimension ("power" -> kW, "time" -> s, "capacitance" -> mF, ...).
double parse_quantity(std::string_view text, std::string_view dimension);

/// Reads a scenario document. Throws ParseError (with line or field path) or ValidationError.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);

}  // namespace rowsim
