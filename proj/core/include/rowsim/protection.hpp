#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rowsim {

struct ProtectionConfig {
  double t_clear_branch_us = 100.0;
  double t_iso_row_ms = 2.0;
  double t_mv_s = 1.5;
  double e_clamp_max_j = 1.0;
  double trip_di_dt_a_per_s = 2e7;
  double pickup_a = 150.0;         // slope detection is qualified by this excursion
  double lifecycle_margin = 1.25;
  double imd_alarm_kohm = 100.0;
  double imd_trip_kohm = 50.0;
  double detect_delay_us = 10.0;
  double interrupt_us = 50.0;
  double coherence_window_us = 200.0;
  double reclose_dwell_s = 1.0;
};

void validate(const ProtectionConfig& cfg);

/// Row layout: segments on the spine, each feeding a fixed number of branches.
struct RowTopology {
  int n_segments = 4;
  int branches_per_segment = 8;
  double l_branch_uh = 5.0;

  int n_branches() const { return n_segments * branches_per_segment; }
  int segment_of(int branch) const { return branch / branches_per_segment; }
  bool valid_branch(int b) const { return b >= 0 && b < n_branches(); }
  bool valid_segment(int s) const { return s >= 0 && s < n_segments; }
};

std::string branch_id(int branch);
std::string segment_id(int segment);

enum class FaultKind { BranchShort, BusFault, MultiBranch, GroundFault, Arc };
std::string_view to_string(FaultKind k);
std::optional<FaultKind> parse_fault_kind(std::string_view s);

struct FaultEvent {
  FaultKind kind = FaultKind::BranchShort;
  std::vector<int> branches;  // branch faults
  int segment = -1;           // bus faults
  double t_start_s = 0.0;
  double magnitude = 0.0;     // prospective A, or insulation kOhm for ground faults
  std::vector<double> branch_onset_offsets_us;  // multi-branch detection skew, optional
};

struct TripRecord {
  std::string device;
  bool sectionalizer = false;
  double t_fault_s = 0.0;
  double t_trip_s = 0.0;
  double clear_time_s = 0.0;
  double clamp_energy_j = 0.0;
  double i_interrupt_a = 0.0;
  double di_dt_a_per_s = 0.0;
  double i_prospective_a = 0.0;
  std::vector<std::string> isolated;
  std::vector<int> isolated_branches;
  int isolated_segment = -1;
  std::optional<bool> extinguished;  // arcs only
  std::optional<bool> reclose;
};

/// Fault current drawn from the bus at time t for a branch trip record.
double branch_fault_current_a(const TripRecord& rec, double t_s);

/// Throws UnknownLocation for ids outside the topology and Miscoordination if
/// a slower device would act before a faster one.
std::vector<TripRecord> detect_and_trip(const FaultEvent& fault, const ProtectionConfig& cfg, const RowTopology& topo,
                                        double v_bus_v);

struct InsulationMap {
  std::vector<double> branch_kohm;   // one per branch
  std::vector<double> segment_kohm;  // segment bus reading, one per segment
};

struct RecloseRule {
  double dwell_s;
  double alarm_kohm;
};

struct IslandPlan {
  bool alarm = false;
  bool trip = false;
  std::vector<int> isolated_branches;
  std::vector<int> isolated_segments;
  std::vector<std::string> isolated;
  int cost = 0;  // branches de-energized
  RecloseRule reclose{};
};

/// Parallel combination of kOhm readings; +inf for an empty set.
double parallel_kohm(const std::vector<double>& r);

/// Smallest island whose removal lifts every remaining element, and each live
/// segment's combined reading, to at least the alarm level.
IslandPlan imd_island(const InsulationMap& map, const ProtectionConfig& cfg, const RowTopology& topo);

/// Supervised reclose: insulation back above alarm, pre-charge pass, dwell elapsed.
bool supervised_reclose(const RecloseRule& rule, double insulation_kohm, bool precharge_ok, double since_trip_s);

/// Pointwise comparison against a golden profile. Throws ProfileLengthMismatch.
bool precharge_check(const std::vector<double>& observed, const std::vector<double>& golden, double tolerance,
                     double v_nom_v);

struct LadderStage {
  std::string name;
  double t_s;
};

struct GradingReport {
  std::vector<LadderStage> ladder;
  std::vector<double> ratios;  // t_next / t_prev
  bool zero_slack = false;
};

/// Throws Miscoordination if t_prev * margin > t_next for any adjacent pair.
GradingReport grading_audit(const ProtectionConfig& cfg);

}  // namespace rowsim
