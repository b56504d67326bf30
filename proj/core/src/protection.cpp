#include "rowsim/protection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

void validate(const ProtectionConfig& c) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(c.t_clear_branch_us > 0.0 && c.t_clear_branch_us <= 100.0, "t_clear_branch must lie in (0, 100] us");
  need(c.t_iso_row_ms >= 1.0 && c.t_iso_row_ms <= 3.0, "t_iso_row must lie in [1, 3] ms");
  need(c.t_mv_s > 0.0, "t_mv must be > 0");
  need(c.e_clamp_max_j > 0.0, "e_clamp_max must be > 0");
  need(c.trip_di_dt_a_per_s > 0.0 && c.pickup_a > 0.0, "trip thresholds must be > 0");
  need(c.lifecycle_margin >= 1.0, "lifecycle_margin must be >= 1");
  need(c.imd_trip_kohm < c.imd_alarm_kohm, "imd_trip must be < imd_alarm");
  need(c.detect_delay_us >= 0.0 && c.interrupt_us > 0.0, "detection and interrupt times must be positive");
  need(c.coherence_window_us > 0.0, "coherence window must be > 0");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "protection: " + bad);
}

std::string branch_id(int branch) { return "B" + std::to_string(branch); }
std::string segment_id(int segment) { return "S" + std::to_string(segment); }

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::BranchShort: return "branch_short";
    case FaultKind::BusFault: return "bus_fault";
    case FaultKind::MultiBranch: return "multi_branch";
    case FaultKind::GroundFault: return "ground_fault";
    case FaultKind::Arc: return "arc";
  }
  return "";
}

std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  for (auto k : {FaultKind::BranchShort, FaultKind::BusFault, FaultKind::MultiBranch, FaultKind::GroundFault,
                 FaultKind::Arc}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

double branch_fault_current_a(const TripRecord& rec, double t_s) {
  if (rec.sectionalizer) return 0.0;
  const double tau = t_s - rec.t_fault_s;
  if (tau < 0.0 || t_s >= rec.t_trip_s) return 0.0;
  return std::min(rec.i_prospective_a, rec.di_dt_a_per_s * tau);
}

namespace {

struct BranchDetect {
  bool detected;
  double t_detect_s;  // relative to fault onset
};

BranchDetect detect_branch(double i_p, double slope, const ProtectionConfig& cfg) {
  const double m = cfg.lifecycle_margin;
  const double pickup = cfg.pickup_a / m;
  const double delay = units::us_to_s(cfg.detect_delay_us);
  if (slope >= cfg.trip_di_dt_a_per_s / m && i_p >= pickup) return {true, delay};
  // slow fault: desaturation at twice pickup
  if (i_p >= 2.0 * pickup) return {true, 2.0 * pickup / slope + delay};
  return {false, 0.0};
}

TripRecord branch_trip(int b, const FaultEvent& f, const ProtectionConfig& cfg, const RowTopology& topo,
                       double v_bus_v, double t_detect) {
  const double l = units::uh_to_h(topo.l_branch_uh);
  TripRecord r;
  r.device = branch_id(b);
  r.t_fault_s = f.t_start_s;
  r.di_dt_a_per_s = v_bus_v / l;
  r.i_prospective_a = f.magnitude;
  r.clear_time_s = t_detect + units::us_to_s(cfg.interrupt_us);
  r.t_trip_s = f.t_start_s + r.clear_time_s;
  r.i_interrupt_a = std::min(f.magnitude, r.di_dt_a_per_s * r.clear_time_s);
  r.clamp_energy_j = 0.5 * l * r.i_interrupt_a * r.i_interrupt_a;
  r.isolated = {r.device};
  r.isolated_branches = {b};
  if (f.kind == FaultKind::Arc) r.extinguished = true;
  const double budget = units::us_to_s(cfg.t_clear_branch_us) / cfg.lifecycle_margin;
  if (r.clear_time_s > budget * (1.0 + 1e-12)) {
    throw Error(ErrorCode::Miscoordination, r.device + " clears in " + std::to_string(r.clear_time_s * 1e6) +
                                                " us, budget " + std::to_string(budget * 1e6) + " us");
  }
  return r;
}

TripRecord segment_trip(int s, const FaultEvent& f, const ProtectionConfig& cfg, const RowTopology& topo) {
  TripRecord r;
  r.device = segment_id(s);
  r.sectionalizer = true;
  r.t_fault_s = f.t_start_s;
  r.clear_time_s = units::ms_to_s(cfg.t_iso_row_ms);
  r.t_trip_s = f.t_start_s + r.clear_time_s;
  r.isolated_segment = s;
  r.isolated = {r.device};
  for (int b = s * topo.branches_per_segment; b < (s + 1) * topo.branches_per_segment; ++b) {
    r.isolated_branches.push_back(b);
    r.isolated.push_back(branch_id(b));
  }
  return r;
}

}  // namespace

std::vector<TripRecord> detect_and_trip(const FaultEvent& f, const ProtectionConfig& cfg, const RowTopology& topo,
                                        double v_bus_v) {
  for (int b : f.branches) {
    if (!topo.valid_branch(b)) throw Error(ErrorCode::UnknownLocation, "no branch " + std::to_string(b));
  }
  if (f.kind == FaultKind::BusFault && !topo.valid_segment(f.segment)) {
    throw Error(ErrorCode::UnknownLocation, "no segment " + std::to_string(f.segment));
  }
  if (f.kind != FaultKind::BusFault && f.kind != FaultKind::GroundFault && f.branches.empty()) {
    throw Error(ErrorCode::UnknownLocation, "branch fault without a branch");
  }
  const double t_branch = units::us_to_s(cfg.t_clear_branch_us);
  const double t_seg = units::ms_to_s(cfg.t_iso_row_ms);
  if (t_seg < t_branch * cfg.lifecycle_margin) {
    throw Error(ErrorCode::Miscoordination, "sectionalizer would act before the branch interrupter");
  }

  std::vector<TripRecord> out;
  switch (f.kind) {
    case FaultKind::GroundFault:
      return out;
    case FaultKind::BusFault:
      out.push_back(segment_trip(f.segment, f, cfg, topo));
      return out;
    case FaultKind::BranchShort:
    case FaultKind::Arc:
    case FaultKind::MultiBranch:
      break;
  }

  const double slope = v_bus_v / units::uh_to_h(topo.l_branch_uh);
  const BranchDetect d = detect_branch(f.magnitude, slope, cfg);
  if (!d.detected) return out;

  // detection instants per branch, grouped by segment for the coherence test
  std::vector<std::pair<double, int>> hits;
  for (std::size_t i = 0; i < f.branches.size(); ++i) {
    const double off = i < f.branch_onset_offsets_us.size() ? units::us_to_s(f.branch_onset_offsets_us[i]) : 0.0;
    hits.emplace_back(off + d.t_detect_s, f.branches[i]);
  }
  std::sort(hits.begin(), hits.end());
  const double window = units::us_to_s(cfg.coherence_window_us);
  std::vector<int> coherent_segments;
  for (int s = 0; s < topo.n_segments; ++s) {
    std::vector<double> ts;
    for (const auto& [t, b] : hits) {
      if (topo.segment_of(b) == s) ts.push_back(t);
    }
    for (std::size_t i = 1; i < ts.size(); ++i) {
      if (ts[i] - ts[i - 1] <= window) {
        coherent_segments.push_back(s);
        break;
      }
    }
  }
  for (int s : coherent_segments) out.push_back(segment_trip(s, f, cfg, topo));
  for (const auto& [t, b] : hits) {
    if (std::find(coherent_segments.begin(), coherent_segments.end(), topo.segment_of(b)) != coherent_segments.end()) {
      continue;
    }
    FaultEvent shifted = f;
    shifted.t_start_s = f.t_start_s + (t - d.t_detect_s);
    out.push_back(branch_trip(b, shifted, cfg, topo, v_bus_v, d.t_detect_s));
  }
  return out;
}

double parallel_kohm(const std::vector<double>& r) {
  double g = 0.0;
  for (double x : r) g += 1.0 / x;
  return g > 0.0 ? 1.0 / g : units::kInf;
}

IslandPlan imd_island(const InsulationMap& map, const ProtectionConfig& cfg, const RowTopology& topo) {
  if (static_cast<int>(map.branch_kohm.size()) != topo.n_branches() ||
      static_cast<int>(map.segment_kohm.size()) != topo.n_segments) {
    throw Error(ErrorCode::InvalidArgument, "insulation map does not cover the topology");
  }
  if (topo.n_segments > 20) throw Error(ErrorCode::InvalidArgument, "too many segments for island search");
  IslandPlan plan;
  plan.reclose = {cfg.reclose_dwell_s, cfg.imd_alarm_kohm};
  for (double r : map.branch_kohm) {
    plan.alarm |= r < cfg.imd_alarm_kohm;
    plan.trip |= r < cfg.imd_trip_kohm;
  }
  for (double r : map.segment_kohm) {
    plan.alarm |= r < cfg.imd_alarm_kohm;
    plan.trip |= r < cfg.imd_trip_kohm;
  }
  if (!plan.trip) return plan;

  const int bps = topo.branches_per_segment;
  int best_cost = std::numeric_limits<int>::max();
  std::vector<int> best_b;
  std::vector<int> best_s;
  for (unsigned mask = 0; mask < (1u << topo.n_segments); ++mask) {
    int cost = 0;
    std::vector<int> iso_b;
    std::vector<int> iso_s;
    bool ok = true;
    for (int s = 0; s < topo.n_segments && ok; ++s) {
      if (mask & (1u << s)) {
        iso_s.push_back(s);
        cost += bps;
        continue;
      }
      if (map.segment_kohm[static_cast<std::size_t>(s)] < cfg.imd_alarm_kohm) {
        ok = false;
        break;
      }
      std::vector<std::pair<double, int>> live;  // (kOhm, branch)
      for (int b = s * bps; b < (s + 1) * bps; ++b) {
        const double r = map.branch_kohm[static_cast<std::size_t>(b)];
        if (r < cfg.imd_alarm_kohm) {
          iso_b.push_back(b);
          ++cost;
        } else {
          live.emplace_back(r, b);
        }
      }
      // drop the leakiest branches until the segment reads above alarm
      std::sort(live.begin(), live.end());
      double g = 1.0 / map.segment_kohm[static_cast<std::size_t>(s)];
      for (const auto& [r, b] : live) g += 1.0 / r;
      std::size_t k = 0;
      while (1.0 / g < cfg.imd_alarm_kohm && k < live.size()) {
        g -= 1.0 / live[k].first;
        iso_b.push_back(live[k].second);
        ++cost;
        ++k;
      }
      if (1.0 / g < cfg.imd_alarm_kohm) ok = false;
    }
    if (ok && cost < best_cost) {
      best_cost = cost;
      best_b = std::move(iso_b);
      best_s = std::move(iso_s);
    }
  }
  if (best_cost == std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::Infeasible, "no isolation set restores insulation");
  }
  std::sort(best_b.begin(), best_b.end());
  plan.cost = best_cost;
  plan.isolated_branches = best_b;
  plan.isolated_segments = best_s;
  for (int s : best_s) plan.isolated.push_back(segment_id(s));
  for (int b : best_b) plan.isolated.push_back(branch_id(b));
  return plan;
}

bool supervised_reclose(const RecloseRule& rule, double insulation_kohm, bool precharge_ok, double since_trip_s) {
  return insulation_kohm >= rule.alarm_kohm && precharge_ok && since_trip_s >= rule.dwell_s;
}

bool precharge_check(const std::vector<double>& observed, const std::vector<double>& golden, double tolerance,
                     double v_nom_v) {
  if (observed.size() != golden.size() || observed.empty()) {
    throw Error(ErrorCode::ProfileLengthMismatch, "observed " + std::to_string(observed.size()) + " vs golden " +
                                                      std::to_string(golden.size()) + " samples");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) worst = std::max(worst, std::abs(observed[i] - golden[i]));
  return worst <= tolerance * v_nom_v;
}

GradingReport grading_audit(const ProtectionConfig& cfg) {
  GradingReport rep;
  rep.ladder = {{"branch", units::us_to_s(cfg.t_clear_branch_us)},
                {"segment", units::ms_to_s(cfg.t_iso_row_ms)},
                {"mv", cfg.t_mv_s}};
  for (std::size_t i = 1; i < rep.ladder.size(); ++i) {
    const double prev = rep.ladder[i - 1].t_s;
    const double next = rep.ladder[i].t_s;
    const double need = prev * cfg.lifecycle_margin;
    rep.ratios.push_back(next / prev);
    if (need > next * (1.0 + 1e-12)) {
      throw Error(ErrorCode::Miscoordination, rep.ladder[i].name + " stage (" + std::to_string(next) +
                                                  " s) overlaps " + rep.ladder[i - 1].name + " stage with margin");
    }
    if (std::abs(need - next) <= 1e-12 * next) rep.zero_slack = true;
  }
  return rep;
}

}  // namespace rowsim
