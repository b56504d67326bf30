#include "rowsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

double EnergyLedger::relative_error() const {
  const double scale = std::max({std::abs(lhs()), std::abs(load_kwh), 1e-12});
  return std::abs(lhs() - rhs()) / scale;
}

LoadProfile build_profile(const Scenario& sc) {
  BurstBuilder builder(sc.env, sc.seed, false);
  LoadProfile p = builder.make_base();
  if (sc.p_initial_kw >= 0.0) p.aggregate_kw = PiecewiseLinear(sc.p_initial_kw);
  for (const auto& b : sc.bursts) builder.add_burst(p, b.start_s, b.width_s, b.alpha);
  for (const auto& tr : sc.trains) {
    const double width = tr.period_s * tr.duty;
    for (int i = 0; i < tr.n_bursts; ++i) builder.add_burst(p, tr.start_s + i * tr.period_s, width, tr.alpha);
  }
  for (const auto& v : sc.valleys) builder.add_valley(p, v.start_s, v.width_s, v.depth_kw, v.phase);
  for (const auto& s : sc.steps) builder.add_step(p, s.t_s, s.dp_kw);
  return p;
}

double max_load_slope_kw_per_s(const LoadProfile& profile) {
  const auto& k = profile.aggregate_kw.knots();
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const double dt = k[i + 1].t - k[i].t;
    if (dt > 1e-12) m = std::max(m, std::abs(k[i + 1].before - k[i].after) / dt);
  }
  return m;
}

namespace {

std::pair<double, double> load_range(const LoadProfile& profile) {
  double lo = profile.aggregate_kw.base();
  double hi = lo;
  for (const auto& kn : profile.aggregate_kw.knots()) {
    lo = std::min({lo, kn.before, kn.after});
    hi = std::max({hi, kn.before, kn.after});
  }
  return {lo, hi};
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : " ") + id;
  return s;
}

bool is_fast(const std::string& name) {
  static const char* fast[] = {"step",         "branch_short", "bus_fault",    "multi_branch", "arc",
                               "ground_fault", "branch_trip",  "segment_trip", "feeder_trip",  "imd_isolate",
                               "row_shed",     "flisr_restore_confirmed"};
  return std::any_of(std::begin(fast), std::end(fast), [&](const char* f) { return name == f; });
}

class Engine {
 public:
  explicit Engine(const Scenario& sc)
      : sc_(sc),
        profile_(build_profile(sc)),
        cursor_(profile_.aggregate_kw),
        dt_(sc.electrical_dt_s),
        flat_(sc.recharge.avg_windows_s, kFrpTick, profile_.aggregate_kw.value(0.0)),
        live_(static_cast<std::size_t>(sc.row.n_branches()), true) {}

  SimResult run();

 private:
  static constexpr double kSstTick = 0.01;
  static constexpr double kFrpTick = 0.1;

  void schedule(double t, std::function<void()> fn) { queue_.emplace(t, std::move(fn)); }
  void mark(double t, const std::string& name, const std::string& detail = "");
  void schedule_events();
  void fire_due(double t);
  void observe(double t, double v, double p_load_kw);
  double tap_v(int b, double t, double v, double p_load_kw) const;
  int tap_b() const { return sc_.tap_b_branch < 0 ? sc_.row.n_branches() - 1 : sc_.tap_b_branch; }
  void start_capture(double t, const std::string& label);

  int live_count() const { return static_cast<int>(std::count(live_.begin(), live_.end(), true)); }
  double p_load(double t) {
    const double base = cursor_.value(t);
    return shed_ ? 0.0 : base * live_count() / static_cast<double>(live_.size());
  }
  double h_mv(double p_load_kw, double t) const {
    if (t < mv_pending_until_ || sst_blocked_) return 0.0;
    const auto& pod = sc_.pod;
    const double share = pod.p_mv_kw * (1.0 - pod.l) - (pod.n_rows - 1) * pod.u * pod.p_row_kw;
    return std::max(0.0, std::min(share, sc_.sst.p_rated_kw) - p_load_kw);
  }
  double p_avg(double t) const {
    const double f = std::clamp((t - t_frp_) / kFrpTick, 0.0, 1.0);
    return p_avg_prev_ + (p_avg_cur_ - p_avg_prev_) * f;
  }
  double r_dn_net(const Reserves& r) const { return r.r_dn_kw - p_chg_; }
  bool floors_ok(const Reserves& r) const {
    if (bank_.n_shelves == 0) return true;
    return r.r_up_kw >= sc_.recharge.floor_up_kw - 1e-6 && r_dn_net(r) >= sc_.recharge.floor_dn_kw - 1e-6;
  }
  bool comm_ok(double t) const {
    return std::none_of(sc_.comm_loss.begin(), sc_.comm_loss.end(),
                        [&](const WindowSpec& w) { return t >= w.t0_s && t < w.t1_s; });
  }
  double skew_ms(double t) const {
    double s = 0.0;
    for (const auto& w : sc_.clock_skew) {
      if (t >= w.t0_s && t < w.t1_s) s = std::max(s, w.value);
    }
    return s;
  }

  void sst_tick(double t, double p_load_kw);
  void frp_tick(double t, double p_load_kw, const Reserves& r);
  void freeze(double t, Veto v);
  void log_sample(double t, double p_load_kw, const Reserves& r);

  const Scenario& sc_;
  LoadProfile profile_;
  PiecewiseLinear::Cursor cursor_;
  double dt_;
  SimResult res_;
  std::multimap<double, std::function<void()>> queue_;
  std::string pending_events_;

  BusState bus_;
  DruBankState bank_;
  DruEngagement engage_;
  double arm_t_ = 0.0;
  double arm_v_ = 0.0;

  SstState sst_;
  double sst_from_ = 0.0;
  double sst_to_ = 0.0;
  double sst_now_ = 0.0;
  double t_sst_ = 0.0;
  bool sst_blocked_ = false;
  bool reserve_active_ = false;

  FrpState frp_;
  bool recharge_active_ = false;
  double p_chg_ = 0.0;
  double chg_target_ = 0.0;
  double alloc_grant_ = units::kInf;
  Veto veto_ = Veto::None;
  double margin_slew_ = 0.0;
  FlatAverage flat_;
  double p_avg_prev_ = 0.0;
  double p_avg_cur_ = 0.0;
  double t_frp_ = 0.0;
  double tick_load_kws_ = 0.0;
  double tick_len_s_ = 0.0;
  long alloc_tick_ = 0;

  std::vector<bool> live_;
  bool shed_ = false;
  std::vector<TripRecord> branch_faults_;
  double local_fault_until_ = -1.0;
  double mv_pending_until_ = -1.0;
  bool bridging_ = false;
  bool bridge_armed_ = false;  // bridge_end allowed once the SST is unblocked
  double prev_branch_kw_ = 0.0;

  double t_now_grid_ = 0.0;
  std::vector<double> ring_;
  std::vector<double> ring_a_;
  std::vector<double> ring_b_;
  std::size_t ring_head_ = 0;
  std::size_t ring_fill_ = 0;
  int capture_ = -1;
  double capture_end_ = 0.0;
};

void Engine::mark(double t, const std::string& name, const std::string& detail) {
  res_.log.markers.push_back({t, name, detail});
  pending_events_ += (pending_events_.empty() ? "" : "|") + name;
  if (is_fast(name)) start_capture(t, name);
}

void Engine::start_capture(double t, const std::string& label) {
  if (capture_ >= 0 && t <= capture_end_) {
    capture_end_ = std::max(capture_end_, t + sc_.capture_post_s);
    return;
  }
  Capture c;
  c.dt_s = dt_;
  c.label = label;
  const std::size_t n = ring_fill_;
  c.v_bus_v.reserve(n + static_cast<std::size_t>(sc_.capture_post_s / dt_) + 2);
  const std::size_t cap = ring_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (ring_head_ + cap - n + i) % cap;
    c.v_bus_v.push_back(ring_[j]);
    c.branch_a_v.push_back(ring_a_[j]);
    c.branch_b_v.push_back(ring_b_[j]);
  }
  c.t0_s = t_now_grid_ - static_cast<double>(n - 1) * dt_;
  res_.log.captures.push_back(std::move(c));
  capture_ = static_cast<int>(res_.log.captures.size()) - 1;
  capture_end_ = t + sc_.capture_post_s;
}

void Engine::observe(double t, double v, double p_load_kw) {
  t_now_grid_ = t;
  const double va = tap_v(sc_.tap_a_branch, t, v, p_load_kw);
  const double vb = tap_v(tap_b(), t, v, p_load_kw);
  ring_[ring_head_] = v;
  ring_a_[ring_head_] = va;
  ring_b_[ring_head_] = vb;
  ring_head_ = (ring_head_ + 1) % ring_.size();
  ring_fill_ = std::min(ring_fill_ + 1, ring_.size());
  if (capture_ < 0) return;
  if (t <= capture_end_ + 1e-12) {
    auto& c = res_.log.captures[static_cast<std::size_t>(capture_)];
    c.v_bus_v.push_back(v);
    c.branch_a_v.push_back(va);
    c.branch_b_v.push_back(vb);
  } else {
    capture_ = -1;
  }
}

void Engine::fire_due(double t) {
  while (!queue_.empty() && queue_.begin()->first <= t + 1e-12) {
    auto fn = std::move(queue_.begin()->second);
    queue_.erase(queue_.begin());
    fn();
  }
}

void Engine::freeze(double t, Veto v) {
  if (recharge_active_ || p_chg_ > 0.0) mark(t, "recharge_off", std::string(to_string(v)));
  recharge_active_ = false;
  p_chg_ = 0.0;
  chg_target_ = 0.0;
  veto_ = v;
}

void Engine::schedule_events() {
  for (const auto& b : sc_.bursts) {
    schedule(b.start_s, [this, b] { mark(b.start_s, "burst_on"); });
    schedule(b.start_s + b.width_s, [this, b] { mark(b.start_s + b.width_s, "burst_off"); });
  }
  for (const auto& tr : sc_.trains) {
    for (int i = 0; i < tr.n_bursts; ++i) {
      const double t0 = tr.start_s + i * tr.period_s;
      const double t1 = t0 + tr.period_s * tr.duty;
      schedule(t0, [this, t0] { mark(t0, "burst_on"); });
      schedule(t1, [this, t1] { mark(t1, "burst_off"); });
    }
  }
  for (const auto& v : sc_.valleys) {
    schedule(v.start_s, [this, v] { mark(v.start_s, "valley_on"); });
    schedule(v.start_s + v.width_s, [this, v] { mark(v.start_s + v.width_s, "valley_off"); });
  }
  for (const auto& s : sc_.steps) {
    schedule(s.t_s, [this, s] {
      std::ostringstream d;
      d << s.dp_kw << " kW";
      mark(s.t_s, "step", d.str());
    });
  }
  for (const auto& w : sc_.comm_loss) {
    schedule(w.t0_s, [this, w] { mark(w.t0_s, "comm_loss"); });
    if (w.t1_s < sc_.horizon_s) schedule(w.t1_s, [this, w] { mark(w.t1_s, "comm_restore"); });
  }
  for (const auto& w : sc_.clock_skew) {
    schedule(w.t0_s, [this, w] { mark(w.t0_s, "clock_skew"); });
    if (w.t1_s < sc_.horizon_s) schedule(w.t1_s, [this, w] { mark(w.t1_s, "clock_skew_end"); });
  }
  for (double t : sc_.unit_losses_s) {
    schedule(t, [this, t] {
      reserve_active_ = true;
      mark(t, "sst_unit_loss");
      freeze(t, Veto::ReserveUnitActive);
    });
  }

  for (const auto& f : sc_.faults) {
    schedule(f.t_start_s, [this, f] {
      const double t = f.t_start_s;
      std::vector<std::string> where;
      for (int b : f.branches) where.push_back(branch_id(b));
      if (f.segment >= 0) where.push_back(segment_id(f.segment));
      mark(t, std::string(to_string(f.kind)), join_ids(where));
      if (f.kind == FaultKind::GroundFault) {
        const double healthy = 10.0 * sc_.protection.imd_alarm_kohm * sc_.row.n_branches();
        InsulationMap map{std::vector<double>(static_cast<std::size_t>(sc_.row.n_branches()), healthy),
                          std::vector<double>(static_cast<std::size_t>(sc_.row.n_segments), healthy)};
        for (int b : f.branches) map.branch_kohm[static_cast<std::size_t>(b)] = f.magnitude;
        if (f.branches.empty() && f.segment >= 0) map.segment_kohm[static_cast<std::size_t>(f.segment)] = f.magnitude;
        const IslandPlan plan = imd_island(map, sc_.protection, sc_.row);
        res_.islands.push_back(plan);
        if (plan.alarm) mark(t, "imd_alarm", join_ids(plan.isolated));
        if (plan.trip) {
          const double ti = t + sc_.imd_response_s;
          schedule(ti, [this, plan, ti] {
            for (int b : plan.isolated_branches) live_[static_cast<std::size_t>(b)] = false;
            for (int s : plan.isolated_segments) {
              for (int j = 0; j < sc_.row.branches_per_segment; ++j) {
                live_[static_cast<std::size_t>(s * sc_.row.branches_per_segment + j)] = false;
              }
            }
            mark(ti, "imd_isolate", join_ids(plan.isolated));
          });
        }
        return;
      }
      const auto recs = detect_and_trip(f, sc_.protection, sc_.row, bus_.v_bus_v);
      for (const auto& rec : recs) {
        res_.trips.push_back(rec);
        local_fault_until_ = std::max(local_fault_until_, rec.t_trip_s);
        if (rec.sectionalizer) {
          schedule(rec.t_trip_s, [this, rec] {
            const int s = rec.isolated_segment;
            for (int j = 0; j < sc_.row.branches_per_segment; ++j) {
              live_[static_cast<std::size_t>(s * sc_.row.branches_per_segment + j)] = false;
            }
            mark(rec.t_trip_s, "segment_trip", rec.device);
          });
        } else {
          branch_faults_.push_back(rec);
          schedule(rec.t_trip_s, [this, rec] {
            for (int b : rec.isolated_branches) live_[static_cast<std::size_t>(b)] = false;
            mark(rec.t_trip_s, "branch_trip", rec.device);
          });
        }
      }
    });
  }

  for (const auto& ft : sc_.feeder_trips) {
    schedule(ft.t_s, [this, ft] {
      const double t = ft.t_s;
      RestorationPlan plan = flisr_reconfigure(ft.segment, sc_.mv, t);
      mark(t, "feeder_trip", ft.segment);
      const auto has = [&](const std::vector<std::string>& v) {
        return std::find(v.begin(), v.end(), sc_.row_id) != v.end();
      };
      const bool interrupted = has(plan.interrupted_rows);
      const bool restored = has(plan.restored_rows);
      mv_pending_until_ = std::isfinite(plan.t_confirm_s) ? plan.t_confirm_s : units::kInf;
      freeze(t, Veto::TopologyChange);
      for (const auto& a : plan.actions) {
        const std::string name = a.close ? "flisr_tie_close" : "flisr_open";
        schedule(a.t_s, [this, a, name] { mark(a.t_s, name, a.switch_id); });
      }
      if (interrupted) {
        sst_blocked_ = true;
        sst_ = SstState{};
        sst_from_ = sst_to_ = sst_now_ = 0.0;
        bridging_ = true;
        bridge_armed_ = false;
        mark(t, "bridge_start", sc_.row_id);
        if (restored) {
          const double tc = plan.t_confirm_s;
          schedule(tc, [this, tc] {
            sst_blocked_ = false;
            bridge_armed_ = true;
            mark(tc, "flisr_restore_confirmed", sc_.row_id);
          });
        } else {
          const double ts = t + sc_.pod.t_bridge_s;
          schedule(ts, [this, ts] {
            shed_ = true;
            bridging_ = false;
            mark(ts, "row_shed", sc_.row_id);
            mark(ts, "bridge_end", sc_.row_id);
          });
        }
      } else if (std::isfinite(plan.t_confirm_s)) {
        const double tc = plan.t_confirm_s;
        schedule(tc, [this, tc] { mark(tc, "flisr_restore_confirmed"); });
      }
      res_.flisr.push_back(std::move(plan));
    });
  }
}

void Engine::sst_tick(double t, double p_load_kw) {
  t_sst_ = t;
  if (sst_blocked_) {
    sst_ = SstState{};
    sst_from_ = sst_to_ = sst_now_ = 0.0;
    return;
  }
  sst_.setpoint_kw = p_load_kw + p_chg_;
  SstState cur = sst_;
  cur.p_out_kw = sst_now_;
  const double scale = frp_.tier == Tier::Tier0 ? 0.5 : 1.0;
  const SstState next = sst_power_command(cur, sc_.sst, sc_.bus.v_nom_v - bus_.v_bus_v, bus_.v_bus_v, kSstTick, scale);
  sst_from_ = sst_now_;
  sst_to_ = next.p_out_kw;
  sst_ = next;
}

void Engine::frp_tick(double t, double p_load_kw, const Reserves& r) {
  if (tick_len_s_ > 0.0) {
    flat_.push(tick_load_kws_ / tick_len_s_);
    p_avg_prev_ = p_avg(t);
    p_avg_cur_ = flat_.value();
  }
  tick_load_kws_ = 0.0;
  tick_len_s_ = 0.0;
  t_frp_ = t;

  const bool ok = comm_ok(t);
  const Tier before = frp_.tier;
  TickEvents ev;
  ev.comm_ok = ok;
  ev.clock_skew_ms = skew_ms(t);
  ev.allocator_heartbeat = ok;
  frp_ = tier_step(frp_, ev, kFrpTick, sc_.tier).state;
  if (frp_.tier != before) mark(t, "tier" + std::to_string(static_cast<int>(frp_.tier)));
  if (frp_.tier == Tier::Tier0) freeze(t, Veto::TierZero);
  if (reserve_active_) freeze(t, Veto::ReserveUnitActive);

  const double hm = h_mv(p_load_kw, t);
  const bool fl = floors_ok(r);
  if (!sc_.recharge.enabled || bank_.n_shelves == 0 || frp_.tier == Tier::Tier0 || reserve_active_) {
    chg_target_ = 0.0;
  } else {
    AdmissionContext ctx;
    ctx.mv_event_pending = t < mv_pending_until_ || sst_blocked_;
    ctx.headroom_ok = hm > 0.0;
    ctx.local_fault = t < local_fault_until_;
    const auto adm = admission_step(bank_.soc, profile_.phase_at(t), sc_.bus.v_nom_v - bus_.v_bus_v, fl, sc_.recharge,
                                    recharge_active_, ctx);
    if (!recharge_active_ && adm.active) mark(t, "recharge_on");
    if (recharge_active_ && !adm.active) {
      if (is_freeze(adm.veto)) {
        freeze(t, adm.veto);
      } else {
        mark(t, "recharge_off", std::string(to_string(adm.veto)));
        veto_ = adm.veto;
      }
    }
    recharge_active_ = adm.active;
    const double raw = recharge_active_ ? urgency_scale(bank_.soc, sc_.recharge) *
                                              recharge_command(p_avg(t), p_load_kw, hm, fl, sc_.recharge)
                                        : 0.0;
    const long every = std::max(1L, std::lround(sc_.pod.cadence_s / kFrpTick));
    const long tick = std::lround(t / kFrpTick);
    if (ok && tick % every == 0) {
      RowSummary row;
      row.id = sc_.row_id;
      row.p_demand_kw = p_load_kw;
      row.p_chg_request_kw = recharge_active_ ? r.r_dn_kw : 0.0;
      row.last_safe_setpoint_kw = sst_.setpoint_kw;
      const auto alloc = pod_allocate({row}, sc_.pod, alloc_tick_++);
      alloc_grant_ = alloc.rows.front().recharge_kw;
    }
    chg_target_ = frp_.tier == Tier::Tier2 ? std::min(raw, alloc_grant_) : raw;
  }
  frp_.recharge_active = recharge_active_;
  frp_.p_chg_kw = p_chg_;
}

void Engine::log_sample(double t, double p_load_kw, const Reserves& r) {
  auto& L = res_.log;
  const double v = bus_.v_bus_v;
  L.t_s.push_back(t);
  L.v_bus_v.push_back(v);
  L.p_load_kw.push_back(p_load_kw);
  L.dru_p_kw.push_back(bank_.p_out_kw);
  L.soc.push_back(bank_.soc);
  L.r_up_kw.push_back(bank_.n_shelves > 0 ? r.r_up_kw : 0.0);
  L.r_dn_kw.push_back(bank_.n_shelves > 0 ? r_dn_net(r) : 0.0);
  L.sst_p_kw.push_back(sst_now_);
  L.pcc_p_kw.push_back(std::max(0.0, sst_now_) / sc_.sst.efficiency);
  L.p_chg_kw.push_back(p_chg_);
  L.tier.push_back(static_cast<int>(frp_.tier));
  L.event.push_back(pending_events_);
  pending_events_.clear();

  L.p_avg_kw.push_back(p_avg(t));
  L.h_mv_kw.push_back(h_mv(p_load_kw, t));
  L.sst_setpoint_kw.push_back(sst_.setpoint_kw);
  L.floors_ok.push_back(floors_ok(r) ? 1 : 0);
  L.veto.push_back(veto_ == Veto::None ? "" : std::string(to_string(veto_)));
  veto_ = Veto::None;
  L.reserve_sst_setpoint_kw.push_back(reserve_active_ ? sst_.setpoint_kw : 0.0);

  L.branch_a_v.push_back(tap_v(sc_.tap_a_branch, t, v, p_load_kw));
  L.branch_b_v.push_back(tap_v(tap_b(), t, v, p_load_kw));
}

double Engine::tap_v(int b, double t, double v, double p_load_kw) const {
  const int n_live = live_count();
  double i = 0.0;
  if (live_[static_cast<std::size_t>(b)] && n_live > 0) i = units::current_a(p_load_kw / n_live, v);
  for (const auto& rec : branch_faults_) {
    if (std::find(rec.isolated_branches.begin(), rec.isolated_branches.end(), b) != rec.isolated_branches.end()) {
      i += branch_fault_current_a(rec, t);
    }
  }
  return v - i * units::mohm_to_ohm(sc_.tap_series_mohm);
}

SimResult Engine::run() {
  validate(sc_);
  const double v_nom = sc_.bus.v_nom_v;
  bus_ = BusState{v_nom, v_nom, 0.0};
  bank_ = sc_.bank;
  bank_.p_out_kw = 0.0;
  const double p0 = cursor_.value(0.0);
  sst_.p_filtered_kw = sst_.p_out_kw = sst_.setpoint_kw = p0;
  sst_.p_pcc_kw = p0 / sc_.sst.efficiency;
  sst_from_ = sst_to_ = sst_now_ = p0;
  p_avg_prev_ = p_avg_cur_ = flat_.value();
  prev_branch_kw_ = p0 / static_cast<double>(live_.size());
  frp_.tier = comm_ok(0.0) ? Tier::Tier2 : Tier::Tier1;

  const auto [lo, hi] = load_range(profile_);
  const double shortest = *std::min_element(sc_.recharge.avg_windows_s.begin(), sc_.recharge.avg_windows_s.end());
  const double load_slew =
      sc_.recharge.load_slew_kw_per_s > 0.0 ? sc_.recharge.load_slew_kw_per_s : max_load_slope_kw_per_s(profile_);
  margin_slew_ = load_slew + (hi - lo) / shortest;

  ring_.assign(static_cast<std::size_t>(std::lround(sc_.capture_pre_s / dt_)) + 1, v_nom);
  ring_a_ = ring_b_ = ring_;
  if (bank_.n_shelves > 0) {
    res_.loop = LoopParams{equivalent_droop_ohm(sc_.shelf, bank_.n_shelves), units::mf_to_f(sc_.bus.c_bus_mf),
                           sc_.shelf.loop_bw_hz};
  }

  auto ticks = [&](double period) { return std::max(1L, std::lround(period / dt_)); };
  const long n_steps = std::lround(sc_.horizon_s / dt_);
  const long m_sst = ticks(kSstTick);
  const long m_frp = ticks(kFrpTick);
  const long decim = ticks(sc_.log_dt_s);
  res_.log.dt_s = static_cast<double>(decim) * dt_;
  res_.log.v_nom_v = v_nom;
  res_.log.reserve(static_cast<std::size_t>(n_steps / decim + 1));
  schedule_events();

  const double soc0 = bank_.soc;
  const double c_f = units::mf_to_f(sc_.bus.c_bus_mf);
  const double trip_slope = sc_.protection.trip_di_dt_a_per_s / sc_.protection.lifecycle_margin;
  const double trip_jump = sc_.protection.pickup_a / sc_.protection.lifecycle_margin;
  const auto& rc = sc_.recharge;
  double pcc = 0, load = 0, conv = 0, internal = 0, esr = 0, fault = 0, dru = 0, chg = 0;  // kWs

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt_;
    observe(t, bus_.v_bus_v, p_load(t));
    fire_due(t);
    const double pl = p_load(t);
    const Reserves r = reserves(bank_, sc_.shelf);
    if (k % m_sst == 0) sst_tick(t, pl);
    if (k % m_frp == 0) frp_tick(t, pl, r);
    const double v = bus_.v_bus_v;
    const double v_dev = v_nom - v;
    if (p_chg_ > 0.0) {
      if (!floors_ok(r)) freeze(t, Veto::FloorViolation);
      else if (std::abs(v_dev) > rc.local_fault_v || t < local_fault_until_) freeze(t, Veto::LocalFault);
      else if (t < mv_pending_until_ || sst_blocked_) freeze(t, Veto::TopologyChange);
    }
    if (bank_.n_shelves > 0) {
      const double margin = std::min(p_avg(t) - rc.r_safety_kw - pl, h_mv(pl, t));
      const double cap = std::min(valley_cap_kw(margin, rc.ramp_cap_kw_per_s, margin_slew_),
                                  std::max(0.0, r.r_dn_kw - rc.floor_dn_kw));
      p_chg_ = govern_recharge(p_chg_, chg_target_, cap, rc.ramp_cap_kw_per_s, dt_);
    }

    if (k % decim == 0) log_sample(t, pl, r);
    if (k == n_steps) break;

    const int n_live = live_count();
    const double branch_kw = n_live > 0 ? pl / n_live : 0.0;
    const double di = units::current_a(branch_kw - prev_branch_kw_, v);
    if (std::abs(di) / dt_ >= trip_slope && std::abs(di) >= trip_jump) {
      ++res_.spurious_trips;
      mark(t, "branch_trip", "load-edge");
    }
    prev_branch_kw_ = branch_kw;

    sst_now_ = sst_blocked_ ? 0.0 : sst_from_ + (sst_to_ - sst_from_) * std::min(1.0, (t + dt_ - t_sst_) / kSstTick);
    const double t_mid = t + 0.5 * dt_;
    double i_fault = 0.0;
    for (const auto& rec : branch_faults_) i_fault += branch_fault_current_a(rec, t_mid);
    branch_faults_.erase(std::remove_if(branch_faults_.begin(), branch_faults_.end(),
                                        [&](const TripRecord& rec) { return rec.t_trip_s < t - 1.0; }),
                         branch_faults_.end());
    const double i_load = units::current_a(pl, v);
    const double i_chg = units::current_a(p_chg_, v);
    const double i_sst = units::current_a(sst_now_, v);
    const double i_other = i_sst - i_load - i_chg - i_fault;

    const bool was_holding = engage_.hold_remaining_s > 0.0;
    BusStepResult step;
    try {
      step = step_bus(bus_, sc_.bus, bank_, sc_.shelf, engage_, i_other, dt_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NumericBlowup) throw;
      res_.blowup = true;
      res_.blowup_detail = e.what();
      mark(t + dt_, "numeric_blowup", e.what());
      break;
    }
    if (!was_holding && step.held) {
      arm_t_ = t;
      arm_v_ = v;
    }
    if (engage_.engaged_this_step) {
      res_.engagements.push_back({arm_t_, t + engage_.engage_t_offset_s, arm_v_, engage_.v_at_engage_v});
    }

    const double vdt = step.vdt_vs;
    const double e_chg = units::power_kw(i_chg, vdt);
    const double e_sst = units::power_kw(i_sst, vdt);
    if (bank_.n_shelves > 0) {
      DruBankState tmp = bank_;
      tmp.p_out_kw = (step.e_dru_kj - e_chg) / dt_;
      tmp = step_soc(tmp, sc_.shelf, dt_);
      bank_.soc = tmp.soc;
      bank_.thermal_window_avg_kw = tmp.thermal_window_avg_kw;
    }
    const double p_pcc = std::max(0.0, sst_now_) / sc_.sst.efficiency;
    pcc += p_pcc * dt_;
    conv += p_pcc * dt_ - std::max(0.0, e_sst);
    internal += std::max(0.0, -e_sst);
    load += units::power_kw(i_load, vdt);
    fault += units::power_kw(i_fault, vdt);
    esr += step.esr_loss_kj;
    dru += step.e_dru_kj;
    chg += e_chg;
    tick_load_kws_ += pl * dt_;
    tick_len_s_ += dt_;

    if (bridging_ && bridge_armed_ && sst_now_ >= 0.95 * pl) {
      bridging_ = false;
      mark(t + dt_, "bridge_end", sc_.row_id);
    }
  }

  if (!pending_events_.empty() && !res_.log.event.empty()) {
    auto& last = res_.log.event.back();
    last += (last.empty() ? "" : "|") + pending_events_;
    pending_events_.clear();
  }

  auto& E = res_.ledger;
  E.pcc_kwh = units::kws_to_kwh(pcc);
  E.load_kwh = units::kws_to_kwh(load);
  E.conversion_loss_kwh = units::kws_to_kwh(conv);
  E.sst_internal_kwh = units::kws_to_kwh(internal);
  E.esr_loss_kwh = units::kws_to_kwh(esr);
  E.fault_kwh = units::kws_to_kwh(fault);
  E.dru_out_kwh = units::kws_to_kwh(dru);
  E.recharge_kwh = units::kws_to_kwh(chg);
  E.bank_delta_kwh = (bank_.soc - soc0) * bank_.e_tot_kwh(sc_.shelf);
  E.cap_delta_kwh = units::kws_to_kwh(0.5 * c_f * (bus_.v_c_v * bus_.v_c_v - v_nom * v_nom) / units::kWattsPerKw);
  return std::move(res_);
}

}  // namespace

SimResult simulate(const Scenario& sc) { return Engine(sc).run(); }

}  // namespace rowsim
