#include "rowsim/mv_flisr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

double segment_current(double p_kw, double kv) {
  if (!(kv > 0.0)) throw Error(ErrorCode::InvalidArgument, "voltage class must be > 0");
  return p_kw / (std::sqrt(3.0) * kv);
}

namespace {

// Node indices: sources first, then segments.
struct Graph {
  std::map<std::string, int> index;
  int n_src = 0;
  int n = 0;
  std::vector<std::vector<std::pair<int, std::size_t>>> adj;  // (node, switch) over closed switches

  explicit Graph(const LoopTopology& t) {
    for (const auto& s : t.sources) index.emplace(s, n++);
    n_src = n;
    for (const auto& s : t.segments) index.emplace(s.id, n++);
    adj.resize(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < t.switches.size(); ++k) {
      const auto& sw = t.switches[k];
      if (!sw.closed) continue;
      const int a = node(sw.a);
      const int b = node(sw.b);
      adj[static_cast<std::size_t>(a)].emplace_back(b, k);
      adj[static_cast<std::size_t>(b)].emplace_back(a, k);
    }
  }

  int node(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::UnknownLocation, "no MV node '" + id + "'");
    return it->second;
  }

  // BFS from every source; parent = -1 for roots and unreached nodes.
  void forest(std::vector<bool>& reached, std::vector<int>& parent, std::vector<int>& order) const {
    reached.assign(static_cast<std::size_t>(n), false);
    parent.assign(static_cast<std::size_t>(n), -1);
    order.clear();
    for (int s = 0; s < n_src; ++s) {
      if (reached[static_cast<std::size_t>(s)]) continue;
      reached[static_cast<std::size_t>(s)] = true;
      std::vector<int> queue{s};
      for (std::size_t q = 0; q < queue.size(); ++q) {
        const int u = queue[q];
        order.push_back(u);
        for (const auto& [v, sw] : adj[static_cast<std::size_t>(u)]) {
          if (reached[static_cast<std::size_t>(v)]) continue;
          reached[static_cast<std::size_t>(v)] = true;
          parent[static_cast<std::size_t>(v)] = u;
          queue.push_back(v);
        }
      }
    }
  }
};

}  // namespace

void validate(const LoopTopology& topo) {
  std::set<std::string> ids;
  for (const auto& s : topo.sources) {
    if (!ids.insert(s).second) throw Error(ErrorCode::ValidationError, "duplicate MV id '" + s + "'");
  }
  for (const auto& s : topo.segments) {
    if (!ids.insert(s.id).second) throw Error(ErrorCode::ValidationError, "duplicate MV id '" + s.id + "'");
    if (!(s.amp_cap_a > 0.0) || !(s.kv > 0.0) || s.load_kw < 0.0) {
      throw Error(ErrorCode::ValidationError, "segment '" + s.id + "' needs amp_cap > 0, kv > 0, load >= 0");
    }
  }
  for (const auto& sw : topo.switches) {
    if (!ids.count(sw.a) || !ids.count(sw.b)) {
      throw Error(ErrorCode::ValidationError, "switch '" + sw.id + "' references an unknown node");
    }
  }
  if (topo.flisr_delay_s < 1.0 || topo.flisr_delay_s > 3.0) {
    throw Error(ErrorCode::ValidationError, "flisr_delay must lie in [1, 3] s");
  }
  if (!is_radial(topo)) throw Error(ErrorCode::ValidationError, "closed switches form a ring");
}

LoopTopology default_loop(const std::string& row_id) {
  LoopTopology t;
  t.sources = {"SUB1", "SUB2"};
  t.segments = {{"F1", 400.0, 25.0, 4000.0, {}},
                {"F2", 400.0, 25.0, 3000.0, {row_id}},
                {"F3", 400.0, 25.0, 3000.0, {}},
                {"F4", 400.0, 25.0, 4000.0, {}}};
  t.switches = {{"CB1", "SUB1", "F1", false, true},
                {"SW12", "F1", "F2", false, true},
                {"TIE23", "F2", "F3", true, false},
                {"SW34", "F3", "F4", false, true},
                {"CB2", "SUB2", "F4", false, true}};
  return t;
}

bool is_radial(const LoopTopology& topo) {
  Graph g(topo);
  std::vector<int> root(static_cast<std::size_t>(g.n));
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[static_cast<std::size_t>(x)] != x) x = root[static_cast<std::size_t>(x)];
    return x;
  };
  // sources share the grid behind them, so a path between two sources is a ring too
  for (int s = 1; s < g.n_src; ++s) root[static_cast<std::size_t>(s)] = 0;
  for (const auto& sw : topo.switches) {
    if (!sw.closed) continue;
    const int a = find(g.node(sw.a));
    const int b = find(g.node(sw.b));
    if (a == b) return false;
    root[static_cast<std::size_t>(a)] = b;
  }
  return true;
}

std::vector<std::string> energized_segments(const LoopTopology& topo) {
  Graph g(topo);
  std::vector<bool> reached;
  std::vector<int> parent;
  std::vector<int> order;
  g.forest(reached, parent, order);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < topo.segments.size(); ++i) {
    if (reached[static_cast<std::size_t>(g.n_src) + i]) out.push_back(topo.segments[i].id);
  }
  return out;
}

namespace {

std::vector<double> flows_kw(const LoopTopology& topo, const Graph& g, std::vector<int>& parent) {
  std::vector<bool> reached;
  std::vector<int> order;
  g.forest(reached, parent, order);
  std::vector<double> flow(static_cast<std::size_t>(g.n), 0.0);
  for (std::size_t i = 0; i < topo.segments.size(); ++i) {
    const auto node = static_cast<std::size_t>(g.n_src) + i;
    if (reached[node]) flow[node] = topo.segments[i].load_kw;
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int p = parent[static_cast<std::size_t>(*it)];
    if (p >= g.n_src) flow[static_cast<std::size_t>(p)] += flow[static_cast<std::size_t>(*it)];
  }
  return flow;
}

}  // namespace

std::vector<std::pair<std::string, double>> segment_currents(const LoopTopology& topo) {
  Graph g(topo);
  std::vector<int> parent;
  const auto flow = flows_kw(topo, g, parent);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < topo.segments.size(); ++i) {
    out.emplace_back(topo.segments[i].id,
                     segment_current(flow[static_cast<std::size_t>(g.n_src) + i], topo.segments[i].kv));
  }
  return out;
}

RestorationPlan flisr_reconfigure(const std::string& fault_segment, const LoopTopology& topo, double t_fault_s) {
  RestorationPlan plan;
  plan.faulted_segment = fault_segment;
  plan.t_fault_s = t_fault_s;
  plan.after = topo;
  LoopTopology& t = plan.after;

  auto seg_it = std::find_if(t.segments.begin(), t.segments.end(),
                             [&](const MvSegment& s) { return s.id == fault_segment; });
  if (seg_it == t.segments.end()) throw Error(ErrorCode::UnknownLocation, "no MV segment '" + fault_segment + "'");
  const auto before = energized_segments(topo);
  const std::set<std::string> was_live(before.begin(), before.end());

  for (auto& sw : t.switches) {
    if (sw.closed && (sw.a == fault_segment || sw.b == fault_segment)) {
      sw.closed = false;
      plan.actions.push_back({t_fault_s, sw.id, false});
    }
  }

  auto live_set = [&] {
    const auto e = energized_segments(t);
    return std::set<std::string>(e.begin(), e.end());
  };
  std::set<std::string> live = live_set();
  for (const auto& s : t.segments) {
    if (was_live.count(s.id) && !live.count(s.id)) {
      plan.interrupted_rows.insert(plan.interrupted_rows.end(), s.rows.begin(), s.rows.end());
    }
  }

  const double t_close = t_fault_s + t.flisr_delay_s;
  std::set<std::string> restored_segments;
  bool any_closed = false;
  for (const auto& s : t.segments) {
    if (s.id == fault_segment || live.count(s.id)) continue;
    // island of dead healthy segments reachable from s over closed switches
    std::set<std::string> island{s.id};
    std::vector<std::string> stack{s.id};
    while (!stack.empty()) {
      const std::string u = stack.back();
      stack.pop_back();
      for (const auto& sw : t.switches) {
        if (!sw.closed) continue;
        const std::string* v = sw.a == u ? &sw.b : (sw.b == u ? &sw.a : nullptr);
        if (v && *v != fault_segment && island.insert(*v).second) stack.push_back(*v);
      }
    }
    const bool source_in = std::any_of(t.sources.begin(), t.sources.end(),
                                       [&](const std::string& src) { return island.count(src) > 0; });
    if (source_in) continue;

    std::vector<MvSwitch*> ties;
    for (auto& sw : t.switches) {
      if (sw.closed || !sw.normally_open) continue;
      const bool a_in = island.count(sw.a) > 0;
      const bool b_in = island.count(sw.b) > 0;
      if (a_in == b_in) continue;
      const std::string& other = a_in ? sw.b : sw.a;
      const bool other_live = live.count(other) > 0 ||
                              std::find(t.sources.begin(), t.sources.end(), other) != t.sources.end();
      if (other != fault_segment && other_live) ties.push_back(&sw);
    }
    std::sort(ties.begin(), ties.end(), [](const MvSwitch* x, const MvSwitch* y) { return x->id < y->id; });
    if (ties.empty()) continue;
    ties.front()->closed = true;
    plan.actions.push_back({t_close, ties.front()->id, true});
    any_closed = true;
    restored_segments.insert(island.begin(), island.end());
    live = live_set();
  }

  for (const auto& s : t.segments) {
    const bool restored = restored_segments.count(s.id) > 0;
    const bool dead = s.id == fault_segment || !live.count(s.id);
    for (const auto& r : s.rows) {
      if (dead) {
        plan.unrestorable_rows.push_back(r);
      } else if (restored) {
        plan.restored_rows.push_back(r);
      }
    }
  }
  plan.radial = is_radial(t);
  plan.t_restore_s = any_closed ? t_close : units::kInf;
  plan.t_confirm_s = any_closed ? t_close + kRestoreConfirmS : units::kInf;

  // surgical trims: shed only restored load downstream of an overloaded segment
  Graph g(t);
  std::vector<int> parent;
  for (int pass = 0; pass < static_cast<int>(t.segments.size()); ++pass) {
    const auto flow = flows_kw(t, g, parent);
    bool trimmed = false;
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
      const auto& seg = t.segments[i];
      const double cap_kw = seg.amp_cap_a * std::sqrt(3.0) * seg.kv;
      const double excess = flow[static_cast<std::size_t>(g.n_src) + i] - cap_kw;
      if (excess <= 1e-9) continue;
      const int node = g.n_src + static_cast<int>(i);
      std::vector<std::size_t> block;
      double block_kw = 0.0;
      for (std::size_t j = 0; j < t.segments.size(); ++j) {
        if (!restored_segments.count(t.segments[j].id)) continue;
        for (int v = g.n_src + static_cast<int>(j); v >= 0; v = parent[static_cast<std::size_t>(v)]) {
          if (v == node) {
            block.push_back(j);
            block_kw += t.segments[j].load_kw;
            break;
          }
        }
      }
      if (block_kw <= 0.0) {
        throw Error(ErrorCode::Infeasible, "segment '" + seg.id + "' overloads with no restored load to trim");
      }
      const double frac = std::min(1.0, excess / block_kw);
      for (std::size_t j : block) {
        auto& bs = t.segments[j];
        const double cut = bs.load_kw * frac;
        bs.load_kw -= cut;
        const double per_row = bs.rows.empty() ? 0.0 : cut / static_cast<double>(bs.rows.size());
        for (const auto& r : bs.rows) plan.trims.push_back({r, per_row});
      }
      trimmed = true;
      break;
    }
    if (!trimmed) break;
  }
  return plan;
}

std::vector<BridgeVerdict> bridge_check(const std::vector<BridgeRow>& rows, double flisr_delay_s) {
  std::vector<BridgeVerdict> out;
  for (const auto& r : rows) {
    BridgeVerdict v{};
    v.id = r.id;
    v.e_up_kwh = reserves(r.bank, r.shelf).e_up_kwh;
    v.e_need_kwh = units::kws_to_kwh(r.p_row_kw * std::max(0.0, flisr_delay_s));
    const double gate = r.bank.n_shelves * r.shelf.p_pk_kw;
    if (flisr_delay_s <= 0.0) {
      v.r_up_bridge_kw = gate;
      v.energy_ok = v.power_ok = true;
    } else {
      v.r_up_bridge_kw = std::min(gate, units::kwh_to_kws(v.e_up_kwh) / flisr_delay_s);
      v.energy_ok = v.e_up_kwh >= v.e_need_kwh;
      v.power_ok = v.r_up_bridge_kw >= r.p_row_kw;
    }
    v.pass = v.energy_ok && v.power_ok;
    out.push_back(v);
  }
  return out;
}

void validate(const PodConfig& c) {
  std::string bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad += bad.empty() ? msg : std::string("; ") + msg;
  };
  need(c.u > 0.0 && c.u <= 1.0, "u must lie in (0, 1]");
  need(c.r >= 0.0, "r must be >= 0");
  need(c.l >= 0.0 && c.l < 1.0, "l must lie in [0, 1)");
  need(c.p_assist_max_kw >= 0.0, "p_assist_max must be >= 0");
  need(c.n_rows >= 1 && c.p_row_kw > 0.0, "need n_rows >= 1 and p_row > 0");
  need(c.p_mv_kw >= 0.0, "p_mv must be >= 0");
  need(c.recharge_ramp_kw_per_s > 0.0 && c.feeder_ramp_kw_per_s >= 0.0, "ramp limits must be positive");
  if (!bad.empty()) throw Error(ErrorCode::ValidationError, "pod: " + bad);
}

PodAllocation pod_allocate(const std::vector<RowSummary>& rows, const PodConfig& cfg, long tick) {
  validate(cfg);
  PodAllocation out;
  out.usable_kw = cfg.p_mv_kw * (1.0 - cfg.l);
  out.rows.resize(rows.size());
  double fresh_kw = 0.0;
  double stale_kw = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& a = out.rows[i];
    a.id = rows[i].id;
    a.stale = rows[i].telemetry_age_ms > cfg.stale_ms;
    a.sst_setpoint_kw = a.stale ? rows[i].last_safe_setpoint_kw : rows[i].p_demand_kw;
    (a.stale ? stale_kw : fresh_kw) += a.sst_setpoint_kw;
  }
  if (fresh_kw + stale_kw > out.usable_kw) {
    out.trimmed = true;
    out.trim_scale = fresh_kw > 0.0 ? std::max(0.0, (out.usable_kw - stale_kw) / fresh_kw) : 0.0;
    for (auto& a : out.rows) {
      if (!a.stale) a.sst_setpoint_kw *= out.trim_scale;
    }
  }
  double spare = out.usable_kw;
  for (const auto& a : out.rows) spare -= a.sst_setpoint_kw;
  spare = std::max(0.0, spare);

  int n_need = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) n_need += (!out.rows[i].stale && rows[i].assist_need_kw > 0.0);
  if (n_need > 0) {
    const double share = spare / n_need;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& a = out.rows[i];
      if (a.stale || rows[i].assist_need_kw <= 0.0) continue;
      a.assist_kw = std::min({rows[i].assist_need_kw, cfg.p_assist_max_kw, share});
      spare -= a.assist_kw;
    }
  }

  int slots = static_cast<int>(std::floor(cfg.feeder_ramp_kw_per_s / cfg.recharge_ramp_kw_per_s + 1e-9));
  const auto n = static_cast<long>(rows.size());
  for (long k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(((tick + k) % n + n) % n);
    auto& a = out.rows[i];
    if (a.stale || rows[i].p_chg_request_kw <= 0.0) continue;
    if (slots > 0 && spare > 0.0) {
      a.recharge_window = true;
      a.recharge_kw = std::min(rows[i].p_chg_request_kw, spare);
      spare -= a.recharge_kw;
      --slots;
    } else {
      a.deferred = true;
    }
  }
  for (const auto& a : out.rows) out.total_kw += a.sst_setpoint_kw + a.assist_kw + a.recharge_kw;
  return out;
}

Oversubscription oversubscription_check(const PodConfig& cfg) {
  validate(cfg);
  const double np = cfg.n_rows * cfg.p_row_kw;
  Oversubscription o{};
  o.required_kw = np * (cfg.u + cfg.r) + cfg.l * np * cfg.u;
  o.margin_kw = cfg.p_mv_kw - o.required_kw;
  o.feasible = o.margin_kw >= -1e-9;
  o.ratio = cfg.p_mv_kw / np;
  o.safe_ratio = o.required_kw / np;
  return o;
}

}  // namespace rowsim
