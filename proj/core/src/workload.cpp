#include "rowsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rowsim/error.hpp"
#include "rowsim/units.hpp"

namespace rowsim {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Compute: return "compute";
    case Phase::Comms: return "comms";
    case Phase::Idle: return "idle";
  }
  return "compute";
}

std::optional<Phase> parse_phase(std::string_view text) {
  if (text == "compute") return Phase::Compute;
  if (text == "comms") return Phase::Comms;
  if (text == "idle") return Phase::Idle;
  return std::nullopt;
}

void validate(const WorkloadEnvelope& env) {
  std::vector<std::string> bad;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };
  need(env.p_avg_kw > 0.0, "p_avg must be > 0");
  need(env.alpha_max >= 0.0, "alpha_max must be >= 0");
  need(env.t_surge_s > 0.0, "t_surge must be > 0");
  need(env.dt_edge_s >= 0.0, "dt_edge must be >= 0");
  need(env.rho_corr >= 0.0 && env.rho_corr <= 1.0, "rho_corr must lie in [0, 1]");
  need(env.idle_floor >= 0.0 && env.idle_floor < 1.0, "idle_floor must lie in [0, 1)");
  need(env.n_racks >= 1, "n_racks must be >= 1");
  need(env.pdu_slew_kw_per_s > 0.0, "pdu_slew must be > 0");
  need(env.par >= 1.0 + env.alpha_max - 1e-12, "par must be >= 1 + alpha_max");
  if (env.n_racks >= 1) {
    need(env.pdu_cap_kw >= env.p_avg_kw * (1.0 + env.alpha_max) / env.n_racks - 1e-9,
         "pdu_cap must be >= p_avg*(1+alpha_max)/n_racks");
  }
  if (env.enforce_band) {
    // Ranges of the design-envelope workload model (bursts 10-25 % over 10-90 s,
    // edges 100-800 ms, PAR 1.1-1.25, rack correlation 0.2-0.6).
    need(env.alpha_max >= 0.10 && env.alpha_max <= 0.25, "alpha_max outside design envelope [0.10, 0.25]");
    need(env.t_surge_s >= 10.0 && env.t_surge_s <= 90.0, "t_surge outside design envelope [10 s, 90 s]");
    need(env.dt_edge_s >= 0.1 && env.dt_edge_s <= 0.8, "dt_edge outside design envelope [0.1 s, 0.8 s]");
    need(env.par >= 1.1 && env.par <= 1.25, "par outside design envelope [1.1, 1.25]");
    need(env.rho_corr >= 0.2 && env.rho_corr <= 0.6, "rho_corr outside design envelope [0.2, 0.6]");
  }
  if (!bad.empty()) {
    std::string msg;
    for (const auto& b : bad) {
      if (!msg.empty()) msg += "; ";
      msg += b;
    }
    throw Error(ErrorCode::EnvelopeOutOfRange, msg);
  }
}

// ---------------------------------------------------------------------------
// PiecewiseLinear

void PiecewiseLinear::add_ramp(double t0, double duration, double dv) {
  if (dv == 0.0) return;
  ramps_.push_back({t0, t0 + std::max(0.0, duration), dv});
  dirty_ = true;
}

void PiecewiseLinear::rebuild() const {
  // Sweep over breakpoints carrying the running value and slope. Zero-length
  // ramps are jumps: they separate a knot's before/after values.
  struct Event {
    double t;
    double slope;
    double jump;
  };
  std::vector<Event> ev;
  ev.reserve(ramps_.size() * 2);
  for (const auto& r : ramps_) {
    if (r.t1 > r.t0) {
      const double s = r.dv / (r.t1 - r.t0);
      ev.push_back({r.t0, s, 0.0});
      ev.push_back({r.t1, -s, 0.0});
    } else {
      ev.push_back({r.t0, 0.0, r.dv});
    }
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  knots_.clear();
  double value = base_;
  double slope = 0.0;
  double t_prev = ev.empty() ? 0.0 : ev.front().t;
  std::size_t i = 0;
  while (i < ev.size()) {
    const double t = ev[i].t;
    value += slope * (t - t_prev);
    const double before = value;
    while (i < ev.size() && ev[i].t == t) {
      value += ev[i].jump;
      slope += ev[i].slope;
      ++i;
    }
    knots_.push_back({t, before, value});
    t_prev = t;
  }
  dirty_ = false;
}

const std::vector<PiecewiseLinear::Knot>& PiecewiseLinear::knots() const {
  if (dirty_) rebuild();
  return knots_;
}

double PiecewiseLinear::value(double t) const {
  const auto& k = knots();
  if (k.empty() || t < k.front().t) return k.empty() ? base_ : k.front().before;
  auto it = std::upper_bound(k.begin(), k.end(), t, [](double x, const Knot& kn) { return x < kn.t; });
  // it points to first knot with time > t; previous knot has time <= t.
  const Knot& lo = *(it - 1);
  if (it == k.end()) return lo.after;
  const Knot& hi = *it;
  double frac = (t - lo.t) / (hi.t - lo.t);
  return lo.after + (hi.before - lo.after) * frac;
}

double PiecewiseLinear::Cursor::value(double t) {
  const auto& k = pwl_->knots();
  if (k.empty()) return pwl_->base();
  if (t < k.front().t) return k.front().before;
  if (idx_ >= k.size() || k[idx_].t > t) idx_ = 0;
  while (idx_ + 1 < k.size() && k[idx_ + 1].t <= t) ++idx_;
  const Knot& lo = k[idx_];
  if (idx_ + 1 == k.size()) return lo.after;
  const Knot& hi = k[idx_ + 1];
  return lo.after + (hi.before - lo.after) * (t - lo.t) / (hi.t - lo.t);
}

Phase LoadProfile::phase_at(double t) const {
  Phase p = Phase::Compute;
  for (const auto& s : phases) {
    if (t >= s.t0_s && t < s.t1_s) p = s.phase;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Burst synthesis

BurstBuilder::BurstBuilder(const WorkloadEnvelope& env, std::uint64_t seed, bool keep_racks)
    : env_(env), keep_racks_(keep_racks), rng_(seed) {}

double BurstBuilder::next_uniform() {
  // 53 random bits -> [0, 1); independent of the standard library's distributions.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double BurstBuilder::rack_edge_s(double rack_step_kw) const {
  return std::max(env_.dt_edge_s, std::abs(rack_step_kw) / env_.pdu_slew_kw_per_s);
}

LoadProfile BurstBuilder::make_base() const {
  LoadProfile p;
  p.aggregate_kw = PiecewiseLinear(env_.p_avg_kw);
  if (keep_racks_) {
    p.racks_kw.assign(static_cast<std::size_t>(env_.n_racks), PiecewiseLinear(env_.p_avg_kw / env_.n_racks));
  }
  return p;
}

void BurstBuilder::add_burst(LoadProfile& profile, double start_s, double width_s, double alpha) {
  const int n = env_.n_racks;
  const double rack_step = alpha * env_.p_avg_kw / n;
  const double edge = rack_edge_s(rack_step);
  // Onset offset = span * (sqrt(rho) * shared + sqrt(1 - rho) * private) with
  // independent U(0,1) draws; the across-rack correlation is then rho.
  const double span = 0.5 * env_.dt_edge_s;
  const double a = std::sqrt(env_.rho_corr);
  const double b = std::sqrt(1.0 - env_.rho_corr);
  const double shared = next_uniform();
  std::vector<double> onsets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double priv = next_uniform();
    onsets[static_cast<std::size_t>(i)] = start_s + span * (a * shared + b * priv);
  }
  double last_end = start_s;
  for (int i = 0; i < n; ++i) {
    const double on = onsets[static_cast<std::size_t>(i)];
    // Fall edge mirrors the rise shifted by the burst width so each rack
    // contributes exactly rack_step * width of energy.
    const double off = on + width_s;
    profile.aggregate_kw.add_ramp(on, edge, rack_step);
    profile.aggregate_kw.add_ramp(off, edge, -rack_step);
    if (keep_racks_) {
      auto& r = profile.racks_kw[static_cast<std::size_t>(i)];
      r.add_ramp(on, edge, rack_step);
      r.add_ramp(off, edge, -rack_step);
    }
    last_end = std::max(last_end, off + edge);
  }
  profile.burst_onsets_s.push_back(std::move(onsets));
  profile.burst_windows_s.emplace_back(start_s, last_end);
}

void BurstBuilder::add_step(LoadProfile& profile, double t_s, double dp_kw) {
  profile.aggregate_kw.add_ramp(t_s, 0.0, dp_kw);
  if (keep_racks_) {
    for (auto& r : profile.racks_kw) r.add_ramp(t_s, 0.0, dp_kw / env_.n_racks);
  }
}

void BurstBuilder::add_valley(LoadProfile& profile, double start_s, double width_s, double depth_kw,
                              Phase phase) {
  const double edge = rack_edge_s(depth_kw / env_.n_racks);
  profile.aggregate_kw.add_ramp(start_s, edge, -depth_kw);
  profile.aggregate_kw.add_ramp(start_s + width_s, edge, depth_kw);
  if (keep_racks_) {
    for (auto& r : profile.racks_kw) {
      r.add_ramp(start_s, edge, -depth_kw / env_.n_racks);
      r.add_ramp(start_s + width_s, edge, depth_kw / env_.n_racks);
    }
  }
  profile.phases.push_back({start_s, start_s + width_s + edge, phase});
}

LoadTrace sample(const LoadProfile& profile, double t_total_s, double dt_s, std::uint64_t seed) {
  LoadTrace trace;
  trace.dt_s = dt_s;
  trace.seed = seed;
  const auto n = static_cast<std::size_t>(std::llround(t_total_s / dt_s));
  trace.samples_kw.resize(n);
  trace.phases.resize(n);
  if (!profile.racks_kw.empty()) {
    // Aggregate is the sum of rack samples so rack-sum consistency is exact.
    trace.racks_kw.assign(profile.racks_kw.size(), std::vector<double>(n));
    for (std::size_t r = 0; r < profile.racks_kw.size(); ++r) {
      PiecewiseLinear::Cursor cur(profile.racks_kw[r]);
      for (std::size_t k = 0; k < n; ++k) trace.racks_kw[r][k] = cur.value(static_cast<double>(k) * dt_s);
    }
    for (std::size_t k = 0; k < n; ++k) {
      double sum = 0.0;
      for (const auto& rack : trace.racks_kw) sum += rack[k];
      trace.samples_kw[k] = sum;
    }
  } else {
    PiecewiseLinear::Cursor cur(profile.aggregate_kw);
    for (std::size_t k = 0; k < n; ++k) trace.samples_kw[k] = cur.value(static_cast<double>(k) * dt_s);
  }
  for (std::size_t k = 0; k < n; ++k) trace.phases[k] = profile.phase_at(static_cast<double>(k) * dt_s);
  trace.burst_onsets_s = profile.burst_onsets_s;
  return trace;
}

LoadTrace synth_step_burst(const WorkloadEnvelope& env, double t_total_s, double burst_start_s,
                           std::uint64_t seed, const SynthOptions& opts) {
  validate(env);
  if (burst_start_s < 0.0 || burst_start_s + env.t_surge_s > t_total_s) {
    throw Error(ErrorCode::BurstExceedsHorizon, "burst_start + t_surge exceeds the horizon");
  }
  BurstBuilder builder(env, seed, opts.keep_racks);
  LoadProfile profile = builder.make_base();
  if (env.alpha_max > 0.0) builder.add_burst(profile, burst_start_s, env.t_surge_s, env.alpha_max);
  return sample(profile, t_total_s, opts.dt_s, seed);
}

LoadTrace synth_burst_train(const WorkloadEnvelope& env, double period_s, double duty, int n_bursts,
                            std::uint64_t seed, const SynthOptions& opts) {
  validate(env);
  if (!(duty > 0.0 && duty <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "duty must lie in (0, 1]");
  }
  if (n_bursts < 1) throw Error(ErrorCode::InvalidArgument, "n_bursts must be >= 1");
  const double width = period_s * duty;
  if (width < env.dt_edge_s) throw Error(ErrorCode::InvalidArgument, "period*duty must be >= dt_edge");
  const double horizon = period_s * n_bursts;
  // A burst's trailing edge lands at most jitter + edge after its nominal end.
  const double rack_step = env.alpha_max * env.p_avg_kw / env.n_racks;
  const double tail = 0.5 * env.dt_edge_s * std::sqrt(2.0) +
                      std::max(env.dt_edge_s, rack_step / env.pdu_slew_kw_per_s);
  if (duty < 1.0 && width + tail > period_s) {
    throw Error(ErrorCode::BurstExceedsHorizon, "burst trailing edge overflows its period");
  }
  BurstBuilder builder(env, seed, opts.keep_racks);
  LoadProfile profile = builder.make_base();
  if (env.alpha_max > 0.0) {
    if (duty >= 1.0) {
      builder.add_burst(profile, 0.0, horizon, env.alpha_max);
    } else {
      for (int k = 0; k < n_bursts; ++k) builder.add_burst(profile, k * period_s, width, env.alpha_max);
    }
  }
  return sample(profile, horizon, opts.dt_s, seed);
}

double surge_energy_kwh(const WorkloadEnvelope& env) {
  return units::kws_to_kwh(env.alpha_max * env.p_avg_kw * env.t_surge_s);
}

std::string to_csv(const LoadTrace& trace) {
  std::ostringstream os;
  os << "t_s,p_kw,phase\n";
  char buf[96];
  for (std::size_t k = 0; k < trace.samples_kw.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,", static_cast<double>(k) * trace.dt_s, trace.samples_kw[k]);
    os << buf << to_string(k < trace.phases.size() ? trace.phases[k] : Phase::Compute) << '\n';
  }
  return os.str();
}

double mean_pairwise_onset_correlation(const std::vector<std::vector<double>>& onsets_per_burst) {
  const std::size_t nb = onsets_per_burst.size();
  if (nb < 3) throw Error(ErrorCode::InvalidArgument, "need at least 3 bursts to estimate correlation");
  const std::size_t nr = onsets_per_burst.front().size();
  // Offsets relative to each burst's earliest possible onset are what the
  // jitter model draws; subtracting the burst minimum would bias them, so the
  // caller passes onsets relative to the nominal burst start.
  std::vector<double> mean(nr, 0.0), sd(nr, 0.0);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t b = 0; b < nb; ++b) mean[r] += onsets_per_burst[b][r];
    mean[r] /= static_cast<double>(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const double d = onsets_per_burst[b][r] - mean[r];
      sd[r] += d * d;
    }
    sd[r] = std::sqrt(sd[r]);
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = i + 1; j < nr; ++j) {
      double cov = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        cov += (onsets_per_burst[b][i] - mean[i]) * (onsets_per_burst[b][j] - mean[j]);
      }
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        total += cov / (sd[i] * sd[j]);
        ++pairs;
      } else {
        total += 1.0;  // identical onsets in every burst
        ++pairs;
      }
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 1.0;
}

}  // namespace rowsim
