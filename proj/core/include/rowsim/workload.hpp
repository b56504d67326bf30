#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rowsim {

enum class Phase { Compute, Comms, Idle };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

/// Burst-process parameters for one row.
struct WorkloadEnvelope {
  double p_avg_kw = 1000.0;
  double alpha_max = 0.25;     // burst overage, fraction of p_avg
  double t_surge_s = 60.0;
  double dt_edge_s = 0.2;      // edge rise time
  double par = 1.25;           // peak-to-average ratio
  double rho_corr = 0.4;       // rack onset correlation, 0..1
  double idle_floor = 0.3;     // fraction of p_avg
  int n_racks = 100;
  double pdu_slew_kw_per_s = 1000.0;
  double pdu_cap_kw = 20.0;
  /// When set, the design-envelope ranges for alpha, surge, edge, par and rho are enforced.
  bool enforce_band = true;
};

/// Throws Error{EnvelopeOutOfRange} naming every violated bound.
void validate(const WorkloadEnvelope& env);

/// Piecewise-linear signal with optional jumps. Each knot stores the value
/// just before and just after its time; between knots the signal is linear.
class PiecewiseLinear {
 public:
  struct Knot {
    double t;
    double before;
    double after;
  };

  PiecewiseLinear() = default;
  explicit PiecewiseLinear(double constant) : base_(constant) {}

  /// Adds a ramp of height dv that starts at t0 and lasts duration (0 = step).
  void add_ramp(double t0, double duration, double dv);

  double value(double t) const;

  /// Monotone-time evaluator; amortised O(1) when t never decreases.
  class Cursor {
   public:
    explicit Cursor(const PiecewiseLinear& pwl) : pwl_(&pwl) {}
    double value(double t);

   private:
    const PiecewiseLinear* pwl_;
    std::size_t idx_ = 0;
  };

  const std::vector<Knot>& knots() const;
  double base() const { return base_; }

 private:
  struct Ramp {
    double t0;
    double t1;
    double dv;
  };
  void rebuild() const;

  double base_ = 0.0;
  std::vector<Ramp> ramps_;
  mutable std::vector<Knot> knots_;
  mutable bool dirty_ = false;
};

struct PhaseSpan {
  double t0_s;
  double t1_s;
  Phase phase;
};

/// Continuous-time row demand: the aggregate is exact at any t.
struct LoadProfile {
  PiecewiseLinear aggregate_kw;
  std::vector<PiecewiseLinear> racks_kw;  // empty unless requested
  std::vector<PhaseSpan> phases;          // Compute outside listed spans
  std::vector<std::vector<double>> burst_onsets_s;  // per burst, per rack
  std::vector<std::pair<double, double>> burst_windows_s;

  Phase phase_at(double t) const;
};

/// Sampled row demand.
struct LoadTrace {
  double dt_s = 1e-3;
  std::vector<double> samples_kw;
  std::vector<Phase> phases;
  std::vector<std::vector<double>> racks_kw;  // [rack][sample], optional
  std::vector<std::vector<double>> burst_onsets_s;
  std::uint64_t seed = 0;

  double duration_s() const { return dt_s * static_cast<double>(samples_kw.size()); }
};

struct SynthOptions {
  double dt_s = 1e-3;
  bool keep_racks = false;
};

/// One synchronized step burst of height alpha_max * p_avg lasting t_surge.
LoadTrace synth_step_burst(const WorkloadEnvelope& env, double t_total_s, double burst_start_s,
                           std::uint64_t seed, const SynthOptions& opts = {});

/// n_bursts bursts of width period*duty spaced by period, starting at t = 0.
LoadTrace synth_burst_train(const WorkloadEnvelope& env, double period_s, double duty, int n_bursts,
                            std::uint64_t seed, const SynthOptions& opts = {});

/// Energy behind one surge, kWh.
double surge_energy_kwh(const WorkloadEnvelope& env);

/// Appends one jittered burst (all racks) to a profile. Used by the scenario
/// loader to compose arbitrary programs; rng state is advanced deterministically.
class BurstBuilder {
 public:
  BurstBuilder(const WorkloadEnvelope& env, std::uint64_t seed, bool keep_racks);

  void add_burst(LoadProfile& profile, double start_s, double width_s, double alpha);
  /// Instantaneous row-level step (all racks at once), for edge tests.
  void add_step(LoadProfile& profile, double t_s, double dp_kw);
  void add_valley(LoadProfile& profile, double start_s, double width_s, double depth_kw, Phase phase);

  LoadProfile make_base() const;

 private:
  double rack_edge_s(double rack_step_kw) const;

  WorkloadEnvelope env_;
  bool keep_racks_;
  std::mt19937_64 rng_;
  double next_uniform();
};

LoadTrace sample(const LoadProfile& profile, double t_total_s, double dt_s, std::uint64_t seed);

/// CSV with header t_s,p_kw,phase.
std::string to_csv(const LoadTrace& trace);

/// Mean of the pairwise Pearson correlation of rack onset offsets across bursts.
double mean_pairwise_onset_correlation(const std::vector<std::vector<double>>& onsets_per_burst);

}  // namespace rowsim
