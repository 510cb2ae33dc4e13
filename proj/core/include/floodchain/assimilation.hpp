#pragma once

// Cycled dual state-parameter EnKF around the floodplain model.
//
// The control vector augments zoned friction and the inflow multiplier mu
// (parameters) with per-subdomain depth corrections delta_h (state). Each
// assimilation window [t, t + W] is processed as
//
//   1. forecast: every member applies its delta_h at the window start and
//      runs the hydraulic model with inflow scaled by mu and its friction;
//   2. analysis: WSE innovations, and WSR innovations (optionally through the
//      Gaussian anamorphosis), update the control ensemble;
//   3. reanalysis: members re-run the window with the analysed controls, which
//      yields the analysis trajectory and the next window's initial states.
//
// Friction and mu carry over to the next window; delta_h is redrawn around
// zero every window. Unless configured otherwise, delta_h stays at zero in
// windows without WSR observations, and the delta_h of a subdomain only sees
// the WSR of that subdomain.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "floodchain/anamorphosis.hpp"
#include "floodchain/hydraulics.hpp"
#include "floodchain/observing.hpp"

namespace floodchain::assimilation {

struct ControlVector {
  std::vector<double> friction;  // Strickler per friction zone, ModelSetup::friction_zones order
  double mu = 1.0;
  std::vector<double> delta_h;   // per subdomain, ModelSetup::subdomains order

  bool operator==(const ControlVector&) const = default;
};

struct ControlBounds {
  double k_min = 5.0;
  double k_max = 100.0;
  double mu_min = 0.2;
  double mu_max = 3.0;
  double dh_max = 1.0;

  void validate() const;
};

struct ControlSpreads {
  std::vector<double> friction;  // per zone std, or a single value for all zones
  double mu = 0.0;               // std of log(mu)
  double delta_h = 0.0;          // std [m]

  double friction_for(std::size_t zone) const;
};

// Friction and delta_h from Gaussians truncated to the bounds, mu lognormal
// with median prior.mu truncated to [mu_min, mu_max].
std::vector<ControlVector> perturb_controls(const ControlVector& prior, const ControlSpreads& spreads,
                                            const ControlBounds& bounds, std::size_t members, std::uint64_t seed);

// Clamps every component into its bounds; returns the number of clamped values.
std::size_t clip_controls(ControlVector& control, const ControlBounds& bounds);

// Everything members share read-only during propagation.
struct ModelSetup {
  hydraulics::StructuredGrid grid;
  std::vector<int> friction_zones;
  hydraulics::BoundaryConditions bc;  // inflow holds the unscaled forcing
  hydraulics::SolverOptions solver;
  std::vector<observing::GaugeStation> stations;
  std::vector<observing::FloodplainSubdomain> subdomains;
  double wet_threshold = 1e-4;
  ControlBounds bounds;

  hydraulics::FrictionField friction_field(const ControlVector& control) const;
};

struct EnsembleMember {
  ControlVector control;
  hydraulics::HydraulicState state;
  std::size_t id = 0;
  std::uint64_t seed = 0;
};

struct MemberForecast {
  hydraulics::HydraulicState end_state;
  std::vector<hydraulics::HydraulicState> snapshots;        // at record_times
  std::vector<std::vector<observing::WseReading>> wse;      // [time][station] at wse_times
  std::vector<std::vector<double>> wsr;                     // [time][subdomain] at wsr_times
  double inflow_volume = 0.0;                               // through the inlet over the window
};

// Runs one member over [member.state.t, t_end]. Every time in wse_times,
// wsr_times and record_times must lie inside the window.
MemberForecast propagate_member(const ModelSetup& setup, const EnsembleMember& member, double t_end,
                                std::span<const double> wse_times, std::span<const double> wsr_times,
                                std::span<const double> record_times);

enum class ObservationSelection { none, wse, wse_wsr };

struct CycleConfig {
  double window = 10800.0;
  std::size_t members = 20;
  ControlSpreads spreads;
  double inflation = 1.0;            // multiplicative, on control anomalies before analysis
  ObservationSelection selection = ObservationSelection::wse;
  bool correct_state = false;        // delta_h in the control vector
  bool delta_h_without_wsr = false;  // false: delta_h stays 0 in windows without WSR observations
  bool localize_delta_h = true;      // delta_h of a subdomain is updated by its own WSR only
  bool anamorphosis = true;
  bool anamorphosis_per_cycle = true;  // false: maps fitted at the first WSR window are reused
  bool transformed_unit_variance = true;  // WSR error variance 1 in score space, else raw sigma
  double saturation_fraction = 0.5;  // skip WSR obs when more members than this sit at 0 or 1
  bool respread = true;              // redraw friction/mu around the analysis mean each window
  bool rerun = true;                 // re-run windows with analysed controls
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
};

struct CycleDiagnostics {
  std::size_t window = 0;
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t wse_used = 0;
  std::size_t wsr_used = 0;
  std::size_t wsr_skipped = 0;
  double innovation_norm = 0.0;     // |mean innovation|_2 over the used observations
  std::size_t clipped = 0;
  std::size_t respawned = 0;
  std::vector<double> prior_mean;   // control layout: friction..., mu, delta_h...
  std::vector<double> prior_std;
  std::vector<double> posterior_mean;
  std::vector<double> posterior_std;
  double inflow_volume = 0.0;       // ensemble-mean inflow volume of the analysis run

  bool operator==(const CycleDiagnostics&) const = default;
};

struct CycleResult {
  std::vector<EnsembleMember> members;  // analysed controls, end-of-window states
  std::vector<hydraulics::HydraulicState> mean_states;  // at record_times
  std::vector<std::vector<double>> wet_fractions;      // share of members wet per cell, at record_times
  CycleDiagnostics diagnostics;
};

// State shared across cycles of one reanalysis.
struct CycleContext {
  std::map<std::size_t, anamorphosis::AnamorphosisMap> fixed_maps;  // per subdomain, fit-once mode
  std::ostream* knot_dump = nullptr;  // "window_time_subdomain,knot,value,score" rows when set
};

// One forecast/analysis/reanalysis cycle over [members[0].state.t, t_end].
// `obs` must only contain records inside the window.
CycleResult run_cycle(const ModelSetup& setup, std::span<const EnsembleMember> members,
                      const observing::ObservationSet& obs, double t_end, std::span<const double> record_times,
                      const CycleConfig& config, std::size_t window_index,
                      CycleContext* context = nullptr);

struct ReanalysisResult {
  std::vector<double> times;                             // record times
  std::vector<hydraulics::HydraulicState> mean_states;   // ensemble-mean state at `times`
  std::vector<std::vector<double>> wet_fractions;        // share of members at or above the wet threshold
  std::vector<CycleDiagnostics> cycles;
  std::vector<EnsembleMember> final_members;
};

// Sequential cycles from the initial state to t_end. Members start from
// `initial_state` with controls drawn around `prior`.
ReanalysisResult run_reanalysis(const ModelSetup& setup, const hydraulics::HydraulicState& initial_state,
                                const ControlVector& prior, const observing::ObservationSet& obs, double t_end,
                                std::span<const double> record_times, const CycleConfig& config,
                                std::ostream* knot_dump = nullptr);

// Control layout helpers.
std::vector<double> flatten(const ControlVector& control, bool with_delta_h);
std::vector<std::string> control_labels(const ModelSetup& setup, bool with_delta_h);

// "window,t0,t1,wse_used,wsr_used,wsr_skipped,innovation_norm,clipped,respawned,inflow_volume,
//  <label>_prior_mean,..."
void write_diagnostics(std::ostream& out, const ModelSetup& setup, std::span<const CycleDiagnostics> cycles,
                       bool with_delta_h);
// "window,t0,t1,<label>..." with posterior means.
void write_control_history(std::ostream& out, const ModelSetup& setup, std::span<const CycleDiagnostics> cycles,
                           bool with_delta_h);

// Ensemble mean, accumulated incrementally so identical members average exactly.
hydraulics::HydraulicState ensemble_mean(std::span<const hydraulics::HydraulicState> states);
// Per-cell share of states with depth >= `threshold`.
std::vector<double> wet_fraction(std::span<const hydraulics::HydraulicState> states, double threshold);

}  // namespace floodchain::assimilation
