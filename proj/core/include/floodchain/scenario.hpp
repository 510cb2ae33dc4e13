#pragma once

// Synthetic twin catchment: a sloped rectangular channel between levees with
// floodplain benches rising away from the banks and optional closed
// depressions along the outer edges, fed by a small routed river network
// upstream.

#include <cstdint>
#include <string>
#include <vector>

#include "floodchain/assimilation.hpp"
#include "floodchain/hydraulics.hpp"
#include "floodchain/observing.hpp"
#include "floodchain/routing.hpp"

namespace floodchain::scenario {

struct StationSpec {
  std::string name;
  int i = 0;
  int j = -1;  // -1: lower channel row
};

struct ScenarioConfig {
  int nx = 50;
  int ny = 14;
  double dx = 100.0;
  double dy = 100.0;
  int channel_rows = 2;          // centred in y
  double bed_upstream = 10.0;    // channel bed at the west edge [m]
  double slope = 2e-4;
  double bank_height = 3.0;      // floodplain bench above the channel bed [m]
  double levee_height = 0.3;     // extra height of the first row beside the channel
  double floodplain_rise = 0.6;  // per row away from the levee [m]
  int pocket_rows = 2;           // outermost floodplain rows forming a closed depression
  double pocket_depth = 0.6;     // pocket floor below the last bench row [m]
  int subdomains = 5;            // floodplain split into equal x bands
  double k_channel = 30.0;       // true Strickler coefficients
  double k_floodplain = 18.0;
  std::vector<StationSpec> stations;  // empty: upstream/middle/downstream defaults
  double wse_sigma = 0.05;
  double wsr_sigma = 0.05;
};

struct Scenario {
  hydraulics::StructuredGrid grid;
  std::vector<int> friction_zones;  // {channel, floodplain}
  std::vector<int> inlet_rows;
  std::vector<int> outlet_rows;
  hydraulics::RatingCurve rating;
  std::vector<observing::GaugeStation> stations;
  std::vector<observing::FloodplainSubdomain> subdomains;
  std::vector<std::uint8_t> floodplain_mask;  // 1 outside the channel
  assimilation::ControlVector truth;
  routing::RiverNetwork network;
  routing::MuskingumParams muskingum;
  std::uint64_t hash = 0;  // FNV-1a over the serialized grid, network and stations
};

// Throws DomainError with a descriptive message on inconsistent settings.
Scenario build_scenario(const ScenarioConfig& config);

struct EventConfig {
  double duration = 86400.0;
  double step = 900.0;         // forcing and routing time step
  double baseflow = 150.0;     // [m^3/s] at the catchment outlet
  double peak = 1000.0;        // observed peak discharge
  double storm_peak = 21600.0; // time of peak lateral inflow in the first sub-catchment
  double hydrologic_noise = 0.0;  // relative std of multiplicative lateral-inflow noise
};

enum class BiasKind { peak, constant };

// peak:     Q (1 - reduction * s(Q)), s = (1 + tanh((Q - threshold) / (width * threshold))) / 2
// constant: Q * factor
struct BiasConfig {
  BiasKind kind = BiasKind::peak;
  double reduction = 0.3;
  double threshold = 500.0;
  double width = 0.25;
  double factor = 1.0;

  double apply(double discharge) const;
};

struct Forcings {
  hydraulics::Hydrograph observed;
  hydraulics::Hydrograph hydrologic;
  routing::LateralInflowSeries lateral;  // the unperturbed storm input
};

Forcings make_forcings(const Scenario& scenario, const EventConfig& event, const BiasConfig& bias,
                       std::uint64_t seed);

// State reached from a dry domain after `duration` seconds of constant inflow
// `discharge` with the true friction; the returned time is reset to `t0`.
hydraulics::HydraulicState spin_up(const Scenario& scenario, double discharge, double duration,
                                   const hydraulics::SolverOptions& solver, double t0 = 0.0);

// Model wiring shared by the truth run and every ensemble member.
assimilation::ModelSetup model_setup(const Scenario& scenario, const hydraulics::Hydrograph& forcing,
                                     const hydraulics::SolverOptions& solver, double wet_threshold,
                                     const assimilation::ControlBounds& bounds);

// Rainfall-like water added to a floodplain subdomain at a window start.
struct Injection {
  double time = 0.0;
  int subdomain = 0;
  double depth = 0.0;
};

struct TruthRun {
  std::vector<double> times;
  std::vector<hydraulics::HydraulicState> snapshots;
  double inflow_volume = 0.0;
};

// Truth trajectory with the true controls, segmented at the same window
// boundaries as the reanalysis so an open loop with the true controls and no
// injections reproduces it bit for bit. Injection times must be window starts.
TruthRun run_truth(const assimilation::ModelSetup& setup, const assimilation::ControlVector& truth,
                   const hydraulics::HydraulicState& initial, double t_end, double window,
                   std::span<const double> record_times, std::span<const Injection> injections);

}  // namespace floodchain::scenario
