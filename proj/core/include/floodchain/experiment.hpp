#pragma once

// Twin-experiment orchestration: truth run, synthetic observations, the
// OL / IDA / IGDA reanalyses under observed or hydrologic forcing, metrics and
// the on-disk results bundle.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "floodchain/assimilation.hpp"
#include "floodchain/config.hpp"
#include "floodchain/metrics.hpp"
#include "floodchain/observing.hpp"
#include "floodchain/scenario.hpp"

namespace floodchain::experiment {

// Everything the cells of the matrix share.
struct SharedRun {
  scenario::Scenario scenario;
  scenario::Forcings forcings;
  hydraulics::HydraulicState initial;
  std::vector<double> gauge_times;
  std::vector<double> record_times;  // gauge times and WSR times
  scenario::TruthRun truth;
  observing::ObservationSet observations;
  double truth_inflow_volume = 0.0;  // observed hydrograph over the event
};

SharedRun prepare(const config::ExperimentConfig& config);

struct StationSeries {
  std::string station;
  std::vector<double> times;
  std::vector<double> simulated;
  std::vector<double> observed;
  std::vector<double> truth;
  std::vector<std::uint8_t> observed_dry;
};

struct CellResult {
  std::string label;  // e.g. "IDA-hydrologic"
  config::Experiment experiment = config::Experiment::OL;
  config::ForcingSource forcing = config::ForcingSource::observed;
  metrics::MetricsReport report;
  std::vector<StationSeries> stations;
  std::vector<metrics::ContingencyMap> maps;  // per WSR date
  assimilation::ReanalysisResult reanalysis;
  double inflow_volume = 0.0;  // reconstructed inflow over the event (ensemble mean of analysis runs)
  std::string knots;           // anamorphosis knot dump (IGDA)
};

CellResult run_cell(const config::ExperimentConfig& config, const SharedRun& shared, config::Experiment experiment,
                    config::ForcingSource forcing);

// RMSE over gauge times with a wet observation.
double station_rmse(const StationSeries& series);

struct RunManifest {
  std::uint64_t config_hash = 0;
  std::uint64_t scenario_hash = 0;
  std::uint64_t forcing_seed = 0;
  std::uint64_t observation_seed = 0;
  std::uint64_t da_seed = 0;
  std::string version;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

// Writes the shared artifacts (grid, network, forcings, truth, observations).
std::vector<std::string> write_shared(const std::filesystem::path& dir, const config::ExperimentConfig& config,
                                      const SharedRun& shared);
// Writes one cell below dir/<label>/.
std::vector<std::string> write_cell(const std::filesystem::path& dir, const SharedRun& shared,
                                    const CellResult& cell, bool with_delta_h);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

// Single experiment from the config; writes the bundle to `out`.
RunManifest run_experiment(const config::ExperimentConfig& config, const std::filesystem::path& out);
// The 6-cell matrix {OL, IDA, IGDA} x {observed, hydrologic}; failed cells
// are reported and skipped. Returns the manifest and the summary table.
RunManifest run_matrix(const config::ExperimentConfig& config, const std::filesystem::path& out,
                       metrics::SummaryTable* table = nullptr);

std::string cell_label(config::Experiment experiment, config::ForcingSource forcing);

}  // namespace floodchain::experiment
