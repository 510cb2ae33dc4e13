#pragma once

// Experiment configuration: a versioned YAML document. Every key is optional
// and falls back to the defaults of the structs below; unknown keys are
// rejected with their line number. See configs/default.yaml for the schema.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "floodchain/assimilation.hpp"
#include "floodchain/hydraulics.hpp"
#include "floodchain/scenario.hpp"

namespace floodchain::config {

inline constexpr int kSchemaVersion = 1;

enum class Experiment { OL, IDA, IGDA };
enum class ForcingSource { observed, hydrologic };

struct ObservationConfig {
  double gauge_interval = 1800.0;
  std::vector<double> wsr_times{32400.0, 43200.0, 54000.0};
  double wet_threshold = 0.05;  // wet/dry classification for WSR, extents and dry gauges
  std::uint64_t seed = 7;
};

struct DaConfig {
  std::size_t members = 20;
  int window_intervals = 6;  // window length in gauge intervals
  // Empty: derived from the experiment. Otherwise must agree with it.
  std::string selection;
  std::vector<double> prior_friction;  // empty: the true friction
  double prior_mu = 1.0;
  std::vector<double> spread_friction{3.0, 3.0};
  double spread_mu = 0.25;
  double spread_delta_h = 0.15;
  assimilation::ControlBounds bounds;
  double inflation = 1.0;
  bool anamorphosis = true;
  bool anamorphosis_refit = true;
  bool transformed_unit_variance = true;
  double saturation_fraction = 0.5;
  bool respread = true;
  bool rerun = true;
  bool delta_h_without_wsr = false;
  bool localize_delta_h = true;
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ExperimentConfig {
  int version = kSchemaVersion;
  Experiment experiment = Experiment::IGDA;
  ForcingSource forcing = ForcingSource::hydrologic;
  std::string output = "out";
  scenario::ScenarioConfig scenario;
  scenario::EventConfig event;
  scenario::BiasConfig bias;
  std::uint64_t forcing_seed = 3;
  double spinup = 43200.0;
  std::vector<scenario::Injection> injections;
  ObservationConfig observations;
  hydraulics::SolverOptions solver;
  DaConfig da;
  bool csi_include_channel = false;
  double extent_probability = 0.5;  // a cell is flooded when at least this share of members is wet

  // Where each dotted key was read from, for validation messages.
  std::string source;
  std::map<std::string, int> key_lines;

  double window() const { return observations.gauge_interval * da.window_intervals; }
};

// Throws FormatError (with source and line) on syntax errors, unknown keys
// and type mismatches.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Semantic checks; throws FormatError naming the offending key.
void validate(const ExperimentConfig& config);

// Observation selection implied by the experiment.
assimilation::ObservationSelection selection_for(Experiment experiment);
assimilation::CycleConfig cycle_config(const ExperimentConfig& config, Experiment experiment);

// Fully expanded YAML of the effective configuration; stable key order.
std::string canonical(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

std::string to_string(Experiment experiment);
std::string to_string(ForcingSource forcing);
Experiment parse_experiment(const std::string& text);
ForcingSource parse_forcing(const std::string& text);

}  // namespace floodchain::config
