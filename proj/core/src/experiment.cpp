#include "floodchain/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

#ifndef FLOODCHAIN_VERSION
#define FLOODCHAIN_VERSION "unknown"
#endif

namespace floodchain::experiment {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::size_t index_of_time(std::span<const double> times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) throw DomainError("experiment: no state recorded at t=" + csv::format(t));
  return static_cast<std::size_t>(it - times.begin());
}

assimilation::ModelSetup setup_for(const config::ExperimentConfig& cfg, const SharedRun& shared,
                                   const hydraulics::Hydrograph& forcing) {
  return scenario::model_setup(shared.scenario, forcing, cfg.solver, cfg.observations.wet_threshold, cfg.da.bounds);
}

// Writes `file` below `dir` through `fn` and records its relative name.
template <class Fn>
void emit(const fs::path& dir, const std::string& file, std::vector<std::string>& files, Fn&& fn) {
  const fs::path path = dir / file;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write output file", path.string(), 0);
  fn(out);
  if (!out) throw FormatError("write failed", path.string(), 0);
  files.push_back(file);
}

void summary_files(const fs::path& dir, const std::string& prefix, const metrics::SummaryTable& table,
                   std::vector<std::string>& files) {
  emit(dir, prefix + "summary.csv", files, [&](std::ostream& o) { metrics::write_summary_csv(o, table); });
  emit(dir, prefix + "summary.txt", files, [&](std::ostream& o) { metrics::write_summary_text(o, table); });
}

}  // namespace

std::string cell_label(config::Experiment experiment, config::ForcingSource forcing) {
  return config::to_string(experiment) + "-" + config::to_string(forcing);
}

SharedRun prepare(const config::ExperimentConfig& cfg) {
  SharedRun shared;
  shared.scenario = scenario::build_scenario(cfg.scenario);
  shared.forcings = scenario::make_forcings(shared.scenario, cfg.event, cfg.bias, cfg.forcing_seed);
  shared.initial = scenario::spin_up(shared.scenario, shared.forcings.observed.values.front(), cfg.spinup, cfg.solver);

  const double duration = cfg.event.duration;
  const double interval = cfg.observations.gauge_interval;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * interval;
    if (t > duration * (1.0 + 1e-12)) break;
    shared.gauge_times.push_back(t);
  }
  shared.record_times = shared.gauge_times;
  shared.record_times.insert(shared.record_times.end(), cfg.observations.wsr_times.begin(),
                             cfg.observations.wsr_times.end());
  std::sort(shared.record_times.begin(), shared.record_times.end());
  shared.record_times.erase(std::unique(shared.record_times.begin(), shared.record_times.end()),
                            shared.record_times.end());

  const auto setup = setup_for(cfg, shared, shared.forcings.observed);
  shared.truth = scenario::run_truth(setup, shared.scenario.truth, shared.initial, duration, cfg.window(),
                                     shared.record_times, cfg.injections);

  observing::SynthesisOptions options;
  options.noise_std_wse = cfg.scenario.wse_sigma;
  options.noise_std_wsr = cfg.scenario.wsr_sigma;
  options.wet_threshold = cfg.observations.wet_threshold;
  options.dry_threshold = cfg.observations.wet_threshold;
  options.seed = cfg.observations.seed;
  shared.observations = observing::synthesize_observations(shared.truth.snapshots, shared.scenario.grid,
                                                           shared.scenario.stations, shared.scenario.subdomains,
                                                           shared.gauge_times, cfg.observations.wsr_times, options);
  shared.truth_inflow_volume = shared.forcings.observed.volume(0.0, duration);
  return shared;
}

double station_rmse(const StationSeries& s) {
  std::vector<double> sim;
  std::vector<double> obs;
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    if (s.observed_dry[k]) continue;
    sim.push_back(s.simulated[k]);
    obs.push_back(s.observed[k]);
  }
  return metrics::rmse(sim, obs);
}

CellResult run_cell(const config::ExperimentConfig& cfg, const SharedRun& shared, config::Experiment experiment,
                    config::ForcingSource forcing) {
  CellResult cell;
  cell.label = cell_label(experiment, forcing);
  cell.experiment = experiment;
  cell.forcing = forcing;

  const auto& sc = shared.scenario;
  const auto& hydrograph =
      forcing == config::ForcingSource::observed ? shared.forcings.observed : shared.forcings.hydrologic;
  const auto setup = setup_for(cfg, shared, hydrograph);

  assimilation::ControlVector prior = sc.truth;
  if (!cfg.da.prior_friction.empty()) prior.friction = cfg.da.prior_friction;
  prior.mu = cfg.da.prior_mu;
  const auto cycle = config::cycle_config(cfg, experiment);

  std::ostringstream knots;
  std::ostream* knot_dump = experiment == config::Experiment::IGDA ? &knots : nullptr;
  cell.reanalysis = assimilation::run_reanalysis(setup, shared.initial, prior, shared.observations,
                                                 cfg.event.duration, shared.record_times, cycle, knot_dump);
  cell.knots = knots.str();
  for (const auto& c : cell.reanalysis.cycles) cell.inflow_volume += c.inflow_volume;

  const auto& times = cell.reanalysis.times;
  const double wet = cfg.observations.wet_threshold;
  for (std::size_t s = 0; s < sc.stations.size(); ++s) {
    StationSeries series;
    series.station = sc.stations[s].name;
    for (const auto& o : shared.observations.wse) {
      if (o.station != s) continue;
      const auto& sim = cell.reanalysis.mean_states[index_of_time(times, o.time)];
      const auto& truth = shared.truth.snapshots[index_of_time(shared.truth.times, o.time)];
      series.times.push_back(o.time);
      series.simulated.push_back(observing::extract_wse(sim, sc.grid, sc.stations[s], wet).value);
      series.truth.push_back(observing::extract_wse(truth, sc.grid, sc.stations[s], wet).value);
      series.observed.push_back(o.value);
      series.observed_dry.push_back(o.dry ? 1 : 0);
    }
    cell.report.stations.push_back(series.station);
    cell.report.rmse.push_back(station_rmse(series));
    cell.stations.push_back(std::move(series));
  }

  const std::span<const std::uint8_t> mask =
      cfg.csi_include_channel ? std::span<const std::uint8_t>{} : std::span<const std::uint8_t>(sc.floodplain_mask);
  for (double t : cfg.observations.wsr_times) {
    const auto& fraction = cell.reanalysis.wet_fractions[index_of_time(times, t)];
    const auto& truth = shared.truth.snapshots[index_of_time(shared.truth.times, t)];
    std::vector<std::uint8_t> sim_wet(fraction.size());
    for (std::size_t c = 0; c < fraction.size(); ++c) sim_wet[c] = fraction[c] >= cfg.extent_probability ? 1 : 0;
    const auto ref_wet = observing::wet_dry_map(truth, sc.grid, wet);
    cell.maps.push_back(metrics::contingency(sim_wet, ref_wet, sc.grid.nx, sc.grid.ny, mask));
    cell.report.dates.push_back(t);
    cell.report.csi.push_back(metrics::csi(cell.maps.back()));
  }
  cell.report.experiment = cell.label;
  return cell;
}

std::vector<std::string> write_shared(const fs::path& dir, const config::ExperimentConfig& cfg,
                                      const SharedRun& shared) {
  std::vector<std::string> files;
  const auto& sc = shared.scenario;
  emit(dir, "config.yaml", files, [&](std::ostream& o) { o << config::canonical(cfg); });
  emit(dir, "grid.csv", files, [&](std::ostream& o) { hydraulics::write_grid(o, sc.grid); });
  emit(dir, "network.csv", files, [&](std::ostream& o) { routing::write_network(o, sc.network, sc.muskingum); });
  emit(dir, "lateral_inflow.csv", files,
       [&](std::ostream& o) { routing::write_lateral_inflow(o, sc.network, shared.forcings.lateral); });
  emit(dir, "forcing_observed.csv", files,
       [&](std::ostream& o) { hydraulics::write_hydrograph(o, shared.forcings.observed); });
  emit(dir, "forcing_hydrologic.csv", files,
       [&](std::ostream& o) { hydraulics::write_hydrograph(o, shared.forcings.hydrologic); });
  emit(dir, "stations.csv", files, [&](std::ostream& o) { observing::write_stations(o, sc.stations); });
  emit(dir, "subdomains.csv", files, [&](std::ostream& o) { observing::write_subdomains(o, sc.subdomains); });
  emit(dir, "observations.csv", files, [&](std::ostream& o) {
    observing::write_observations(o, shared.observations, sc.stations, sc.subdomains);
  });
  emit(dir, "initial_state.csv", files, [&](std::ostream& o) { hydraulics::write_state(o, sc.grid, shared.initial); });
  for (double t : cfg.observations.wsr_times) {
    const auto& truth = shared.truth.snapshots[index_of_time(shared.truth.times, t)];
    const auto wet = observing::wet_dry_map(truth, sc.grid, cfg.observations.wet_threshold);
    emit(dir, "truth_extent_" + csv::format(t) + ".csv", files,
         [&](std::ostream& o) { observing::write_wet_dry_map(o, sc.grid, wet, observing::MapFormat::csv); });
  }
  return files;
}

std::vector<std::string> write_cell(const fs::path& dir, const SharedRun& shared, const CellResult& cell,
                                    bool with_delta_h) {
  std::vector<std::string> files;
  const std::string prefix = cell.label + "/";
  assimilation::ModelSetup setup;  // only the control layout is needed
  setup.friction_zones = shared.scenario.friction_zones;
  setup.subdomains = shared.scenario.subdomains;
  emit(dir, prefix + "station_wse.csv", files, [&](std::ostream& o) {
    csv::write_row(o, {"station", "time", "simulated", "observed", "truth", "observed_dry"});
    for (const auto& s : cell.stations)
      for (std::size_t k = 0; k < s.times.size(); ++k)
        csv::write_row(o, {s.station, csv::format(s.times[k]), csv::format(s.simulated[k]), csv::format(s.observed[k]),
                           csv::format(s.truth[k]), s.observed_dry[k] ? "1" : "0"});
  });
  emit(dir, prefix + "diagnostics.csv", files, [&](std::ostream& o) {
    assimilation::write_diagnostics(o, setup, cell.reanalysis.cycles, with_delta_h);
  });
  emit(dir, prefix + "control_history.csv", files, [&](std::ostream& o) {
    assimilation::write_control_history(o, setup, cell.reanalysis.cycles, with_delta_h);
  });
  for (std::size_t k = 0; k < cell.maps.size(); ++k) {
    const std::string t = csv::format(cell.report.dates[k]);
    emit(dir, prefix + "contingency_" + t + ".txt", files,
         [&](std::ostream& o) { metrics::write_contingency(o, cell.maps[k]); });
  }
  if (!cell.knots.empty())
    emit(dir, prefix + "anamorphosis_knots.csv", files, [&](std::ostream& o) {
      csv::write_row(o, {"map", "knot", "value", "score"});
      o << cell.knots;
    });
  emit(dir, prefix + "inflow_volume.csv", files, [&](std::ostream& o) {
    csv::write_row(o, {"window", "t0", "t1", "inflow_volume"});
    for (const auto& c : cell.reanalysis.cycles)
      csv::write_row(o, {std::to_string(c.window), csv::format(c.t0), csv::format(c.t1), csv::format(c.inflow_volume)});
  });
  const std::vector<metrics::MetricsReport> one{cell.report};
  summary_files(dir, prefix, metrics::summarize(one), files);
  return files;
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["config_hash"] = fmt::format("{:016x}", m.config_hash);
  j["scenario_hash"] = fmt::format("{:016x}", m.scenario_hash);
  j["seeds"] = {{"forcing", m.forcing_seed}, {"observations", m.observation_seed}, {"assimilation", m.da_seed}};
  j["modules"] = {{"river_routing", m.version},   {"floodplain_hydraulics", m.version},
                  {"observing_system", m.version}, {"anamorphosis", m.version},
                  {"ensemble_da", m.version},      {"metrics", m.version},
                  {"experiment_cli", m.version}};
  j["files"] = m.files;
  auto& timings = j["timings_seconds"];
  timings = nlohmann::ordered_json::object();
  for (const auto& [stage, seconds] : m.timings) timings[stage] = seconds;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write manifest", path.string(), 0);
  out << j.dump(2) << '\n';
}

namespace {

RunManifest manifest_for(const config::ExperimentConfig& cfg, const SharedRun& shared) {
  RunManifest m;
  m.config_hash = config::config_hash(cfg);
  m.scenario_hash = shared.scenario.hash;
  m.forcing_seed = cfg.forcing_seed;
  m.observation_seed = cfg.observations.seed;
  m.da_seed = cfg.da.seed;
  m.version = FLOODCHAIN_VERSION;
  return m;
}

}  // namespace

RunManifest run_experiment(const config::ExperimentConfig& cfg, const fs::path& out) {
  config::validate(cfg);
  Stopwatch clock;
  const auto shared = prepare(cfg);
  auto manifest = manifest_for(cfg, shared);
  manifest.timings.emplace_back("prepare", clock.lap());
  const auto cell = run_cell(cfg, shared, cfg.experiment, cfg.forcing);
  manifest.timings.emplace_back(cell.label, clock.lap());

  fs::create_directories(out);
  manifest.files = write_shared(out, cfg, shared);
  const auto cell_files = write_cell(out, shared, cell, cfg.experiment == config::Experiment::IGDA);
  manifest.files.insert(manifest.files.end(), cell_files.begin(), cell_files.end());
  const std::vector<metrics::MetricsReport> one{cell.report};
  summary_files(out, "", metrics::summarize(one), manifest.files);
  manifest.timings.emplace_back("write", clock.lap());
  manifest.files.emplace_back("manifest.json");
  write_manifest(out / "manifest.json", manifest);
  return manifest;
}

RunManifest run_matrix(const config::ExperimentConfig& cfg, const fs::path& out, metrics::SummaryTable* table) {
  constexpr config::Experiment experiments[] = {config::Experiment::OL, config::Experiment::IDA,
                                                config::Experiment::IGDA};
  constexpr config::ForcingSource forcings[] = {config::ForcingSource::observed, config::ForcingSource::hydrologic};
  for (auto e : experiments) {
    auto cell_cfg = cfg;
    cell_cfg.experiment = e;
    cell_cfg.da.selection.clear();
    config::validate(cell_cfg);
  }

  Stopwatch clock;
  const auto shared = prepare(cfg);
  auto manifest = manifest_for(cfg, shared);
  manifest.timings.emplace_back("prepare", clock.lap());
  fs::create_directories(out);
  manifest.files = write_shared(out, cfg, shared);

  std::vector<metrics::MetricsReport> reports;
  std::vector<std::string> failures;
  for (auto f : forcings) {
    for (auto e : experiments) {
      const auto label = cell_label(e, f);
      try {
        const auto cell = run_cell(cfg, shared, e, f);
        const auto files = write_cell(out, shared, cell, e == config::Experiment::IGDA);
        manifest.files.insert(manifest.files.end(), files.begin(), files.end());
        reports.push_back(cell.report);
      } catch (const std::exception& ex) {
        spdlog::error("{}: {}", label, ex.what());
        failures.push_back(label + ": " + ex.what());
      }
      manifest.timings.emplace_back(label, clock.lap());
      spdlog::info("{}: {:.1f} s", label, manifest.timings.back().second);
    }
  }
  if (!reports.empty()) {
    const auto summary = metrics::summarize(reports);
    summary_files(out, "", summary, manifest.files);
    if (table) *table = summary;
  }
  if (!failures.empty())
    emit(out, "errors.json", manifest.files, [&](std::ostream& o) {
      o << nlohmann::ordered_json{{"failed_cells", failures}}.dump(2) << '\n';
    });
  manifest.files.emplace_back("manifest.json");
  write_manifest(out / "manifest.json", manifest);
  if (!failures.empty())
    throw std::runtime_error(fmt::format("{} of 6 matrix cells failed; see errors.json", failures.size()));
  return manifest;
}

}  // namespace floodchain::experiment
