#include "floodchain/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::config {

namespace {

template <class T>
std::string type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  else if constexpr (std::is_integral_v<T>) return "an integer";
  else if constexpr (std::is_floating_point_v<T>) return "a number";
  else if constexpr (std::is_same_v<T, std::string>) return "a string";
  else return "a list of numbers";
}

// One YAML mapping with key tracking; reports keys never consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path, ExperimentConfig& cfg) : node_(std::move(node)), path_(std::move(path)), cfg_(cfg) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  template <class T>
  void get(const char* key, T& out) {
    const YAML::Node value = lookup(key);
    if (!value) return;
    try {
      out = value.as<T>();
    } catch (const YAML::Exception&) {
      fail(value, fmt::format("'{}' must be {}", dotted(key), type_name<T>()));
    }
  }

  Section child(const char* key) { return Section(lookup(key), dotted(key), cfg_); }

  YAML::Node sequence(const char* key) {
    const YAML::Node value = lookup(key);
    if (value && !value.IsSequence()) fail(value, fmt::format("'{}' must be a list", dotted(key)));
    return value;
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.count(key)) fail(kv.first, fmt::format("unknown key '{}'", dotted(key.c_str())));
    }
  }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    throw FormatError(what, cfg_.source, at.Mark().line + 1);
  }

  std::string dotted(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  YAML::Node lookup(const char* key) {
    used_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node(YAML::NodeType::Undefined);
    YAML::Node value = node_[key];
    if (value && value.IsDefined()) cfg_.key_lines[dotted(key)] = value.Mark().line + 1;
    return value;
  }

  YAML::Node node_;
  std::string path_;
  ExperimentConfig& cfg_;
  std::set<std::string> used_;
};

[[noreturn]] void invalid(const ExperimentConfig& cfg, const std::string& key, const std::string& what) {
  const auto it = cfg.key_lines.find(key);
  throw FormatError(what, cfg.source, it == cfg.key_lines.end() ? 0 : it->second);
}

std::string selection_name(assimilation::ObservationSelection s) {
  switch (s) {
    case assimilation::ObservationSelection::none: return "none";
    case assimilation::ObservationSelection::wse: return "wse";
    case assimilation::ObservationSelection::wse_wsr: return "wse+wsr";
  }
  return "none";
}

std::string list(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t k = 0; k < values.size(); ++k) out += (k ? ", " : "") + csv::format(values[k]);
  return out + "]";
}

std::string yes(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::OL: return "OL";
    case Experiment::IDA: return "IDA";
    case Experiment::IGDA: return "IGDA";
  }
  return "OL";
}

std::string to_string(ForcingSource f) { return f == ForcingSource::observed ? "observed" : "hydrologic"; }

Experiment parse_experiment(const std::string& text) {
  if (text == "OL") return Experiment::OL;
  if (text == "IDA") return Experiment::IDA;
  if (text == "IGDA") return Experiment::IGDA;
  throw DomainError("unknown experiment '" + text + "' (expected OL, IDA or IGDA)");
}

ForcingSource parse_forcing(const std::string& text) {
  if (text == "observed") return ForcingSource::observed;
  if (text == "hydrologic") return ForcingSource::hydrologic;
  throw DomainError("unknown forcing '" + text + "' (expected observed or hydrologic)");
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  cfg.source = source;
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::ParserException& e) {
    throw FormatError(e.msg, source, e.mark.line + 1);
  }
  Section top(root, "", cfg);
  top.get("version", cfg.version);
  if (cfg.version != kSchemaVersion)
    invalid(cfg, "version", fmt::format("unsupported config version {} (expected {})", cfg.version, kSchemaVersion));

  std::string experiment;
  std::string forcing;
  top.get("experiment", experiment);
  top.get("forcing", forcing);
  try {
    if (!experiment.empty()) cfg.experiment = parse_experiment(experiment);
  } catch (const DomainError& e) {
    invalid(cfg, "experiment", e.what());
  }
  try {
    if (!forcing.empty()) cfg.forcing = parse_forcing(forcing);
  } catch (const DomainError& e) {
    invalid(cfg, "forcing", e.what());
  }
  top.get("output", cfg.output);

  {
    Section s = top.child("scenario");
    auto& c = cfg.scenario;
    s.get("nx", c.nx);
    s.get("ny", c.ny);
    s.get("dx", c.dx);
    s.get("dy", c.dy);
    s.get("channel_rows", c.channel_rows);
    s.get("bed_upstream", c.bed_upstream);
    s.get("slope", c.slope);
    s.get("bank_height", c.bank_height);
    s.get("levee_height", c.levee_height);
    s.get("floodplain_rise", c.floodplain_rise);
    s.get("pocket_rows", c.pocket_rows);
    s.get("pocket_depth", c.pocket_depth);
    s.get("subdomains", c.subdomains);
    s.get("k_channel", c.k_channel);
    s.get("k_floodplain", c.k_floodplain);
    s.get("wse_sigma", c.wse_sigma);
    s.get("wsr_sigma", c.wsr_sigma);
    if (const auto stations = s.sequence("stations")) {
      for (std::size_t k = 0; k < stations.size(); ++k) {
        Section st(stations[k], s.dotted("stations") + "[" + std::to_string(k) + "]", cfg);
        scenario::StationSpec spec;
        st.get("name", spec.name);
        st.get("i", spec.i);
        st.get("j", spec.j);
        st.finish();
        if (spec.name.empty()) s.fail(stations[k], "station without a name");
        c.stations.push_back(spec);
      }
    }
    s.finish();
  }
  {
    Section s = top.child("event");
    auto& e = cfg.event;
    s.get("duration", e.duration);
    s.get("step", e.step);
    s.get("baseflow", e.baseflow);
    s.get("peak", e.peak);
    s.get("storm_peak", e.storm_peak);
    s.get("hydrologic_noise", e.hydrologic_noise);
    s.get("seed", cfg.forcing_seed);
    s.finish();
  }
  {
    Section s = top.child("bias");
    auto& b = cfg.bias;
    std::string kind;
    s.get("kind", kind);
    if (kind == "constant") b.kind = scenario::BiasKind::constant;
    else if (kind == "peak" || kind.empty()) b.kind = scenario::BiasKind::peak;
    else invalid(cfg, "bias.kind", "bias.kind must be 'peak' or 'constant'");
    s.get("reduction", b.reduction);
    s.get("threshold", b.threshold);
    s.get("width", b.width);
    s.get("factor", b.factor);
    s.finish();
  }
  {
    Section s = top.child("truth");
    s.get("spinup", cfg.spinup);
    if (const auto inj = s.sequence("injections")) {
      for (std::size_t k = 0; k < inj.size(); ++k) {
        Section is(inj[k], s.dotted("injections") + "[" + std::to_string(k) + "]", cfg);
        scenario::Injection injection;
        is.get("time", injection.time);
        is.get("subdomain", injection.subdomain);
        is.get("depth", injection.depth);
        is.finish();
        cfg.injections.push_back(injection);
      }
    }
    s.finish();
  }
  {
    Section s = top.child("observations");
    auto& o = cfg.observations;
    s.get("gauge_interval", o.gauge_interval);
    s.get("wsr_times", o.wsr_times);
    s.get("wet_threshold", o.wet_threshold);
    s.get("seed", o.seed);
    s.finish();
  }
  {
    Section s = top.child("solver");
    s.get("gravity", cfg.solver.gravity);
    s.get("dry_threshold", cfg.solver.dry_threshold);
    s.get("cfl", cfg.solver.cfl);
    s.get("dt_max", cfg.solver.dt_max);
    s.finish();
  }
  {
    Section s = top.child("assimilation");
    auto& d = cfg.da;
    s.get("members", d.members);
    s.get("window_intervals", d.window_intervals);
    s.get("selection", d.selection);
    s.get("seed", d.seed);
    s.get("threads", d.threads);
    s.get("inflation", d.inflation);
    s.get("anamorphosis", d.anamorphosis);
    s.get("anamorphosis_refit", d.anamorphosis_refit);
    s.get("transformed_unit_variance", d.transformed_unit_variance);
    s.get("saturation_fraction", d.saturation_fraction);
    s.get("respread", d.respread);
    s.get("rerun", d.rerun);
    s.get("delta_h_without_wsr", d.delta_h_without_wsr);
    s.get("localize_delta_h", d.localize_delta_h);
    Section prior = s.child("prior");
    prior.get("friction", d.prior_friction);
    prior.get("mu", d.prior_mu);
    prior.finish();
    Section spreads = s.child("spreads");
    spreads.get("friction", d.spread_friction);
    spreads.get("mu", d.spread_mu);
    spreads.get("delta_h", d.spread_delta_h);
    spreads.finish();
    Section bounds = s.child("bounds");
    bounds.get("k_min", d.bounds.k_min);
    bounds.get("k_max", d.bounds.k_max);
    bounds.get("mu_min", d.bounds.mu_min);
    bounds.get("mu_max", d.bounds.mu_max);
    bounds.get("dh_max", d.bounds.dh_max);
    bounds.finish();
    s.finish();
  }
  {
    Section s = top.child("metrics");
    s.get("csi_include_channel", cfg.csi_include_channel);
    s.get("extent_probability", cfg.extent_probability);
    s.finish();
  }
  top.finish();
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file", path.string(), 0);
  return parse_config(in, path.string());
}

assimilation::ObservationSelection selection_for(Experiment experiment) {
  switch (experiment) {
    case Experiment::OL: return assimilation::ObservationSelection::none;
    case Experiment::IDA: return assimilation::ObservationSelection::wse;
    case Experiment::IGDA: return assimilation::ObservationSelection::wse_wsr;
  }
  return assimilation::ObservationSelection::none;
}

void validate(const ExperimentConfig& cfg) {
  try {
    scenario::build_scenario(cfg.scenario);
  } catch (const DomainError& e) {
    invalid(cfg, "scenario", e.what());
  }
  const auto& e = cfg.event;
  if (!(e.duration > 0.0)) invalid(cfg, "event.duration", "event.duration must be positive");
  if (!(e.step > 0.0)) invalid(cfg, "event.step", "event.step must be positive");
  if (!(e.peak > e.baseflow && e.baseflow > 0.0))
    invalid(cfg, "event.peak", "event.peak must exceed a positive event.baseflow");
  if (!(cfg.spinup > 0.0)) invalid(cfg, "truth.spinup", "truth.spinup must be positive");
  if (cfg.bias.kind == scenario::BiasKind::peak &&
      !(cfg.bias.reduction >= 0.0 && cfg.bias.reduction < 1.0 && cfg.bias.threshold > 0.0 && cfg.bias.width > 0.0))
    invalid(cfg, "bias", "bias needs 0 <= reduction < 1, threshold > 0 and width > 0");
  if (cfg.bias.kind == scenario::BiasKind::constant && !(cfg.bias.factor > 0.0))
    invalid(cfg, "bias.factor", "bias.factor must be positive");

  const auto& o = cfg.observations;
  if (!(o.gauge_interval > 0.0)) invalid(cfg, "observations.gauge_interval", "gauge interval must be positive");
  if (!(o.wet_threshold > 0.0)) invalid(cfg, "observations.wet_threshold", "wet threshold must be positive");
  if (!(cfg.extent_probability > 0.0 && cfg.extent_probability <= 1.0))
    invalid(cfg, "metrics.extent_probability", "extent probability must lie in (0, 1]");
  if (!std::is_sorted(o.wsr_times.begin(), o.wsr_times.end()) ||
      std::adjacent_find(o.wsr_times.begin(), o.wsr_times.end()) != o.wsr_times.end())
    invalid(cfg, "observations.wsr_times", "wsr_times must be strictly increasing");
  for (double t : o.wsr_times)
    if (!(t > 0.0 && t <= e.duration))
      invalid(cfg, "observations.wsr_times", "wsr_times must lie inside (0, event.duration]");

  if (!(cfg.solver.cfl > 0.0 && cfg.solver.cfl <= 0.5)) invalid(cfg, "solver.cfl", "solver.cfl must lie in (0, 0.5]");
  if (!(cfg.solver.dt_max > 0.0 && cfg.solver.dry_threshold > 0.0 && cfg.solver.gravity > 0.0))
    invalid(cfg, "solver", "solver settings must be positive");

  const auto& d = cfg.da;
  if (d.window_intervals < 1) invalid(cfg, "assimilation.window_intervals", "window_intervals must be >= 1");
  if (d.members < 2) invalid(cfg, "assimilation.members", "assimilation.members must be >= 2");
  if (!d.prior_friction.empty() && d.prior_friction.size() != 2)
    invalid(cfg, "assimilation.prior.friction", "prior friction needs one value per zone (channel, floodplain)");
  if (d.spread_friction.size() != 1 && d.spread_friction.size() != 2)
    invalid(cfg, "assimilation.spreads.friction", "friction spread needs one value or one per zone");
  if (!(d.prior_mu > 0.0)) invalid(cfg, "assimilation.prior.mu", "prior mu must be positive");
  if (!(d.spread_mu > 0.0 && d.spread_delta_h > 0.0) ||
      std::any_of(d.spread_friction.begin(), d.spread_friction.end(), [](double s) { return !(s > 0.0); }))
    invalid(cfg, "assimilation.spreads", "spreads must be positive");
  if (!(d.inflation > 0.0)) invalid(cfg, "assimilation.inflation", "inflation must be positive");
  if (!(d.saturation_fraction >= 0.0 && d.saturation_fraction <= 1.0))
    invalid(cfg, "assimilation.saturation_fraction", "saturation_fraction must lie in [0, 1]");
  try {
    d.bounds.validate();
  } catch (const DomainError& err) {
    invalid(cfg, "assimilation.bounds", err.what());
  }

  if (!d.selection.empty()) {
    const auto expected = selection_name(selection_for(cfg.experiment));
    if (d.selection != "none" && d.selection != "wse" && d.selection != "wse+wsr")
      invalid(cfg, "assimilation.selection", "assimilation.selection must be none, wse or wse+wsr");
    if (d.selection != expected)
      invalid(cfg, "assimilation.selection",
              fmt::format("experiment {} assimilates '{}', not '{}'", to_string(cfg.experiment), expected, d.selection));
  }
  if (cfg.experiment == Experiment::IGDA && o.wsr_times.empty())
    invalid(cfg, "observations.wsr_times", "IGDA needs WSR observation times");

  const double window = cfg.window();
  const auto scenario_subdomains = cfg.scenario.subdomains;
  for (const auto& inj : cfg.injections) {
    const double w = inj.time / window;
    if (std::abs(w - std::round(w)) > 1e-9 || inj.time < 0.0 || inj.time >= e.duration)
      invalid(cfg, "truth.injections", "injection times must be window starts inside the event");
    if (inj.subdomain < 0 || inj.subdomain >= scenario_subdomains)
      invalid(cfg, "truth.injections", "injection subdomain out of range");
    if (!(inj.depth > 0.0)) invalid(cfg, "truth.injections", "injection depth must be positive");
  }
}

assimilation::CycleConfig cycle_config(const ExperimentConfig& cfg, Experiment experiment) {
  assimilation::CycleConfig c;
  c.window = cfg.window();
  c.selection = selection_for(experiment);
  c.correct_state = experiment == Experiment::IGDA;
  c.anamorphosis = cfg.da.anamorphosis;
  c.anamorphosis_per_cycle = cfg.da.anamorphosis_refit;
  c.transformed_unit_variance = cfg.da.transformed_unit_variance;
  c.saturation_fraction = cfg.da.saturation_fraction;
  c.inflation = cfg.da.inflation;
  c.respread = cfg.da.respread;
  c.rerun = cfg.da.rerun;
  c.delta_h_without_wsr = cfg.da.delta_h_without_wsr;
  c.localize_delta_h = cfg.da.localize_delta_h;
  c.seed = cfg.da.seed;
  c.threads = cfg.da.threads;
  if (experiment == Experiment::OL) {
    c.members = 1;
    c.spreads = {};
  } else {
    c.members = cfg.da.members;
    c.spreads.friction = cfg.da.spread_friction;
    c.spreads.mu = cfg.da.spread_mu;
    c.spreads.delta_h = cfg.da.spread_delta_h;
  }
  return c;
}

std::string canonical(const ExperimentConfig& cfg) {
  std::ostringstream o;
  const auto& s = cfg.scenario;
  const auto& e = cfg.event;
  const auto& d = cfg.da;
  o << "version: " << cfg.version << '\n'
    << "experiment: " << to_string(cfg.experiment) << '\n'
    << "forcing: " << to_string(cfg.forcing) << '\n';
  o << "scenario:\n"
    << "  nx: " << s.nx << "\n  ny: " << s.ny << "\n  dx: " << csv::format(s.dx) << "\n  dy: " << csv::format(s.dy)
    << "\n  channel_rows: " << s.channel_rows << "\n  bed_upstream: " << csv::format(s.bed_upstream)
    << "\n  slope: " << csv::format(s.slope) << "\n  bank_height: " << csv::format(s.bank_height)
    << "\n  levee_height: " << csv::format(s.levee_height) << "\n  floodplain_rise: " << csv::format(s.floodplain_rise)
    << "\n  pocket_rows: " << s.pocket_rows << "\n  pocket_depth: " << csv::format(s.pocket_depth)
    << "\n  subdomains: " << s.subdomains << "\n  k_channel: " << csv::format(s.k_channel)
    << "\n  k_floodplain: " << csv::format(s.k_floodplain) << "\n  wse_sigma: " << csv::format(s.wse_sigma)
    << "\n  wsr_sigma: " << csv::format(s.wsr_sigma) << '\n';
  o << "  stations:" << (s.stations.empty() ? " []\n" : "\n");
  for (const auto& st : s.stations) o << "    - {name: \"" << st.name << "\", i: " << st.i << ", j: " << st.j << "}\n";
  o << "event:\n"
    << "  duration: " << csv::format(e.duration) << "\n  step: " << csv::format(e.step)
    << "\n  baseflow: " << csv::format(e.baseflow) << "\n  peak: " << csv::format(e.peak)
    << "\n  storm_peak: " << csv::format(e.storm_peak) << "\n  hydrologic_noise: " << csv::format(e.hydrologic_noise)
    << "\n  seed: " << cfg.forcing_seed << '\n';
  o << "bias:\n"
    << "  kind: " << (cfg.bias.kind == scenario::BiasKind::peak ? "peak" : "constant")
    << "\n  reduction: " << csv::format(cfg.bias.reduction) << "\n  threshold: " << csv::format(cfg.bias.threshold)
    << "\n  width: " << csv::format(cfg.bias.width) << "\n  factor: " << csv::format(cfg.bias.factor) << '\n';
  o << "truth:\n  spinup: " << csv::format(cfg.spinup) << "\n  injections:" << (cfg.injections.empty() ? " []\n" : "\n");
  for (const auto& inj : cfg.injections)
    o << "    - {time: " << csv::format(inj.time) << ", subdomain: " << inj.subdomain
      << ", depth: " << csv::format(inj.depth) << "}\n";
  o << "observations:\n"
    << "  gauge_interval: " << csv::format(cfg.observations.gauge_interval)
    << "\n  wsr_times: " << list(cfg.observations.wsr_times)
    << "\n  wet_threshold: " << csv::format(cfg.observations.wet_threshold)
    << "\n  seed: " << cfg.observations.seed << '\n';
  o << "solver:\n"
    << "  gravity: " << csv::format(cfg.solver.gravity) << "\n  dry_threshold: " << csv::format(cfg.solver.dry_threshold)
    << "\n  cfl: " << csv::format(cfg.solver.cfl) << "\n  dt_max: " << csv::format(cfg.solver.dt_max) << '\n';
  o << "assimilation:\n"
    << "  members: " << d.members << "\n  window_intervals: " << d.window_intervals
    << "\n  selection: \"" << d.selection << "\"\n  seed: " << d.seed
    << "\n  inflation: " << csv::format(d.inflation) << "\n  anamorphosis: " << yes(d.anamorphosis)
    << "\n  anamorphosis_refit: " << yes(d.anamorphosis_refit)
    << "\n  transformed_unit_variance: " << yes(d.transformed_unit_variance)
    << "\n  saturation_fraction: " << csv::format(d.saturation_fraction) << "\n  respread: " << yes(d.respread)
    << "\n  rerun: " << yes(d.rerun) << "\n  delta_h_without_wsr: " << yes(d.delta_h_without_wsr)
    << "\n  localize_delta_h: " << yes(d.localize_delta_h) << '\n'
    << "  prior:\n    friction: " << list(d.prior_friction) << "\n    mu: " << csv::format(d.prior_mu) << '\n'
    << "  spreads:\n    friction: " << list(d.spread_friction) << "\n    mu: " << csv::format(d.spread_mu)
    << "\n    delta_h: " << csv::format(d.spread_delta_h) << '\n'
    << "  bounds:\n    k_min: " << csv::format(d.bounds.k_min) << "\n    k_max: " << csv::format(d.bounds.k_max)
    << "\n    mu_min: " << csv::format(d.bounds.mu_min) << "\n    mu_max: " << csv::format(d.bounds.mu_max)
    << "\n    dh_max: " << csv::format(d.bounds.dh_max) << '\n';
  o << "metrics:\n  csi_include_channel: " << yes(cfg.csi_include_channel)
    << "\n  extent_probability: " << csv::format(cfg.extent_probability) << '\n';
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical(cfg)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace floodchain::config
