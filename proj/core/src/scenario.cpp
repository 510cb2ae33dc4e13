#include "floodchain/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "floodchain/error.hpp"

namespace floodchain::scenario {

namespace {

constexpr int kChannelZone = 0;
constexpr int kFloodplainZone = 1;

std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Peaks at 1 for t = tp, zero at t <= 0.
double storm_pulse(double t, double tp) {
  if (t <= 0.0) return 0.0;
  constexpr double shape = 4.0;
  const double r = t / tp;
  return std::pow(r, shape) * std::exp(shape * (1.0 - r));
}

struct ReachSpec {
  const char* id;
  const char* downstream;
  double k;
  double x;
  double share;   // of baseflow and storm volume
  double offset;  // storm peak delay [s]
};

constexpr ReachSpec kReaches[] = {
    {"upper_north", "middle", 5400.0, 0.08, 0.35, 0.0},
    {"upper_south", "middle", 3600.0, 0.08, 0.25, 1800.0},
    {"middle", "lower", 3600.0, 0.08, 0.25, 3600.0},
    {"lower", "-", 2700.0, 0.08, 0.15, 5400.0},
};

}  // namespace

Scenario build_scenario(const ScenarioConfig& c) {
  if (c.nx < 4 || c.ny < 3) throw DomainError("scenario: grid needs at least 4 x 3 cells");
  if (!(c.dx > 0.0 && c.dy > 0.0)) throw DomainError("scenario: dx and dy must be positive");
  if (c.channel_rows < 1 || c.channel_rows > c.ny - 2)
    throw DomainError("scenario: channel must leave at least one floodplain row on each side");
  if (!(c.slope > 0.0)) throw DomainError("scenario: slope must be positive");
  if (!(c.bank_height > 0.0)) throw DomainError("scenario: bank height must be positive");
  if (c.levee_height < 0.0 || !std::isfinite(c.floodplain_rise)) throw DomainError("scenario: invalid levee or floodplain rise");
  const int bench_rows = (c.ny - c.channel_rows) / 2;
  if (c.pocket_rows < 0 || c.pocket_rows >= bench_rows - 1 || c.pocket_depth < 0.0)
    throw DomainError("scenario: pockets need 0 <= pocket_rows < floodplain rows - 1 and a non-negative depth");
  if (c.subdomains < 1 || c.subdomains > c.nx) throw DomainError("scenario: subdomain count must lie in [1, nx]");
  if (!(c.k_channel > 0.0 && c.k_floodplain > 0.0)) throw DomainError("scenario: Strickler coefficients must be positive");
  if (!(c.wse_sigma > 0.0 && c.wsr_sigma > 0.0)) throw DomainError("scenario: observation errors must be positive");

  Scenario s;
  auto& g = s.grid;
  g.nx = c.nx;
  g.ny = c.ny;
  g.dx = c.dx;
  g.dy = c.dy;
  g.z.resize(g.cells());
  g.friction_zone.resize(g.cells());
  g.subdomain.assign(g.cells(), -1);
  s.floodplain_mask.assign(g.cells(), 0);
  const int j0 = (c.ny - c.channel_rows) / 2;
  const int j1 = j0 + c.channel_rows - 1;
  for (int j = 0; j < c.ny; ++j) {
    for (int i = 0; i < c.nx; ++i) {
      const auto cell = g.index(i, j);
      const double bed = c.bed_upstream - c.slope * (i + 0.5) * c.dx;
      if (j >= j0 && j <= j1) {
        g.z[cell] = bed;
        g.friction_zone[cell] = kChannelZone;
        continue;
      }
      const int d = j < j0 ? j0 - j : j - j1;
      const int last_bench = bench_rows - c.pocket_rows;
      double rel = c.floodplain_rise * (std::min(d, last_bench) - 1);
      if (d == 1) rel = c.levee_height;
      // Pockets are closed per subdomain by berms at the crest level.
      const bool berm = i == 0 || i == c.nx - 1 || (i * c.subdomains / c.nx != (i - 1) * c.subdomains / c.nx);
      if (d > last_bench && !berm) rel -= c.pocket_depth;
      if (c.bank_height + rel <= 0.0) throw DomainError("scenario: floodplain falls below the channel bed");
      g.z[cell] = bed + c.bank_height + rel;
      g.friction_zone[cell] = kFloodplainZone;
      g.subdomain[cell] = i * c.subdomains / c.nx;
      s.floodplain_mask[cell] = 1;
    }
  }
  g.validate();
  s.friction_zones = {kChannelZone, kFloodplainZone};
  for (int j = j0; j <= j1; ++j) s.inlet_rows.push_back(j);
  for (int j = 0; j < c.ny; ++j) {
    const int d = j < j0 ? j0 - j : j - j1;
    if (j >= j0 && j <= j1) s.outlet_rows.push_back(j);
    else if (d <= bench_rows - c.pocket_rows) s.outlet_rows.push_back(j);
  }

  // Wide-channel normal depth at the outlet: Q = K W h^(5/3) sqrt(S).
  const double width = c.channel_rows * c.dy;
  s.rating.b = 0.6;
  s.rating.a = std::pow(1.0 / (c.k_channel * width * std::sqrt(c.slope)), 0.6);
  s.rating.z0 = c.bed_upstream - c.slope * c.nx * c.dx;

  if (c.stations.empty()) {
    s.stations = {{"upstream", c.nx / 10, j0, c.wse_sigma},
                  {"middle", c.nx / 2, j0, c.wse_sigma},
                  {"downstream", c.nx * 9 / 10, j0, c.wse_sigma}};
  } else {
    for (const auto& spec : c.stations) {
      observing::GaugeStation st{spec.name, spec.i, spec.j < 0 ? j0 : spec.j, c.wse_sigma};
      observing::validate_station(st, g);
      s.stations.push_back(st);
    }
  }
  s.subdomains = observing::subdomains_from_grid(g, c.wsr_sigma);

  s.truth.friction = {c.k_channel, c.k_floodplain};
  s.truth.mu = 1.0;
  s.truth.delta_h.assign(s.subdomains.size(), 0.0);

  std::vector<std::string> ids;
  std::vector<std::string> downstream;
  for (const auto& r : kReaches) {
    ids.emplace_back(r.id);
    downstream.emplace_back(r.downstream);
    s.muskingum.k.push_back(r.k);
    s.muskingum.x.push_back(r.x);
  }
  s.network = routing::RiverNetwork(std::move(ids), downstream);

  std::ostringstream text;
  hydraulics::write_grid(text, g);
  routing::write_network(text, s.network, s.muskingum);
  observing::write_stations(text, s.stations);
  observing::write_subdomains(text, s.subdomains);
  s.hash = fnv1a(text.str());
  return s;
}

double BiasConfig::apply(double q) const {
  if (kind == BiasKind::constant) return q * factor;
  const double s = 0.5 * (1.0 + std::tanh((q - threshold) / (width * threshold)));
  return q * (1.0 - reduction * s);
}

Forcings make_forcings(const Scenario& scenario, const EventConfig& event, const BiasConfig& bias,
                       std::uint64_t seed) {
  if (!(event.duration > 0.0)) throw DomainError("forcing: event duration must be positive");
  if (!(event.step > 0.0)) throw DomainError("forcing: time step must be positive");
  if (!(event.baseflow > 0.0)) throw DomainError("forcing: baseflow must be positive");
  if (!(event.peak > event.baseflow)) throw DomainError("forcing: peak must exceed the baseflow");
  if (!(event.storm_peak > 0.0)) throw DomainError("forcing: storm peak time must be positive");
  if (event.hydrologic_noise < 0.0) throw DomainError("forcing: noise must be non-negative");
  if (bias.kind == BiasKind::peak && !(bias.threshold > 0.0 && bias.width > 0.0 && bias.reduction >= 0.0 &&
                                       bias.reduction < 1.0))
    throw DomainError("forcing: invalid peak bias settings");
  if (bias.kind == BiasKind::constant && !(bias.factor > 0.0)) throw DomainError("forcing: bias factor must be positive");

  const auto& net = scenario.network;
  const std::size_t n = net.size();
  const auto steps = static_cast<std::size_t>(std::ceil(event.duration / event.step - 1e-9));

  // Unit storm response at the outlet, used to scale the storm to the requested peak.
  routing::LateralInflowSeries unit;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * event.step;
    unit.times.push_back(t);
    auto& row = unit.values.emplace_back(n);
    for (std::size_t r = 0; r < n; ++r)
      row[r] = kReaches[r].share * storm_pulse(t, event.storm_peak + kReaches[r].offset);
  }
  const auto outlet = net.outlets().front();
  const std::vector<double> zero(n, 0.0);
  const auto unit_routed = routing::route_hydrograph(net, scenario.muskingum, unit, zero).reach_series(outlet);
  const double unit_peak = *std::max_element(unit_routed.begin(), unit_routed.end());
  const double scale = (event.peak - event.baseflow) / unit_peak;

  Forcings out;
  out.lateral = unit;
  for (auto& row : out.lateral.values)
    for (std::size_t r = 0; r < n; ++r) row[r] = kReaches[r].share * event.baseflow + scale * row[r];

  // Steady baseflow initial condition.
  std::vector<double> q0(n, 0.0);
  for (std::size_t r : net.topological_order()) {
    q0[r] += kReaches[r].share * event.baseflow;
    if (const auto d = net.downstream(r)) q0[*d] += q0[r];
  }

  auto hydrograph = [&](const routing::LateralInflowSeries& lateral) {
    hydraulics::Hydrograph h;
    h.times = lateral.times;
    h.values = routing::route_hydrograph(net, scenario.muskingum, lateral, q0).reach_series(outlet);
    return h;
  };
  out.observed = hydrograph(out.lateral);

  routing::LateralInflowSeries model_input = out.lateral;
  if (event.hydrologic_noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, event.hydrologic_noise);
    for (auto& row : model_input.values)
      for (double& v : row) v *= std::exp(normal(rng));
  }
  out.hydrologic = hydrograph(model_input);
  for (double& v : out.hydrologic.values) v = bias.apply(v);
  return out;
}

hydraulics::HydraulicState spin_up(const Scenario& scenario, double discharge, double duration,
                                   const hydraulics::SolverOptions& solver, double t0) {
  if (!(discharge > 0.0 && duration > 0.0)) throw DomainError("spin-up: discharge and duration must be positive");
  hydraulics::BoundaryConditions bc;
  bc.inlet_rows = scenario.inlet_rows;
  bc.outlet_rows = scenario.outlet_rows;
  bc.outlet = scenario.rating;
  bc.inflow.times = {0.0, duration};
  bc.inflow.values = {discharge, discharge};
  hydraulics::FrictionField friction{scenario.friction_zones, scenario.truth.friction, 1.0, 200.0};
  const double end[] = {duration};
  auto run = hydraulics::simulate(scenario.grid, hydraulics::HydraulicState::dry(scenario.grid), bc, friction,
                                  duration, end, solver);
  auto state = std::move(run.snapshots.back());
  state.t = t0;
  return state;
}

assimilation::ModelSetup model_setup(const Scenario& scenario, const hydraulics::Hydrograph& forcing,
                                     const hydraulics::SolverOptions& solver, double wet_threshold,
                                     const assimilation::ControlBounds& bounds) {
  assimilation::ModelSetup setup;
  setup.grid = scenario.grid;
  setup.friction_zones = scenario.friction_zones;
  setup.bc.inlet_rows = scenario.inlet_rows;
  setup.bc.outlet_rows = scenario.outlet_rows;
  setup.bc.outlet = scenario.rating;
  setup.bc.inflow = forcing;
  setup.solver = solver;
  setup.stations = scenario.stations;
  setup.subdomains = scenario.subdomains;
  setup.wet_threshold = wet_threshold;
  setup.bounds = bounds;
  setup.bc.validate(setup.grid);
  return setup;
}

TruthRun run_truth(const assimilation::ModelSetup& setup, const assimilation::ControlVector& truth,
                   const hydraulics::HydraulicState& initial, double t_end, double window,
                   std::span<const double> record_times, std::span<const Injection> injections) {
  if (!(window > 0.0)) throw DomainError("truth run: window must be positive");
  std::map<std::size_t, std::vector<double>> by_window;
  for (const auto& inj : injections) {
    const double w = (inj.time - initial.t) / window;
    const double wr = std::round(w);
    if (std::abs(w - wr) > 1e-9 || wr < 0.0 || initial.t + wr * window >= t_end)
      throw DomainError("truth run: injections must happen at a window start inside the event");
    const auto it = std::find_if(setup.subdomains.begin(), setup.subdomains.end(),
                                 [&](const auto& s) { return s.id == inj.subdomain; });
    if (it == setup.subdomains.end()) throw DomainError("truth run: unknown injection subdomain");
    auto& dh = by_window[static_cast<std::size_t>(wr)];
    dh.resize(setup.subdomains.size(), 0.0);
    dh[static_cast<std::size_t>(it - setup.subdomains.begin())] += inj.depth;
  }

  TruthRun out;
  assimilation::EnsembleMember member{truth, initial, 0, 0};
  double t = initial.t;
  for (std::size_t w = 0; t < t_end; ++w) {
    const double t1 = std::min(t + window, t_end);
    member.control.delta_h = truth.delta_h;
    if (const auto it = by_window.find(w); it != by_window.end())
      for (std::size_t s = 0; s < it->second.size(); ++s)
        member.control.delta_h[s] = (s < truth.delta_h.size() ? truth.delta_h[s] : 0.0) + it->second[s];
    std::vector<double> records;
    for (double r : record_times)
      if (r > t && r <= t1) records.push_back(r);
    auto fc = assimilation::propagate_member(setup, member, t1, {}, {}, records);
    for (std::size_t k = 0; k < records.size(); ++k) {
      out.times.push_back(records[k]);
      out.snapshots.push_back(std::move(fc.snapshots[k]));
    }
    out.inflow_volume += fc.inflow_volume;
    member.state = std::move(fc.end_state);
    t = t1;
  }
  return out;
}

}  // namespace floodchain::scenario
