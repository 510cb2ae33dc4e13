#include "floodchain/observing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::observing {

void validate_station(const GaugeStation& station, const StructuredGrid& grid) {
  if (!grid.contains(station.i, station.j))
    throw DomainError("station '" + station.name + "' lies outside the grid");
  if (!(station.sigma > 0.0)) throw DomainError("station '" + station.name + "': sigma must be positive");
}

void validate_subdomains(std::span<const FloodplainSubdomain> subdomains, const StructuredGrid& grid) {
  std::set<std::size_t> used;
  std::set<int> ids;
  for (const auto& sd : subdomains) {
    if (sd.cells.empty()) throw DomainError("subdomain " + std::to_string(sd.id) + " is empty");
    if (!ids.insert(sd.id).second) throw DomainError("duplicate subdomain id " + std::to_string(sd.id));
    for (auto c : sd.cells) {
      if (c >= grid.cells()) throw DomainError("subdomain " + std::to_string(sd.id) + " has a cell outside the grid");
      if (!used.insert(c).second) throw DomainError("subdomains overlap at cell " + std::to_string(c));
    }
  }
}

std::vector<FloodplainSubdomain> subdomains_from_grid(const StructuredGrid& grid, double sigma) {
  std::map<int, FloodplainSubdomain> by_id;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const int id = grid.subdomain[c];
    if (id < 0) continue;
    auto& sd = by_id[id];
    sd.id = id;
    sd.sigma = sigma;
    sd.cells.push_back(c);
  }
  std::vector<FloodplainSubdomain> out;
  for (auto& [id, sd] : by_id) out.push_back(std::move(sd));
  return out;
}

WseReading extract_wse(const HydraulicState& state, const StructuredGrid& grid, const GaugeStation& station,
                       double dry_threshold) {
  if (!grid.contains(station.i, station.j))
    throw DomainError("station '" + station.name + "' lies outside the grid");
  const auto c = grid.index(station.i, station.j);
  const double h = state.h.at(c);
  if (h < dry_threshold) return {grid.z[c], true};
  return {grid.z[c] + h, false};
}

std::vector<std::uint8_t> wet_dry_map(const HydraulicState& state, const StructuredGrid& grid, double threshold) {
  std::vector<std::uint8_t> wet(grid.cells(), 0);
  for (std::size_t c = 0; c < grid.cells(); ++c) wet[c] = state.h[c] >= threshold ? 1 : 0;
  return wet;
}

double wsr(const HydraulicState& state, const StructuredGrid& grid, const FloodplainSubdomain& subdomain,
           double threshold) {
  if (subdomain.cells.empty()) throw DomainError("wsr: subdomain " + std::to_string(subdomain.id) + " is empty");
  // Uniform cells, so the area weighting reduces to a count.
  std::size_t wet = 0;
  for (auto c : subdomain.cells)
    if (state.h.at(c) >= threshold) ++wet;
  (void)grid;
  return static_cast<double>(wet) / static_cast<double>(subdomain.cells.size());
}

ObservationSet ObservationSet::window(double t0, double t1) const {
  ObservationSet out;
  for (const auto& o : wse)
    if (o.time > t0 && o.time <= t1) out.wse.push_back(o);
  for (const auto& o : wsr)
    if (o.time > t0 && o.time <= t1) out.wsr.push_back(o);
  return out;
}

namespace {

template <class Records>
std::vector<double> distinct_times(const Records& records) {
  std::vector<double> t;
  for (const auto& r : records) t.push_back(r.time);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

const HydraulicState& snapshot_at(std::span<const HydraulicState> truth, double t) {
  for (const auto& s : truth)
    if (s.t == t) return s;
  throw DomainError("synthesize_observations: no truth snapshot at t=" + csv::format(t));
}

}  // namespace

std::vector<double> ObservationSet::wse_times() const { return distinct_times(wse); }
std::vector<double> ObservationSet::wsr_times() const { return distinct_times(wsr); }

ObservationSet synthesize_observations(std::span<const HydraulicState> truth, const StructuredGrid& grid,
                                       std::span<const GaugeStation> stations,
                                       std::span<const FloodplainSubdomain> subdomains,
                                       std::span<const double> wse_times, std::span<const double> wsr_times,
                                       const SynthesisOptions& options) {
  if (options.noise_std_wse < 0.0 || options.noise_std_wsr < 0.0)
    throw DomainError("synthesize_observations: noise std must be non-negative");
  for (const auto& s : stations) validate_station(s, grid);
  validate_subdomains(subdomains, grid);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ObservationSet obs;

  std::vector<double> times(wse_times.begin(), wse_times.end());
  std::sort(times.begin(), times.end());
  for (double t : times) {
    const auto& state = snapshot_at(truth, t);
    for (std::size_t k = 0; k < stations.size(); ++k) {
      const auto reading = extract_wse(state, grid, stations[k], options.dry_threshold);
      const double noise = options.noise_std_wse * normal(rng);
      obs.wse.push_back({t, k, reading.dry ? reading.value : reading.value + noise, stations[k].sigma, reading.dry});
    }
  }

  times.assign(wsr_times.begin(), wsr_times.end());
  std::sort(times.begin(), times.end());
  for (double t : times) {
    const auto& state = snapshot_at(truth, t);
    for (std::size_t k = 0; k < subdomains.size(); ++k) {
      const double ratio = wsr(state, grid, subdomains[k], options.wet_threshold);
      const double noise = options.noise_std_wsr * normal(rng);
      obs.wsr.push_back({t, k, std::clamp(ratio + noise, 0.0, 1.0), subdomains[k].sigma});
    }
  }
  return obs;
}

std::vector<GaugeStation> read_stations(std::istream& in, const StructuredGrid& grid, const std::string& source) {
  std::vector<GaugeStation> out;
  for (const auto& row : csv::read(in)) {
    if (row.fields.size() != 4) throw FormatError("stations: expected 'name,i,j,sigma'", source, row.line);
    if (row.fields[0] == "name") continue;
    GaugeStation s;
    s.name = row.fields[0];
    s.i = static_cast<int>(csv::parse_int(row.fields[1], source, row.line));
    s.j = static_cast<int>(csv::parse_int(row.fields[2], source, row.line));
    s.sigma = csv::parse_double(row.fields[3], source, row.line);
    try {
      validate_station(s, grid);
    } catch (const DomainError& e) {
      throw FormatError(e.what(), source, row.line);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_stations(std::ostream& out, std::span<const GaugeStation> stations) {
  csv::write_row(out, {"name", "i", "j", "sigma"});
  for (const auto& s : stations)
    csv::write_row(out, {s.name, std::to_string(s.i), std::to_string(s.j), csv::format(s.sigma)});
}

std::vector<FloodplainSubdomain> read_subdomains(std::istream& in, const StructuredGrid& grid,
                                                 const std::string& source) {
  const auto from_grid = subdomains_from_grid(grid, 1.0);
  std::vector<FloodplainSubdomain> out;
  for (const auto& row : csv::read(in)) {
    if (row.fields.size() != 2) throw FormatError("subdomains: expected 'id,sigma'", source, row.line);
    if (row.fields[0] == "id") continue;
    const int id = static_cast<int>(csv::parse_int(row.fields[0], source, row.line));
    const auto it = std::find_if(from_grid.begin(), from_grid.end(), [&](const auto& sd) { return sd.id == id; });
    if (it == from_grid.end()) throw FormatError("subdomains: id not present in the grid", source, row.line);
    auto sd = *it;
    sd.sigma = csv::parse_double(row.fields[1], source, row.line);
    out.push_back(std::move(sd));
  }
  validate_subdomains(out, grid);
  return out;
}

void write_subdomains(std::ostream& out, std::span<const FloodplainSubdomain> subdomains) {
  csv::write_row(out, {"id", "sigma"});
  for (const auto& sd : subdomains) csv::write_row(out, {std::to_string(sd.id), csv::format(sd.sigma)});
}

void write_observations(std::ostream& out, const ObservationSet& obs, std::span<const GaugeStation> stations,
                        std::span<const FloodplainSubdomain> subdomains) {
  csv::write_row(out, {"kind", "time", "target", "value", "sigma", "dry"});
  for (const auto& o : obs.wse)
    csv::write_row(out, {"wse", csv::format(o.time), stations[o.station].name, csv::format(o.value),
                         csv::format(o.sigma), o.dry ? "1" : "0"});
  for (const auto& o : obs.wsr)
    csv::write_row(out, {"wsr", csv::format(o.time), std::to_string(subdomains[o.subdomain].id),
                         csv::format(o.value), csv::format(o.sigma), "0"});
}

ObservationSet read_observations(std::istream& in, std::span<const GaugeStation> stations,
                                 std::span<const FloodplainSubdomain> subdomains, const std::string& source) {
  ObservationSet obs;
  for (const auto& row : csv::read(in)) {
    if (row.fields.size() != 6) throw FormatError("observations: expected 6 fields", source, row.line);
    const auto& kind = row.fields[0];
    if (kind == "kind") continue;
    const double time = csv::parse_double(row.fields[1], source, row.line);
    const double value = csv::parse_double(row.fields[3], source, row.line);
    const double sigma = csv::parse_double(row.fields[4], source, row.line);
    if (!std::isfinite(value) || !std::isfinite(time)) throw FormatError("observations: non-finite value", source, row.line);
    if (kind == "wse") {
      const auto it = std::find_if(stations.begin(), stations.end(), [&](const auto& s) { return s.name == row.fields[2]; });
      if (it == stations.end()) throw FormatError("observations: unknown station '" + row.fields[2] + "'", source, row.line);
      obs.wse.push_back({time, static_cast<std::size_t>(it - stations.begin()), value, sigma, row.fields[5] == "1"});
    } else if (kind == "wsr") {
      const int id = static_cast<int>(csv::parse_int(row.fields[2], source, row.line));
      const auto it = std::find_if(subdomains.begin(), subdomains.end(), [&](const auto& s) { return s.id == id; });
      if (it == subdomains.end()) throw FormatError("observations: unknown subdomain", source, row.line);
      if (value < 0.0 || value > 1.0) throw FormatError("observations: WSR outside [0, 1]", source, row.line);
      obs.wsr.push_back({time, static_cast<std::size_t>(it - subdomains.begin()), value, sigma});
    } else {
      throw FormatError("observations: kind must be 'wse' or 'wsr'", source, row.line);
    }
  }
  auto by_time = [](const auto& a, const auto& b) { return a.time < b.time; };
  if (!std::is_sorted(obs.wse.begin(), obs.wse.end(), by_time) || !std::is_sorted(obs.wsr.begin(), obs.wsr.end(), by_time))
    throw FormatError("observations: records must be sorted by time", source);
  return obs;
}

void write_wet_dry_map(std::ostream& out, const StructuredGrid& grid, std::span<const std::uint8_t> wet,
                       MapFormat format) {
  if (wet.size() != grid.cells()) throw DomainError("wet/dry map does not match the grid");
  if (format == MapFormat::pgm) out << "P2\n" << grid.nx << ' ' << grid.ny << "\n255\n";
  for (int j = grid.ny - 1; j >= 0; --j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i) out << (format == MapFormat::csv ? ',' : ' ');
      const bool w = wet[grid.index(i, j)] != 0;
      out << (format == MapFormat::pgm ? (w ? "255" : "0") : (w ? "1" : "0"));
    }
    out << '\n';
  }
}

}  // namespace floodchain::observing
