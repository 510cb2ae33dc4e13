#pragma once

// Observation operators for the twin experiments: water surface elevation at
// gauge cells and wet surface ratios (WSR) over floodplain subdomains.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "floodchain/hydraulics.hpp"

namespace floodchain::observing {

using hydraulics::HydraulicState;
using hydraulics::StructuredGrid;

struct GaugeStation {
  std::string name;
  int i = 0;
  int j = 0;
  double sigma = 0.05;  // observation error std [m]
};

struct FloodplainSubdomain {
  int id = 0;
  std::vector<std::size_t> cells;
  double sigma = 0.05;  // WSR error std
};

void validate_station(const GaugeStation& station, const StructuredGrid& grid);
void validate_subdomains(std::span<const FloodplainSubdomain> subdomains, const StructuredGrid& grid);

// One subdomain per distinct subdomain id of the grid, ascending id order.
std::vector<FloodplainSubdomain> subdomains_from_grid(const StructuredGrid& grid, double sigma);

struct WseReading {
  double value = 0.0;
  bool dry = false;  // the cell was dry; value is the bed elevation
};

WseReading extract_wse(const HydraulicState& state, const StructuredGrid& grid, const GaugeStation& station,
                       double dry_threshold = 1e-4);

// 1 where h >= threshold.
std::vector<std::uint8_t> wet_dry_map(const HydraulicState& state, const StructuredGrid& grid, double threshold);

// Area-weighted wet fraction of the subdomain.
double wsr(const HydraulicState& state, const StructuredGrid& grid, const FloodplainSubdomain& subdomain,
           double threshold);

struct WseObservation {
  double time = 0.0;
  std::size_t station = 0;  // index into the station list
  double value = 0.0;
  double sigma = 0.0;
  bool dry = false;

  bool operator==(const WseObservation&) const = default;
};

struct WsrObservation {
  double time = 0.0;
  std::size_t subdomain = 0;  // index into the subdomain list
  double value = 0.0;
  double sigma = 0.0;

  bool operator==(const WsrObservation&) const = default;
};

struct ObservationSet {
  std::vector<WseObservation> wse;
  std::vector<WsrObservation> wsr;

  bool empty() const noexcept { return wse.empty() && wsr.empty(); }
  // Records with t0 < time <= t1.
  ObservationSet window(double t0, double t1) const;
  // Distinct observation times, sorted.
  std::vector<double> wse_times() const;
  std::vector<double> wsr_times() const;

  bool operator==(const ObservationSet&) const = default;
};

struct SynthesisOptions {
  double noise_std_wse = 0.05;
  double noise_std_wsr = 0.05;
  double wet_threshold = 1e-4;
  double dry_threshold = 1e-4;
  std::uint64_t seed = 1;
};

// Extracts truth observables from trajectory snapshots at the requested times
// and adds Gaussian noise; WSR values are clipped to [0, 1]. Throws DomainError
// if a requested time has no snapshot.
ObservationSet synthesize_observations(std::span<const HydraulicState> truth, const StructuredGrid& grid,
                                       std::span<const GaugeStation> stations,
                                       std::span<const FloodplainSubdomain> subdomains,
                                       std::span<const double> wse_times, std::span<const double> wsr_times,
                                       const SynthesisOptions& options);

// Stations: "name,i,j,sigma". Subdomains: "id,sigma" (cells come from the grid).
std::vector<GaugeStation> read_stations(std::istream& in, const StructuredGrid& grid, const std::string& source = {});
void write_stations(std::ostream& out, std::span<const GaugeStation> stations);
std::vector<FloodplainSubdomain> read_subdomains(std::istream& in, const StructuredGrid& grid,
                                                 const std::string& source = {});
void write_subdomains(std::ostream& out, std::span<const FloodplainSubdomain> subdomains);

// "kind,time,target,value,sigma,dry" with kind in {wse, wsr}; target is the
// station name or the subdomain id.
void write_observations(std::ostream& out, const ObservationSet& obs, std::span<const GaugeStation> stations,
                        std::span<const FloodplainSubdomain> subdomains);
ObservationSet read_observations(std::istream& in, std::span<const GaugeStation> stations,
                                 std::span<const FloodplainSubdomain> subdomains, const std::string& source = {});

enum class MapFormat { csv, pgm };

// CSV: ny rows of nx 0/1 values, north row first. PGM: plain P2 grey map with
// 255 = wet, same orientation.
void write_wet_dry_map(std::ostream& out, const StructuredGrid& grid, std::span<const std::uint8_t> wet,
                       MapFormat format);

}  // namespace floodchain::observing
