#pragma once

// Matrix-form Muskingum routing over a river network.
//
// With per-reach coefficient diagonals C1, C2, C3 and the connectivity matrix N
// (N[i][j] = 1 iff reach j discharges into reach i) one routing step solves
//
//   (I - C1 N) Q(t+dt) = C1 Qe(t+dt) + C2 (N Q(t) + Qe(t)) + C3 Q(t).
//
// N is strictly lower-triangular under the network's topological order, so the
// system is solved exactly by forward substitution.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace floodchain::routing {

class RiverNetwork {
 public:
  RiverNetwork() = default;

  // `downstream_ids[r]` names the reach that reach r drains into; "-" or an
  // empty string marks an outlet. Throws DomainError on duplicate ids, unknown
  // downstream ids, self loops or cycles.
  RiverNetwork(std::vector<std::string> ids, const std::vector<std::string>& downstream_ids);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::string& id(std::size_t reach) const { return ids_.at(reach); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::size_t index_of(std::string_view id) const;

  std::optional<std::size_t> downstream(std::size_t reach) const;
  // Reaches discharging directly into `reach`, ascending index order.
  std::span<const std::size_t> upstream(std::size_t reach) const;
  // Every reach appears after all reaches upstream of it.
  std::span<const std::size_t> topological_order() const noexcept { return order_; }
  std::vector<std::size_t> outlets() const;

  // Entry N[into][from] of the connectivity matrix.
  bool connects(std::size_t into, std::size_t from) const;

 private:
  std::vector<std::string> ids_;
  std::vector<std::ptrdiff_t> downstream_;  // -1 for outlets
  std::vector<std::size_t> upstream_offsets_;
  std::vector<std::size_t> upstream_;
  std::vector<std::size_t> order_;
};

struct MuskingumParams {
  std::vector<double> k;  // storage constant per reach [s]
  std::vector<double> x;  // weighting factor per reach [-]
};

struct MuskingumCoefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

// Requires k > 0, dt > 0 and 0 <= x <= 0.5; throws DomainError otherwise.
MuskingumCoefficients muskingum_coefficients(double k, double x, double dt);

// Checks parameter sizes and ranges and returns human-readable warnings for
// reaches where dt lies outside [2kx, k] (a coefficient may go negative).
std::vector<std::string> validate_configuration(const RiverNetwork& network, const MuskingumParams& params,
                                                double dt);

std::vector<double> route_step(const RiverNetwork& network, const MuskingumParams& params,
                               std::span<const double> discharge, std::span<const double> lateral_now,
                               std::span<const double> lateral_next, double dt);

// Uniformly spaced external inflow; values[n][reach] at times[n].
struct LateralInflowSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  double step() const;
};

// Discharge per reach at each time; values[0] is the initial condition.
struct DischargeSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  std::vector<double> reach_series(std::size_t reach) const;
};

DischargeSeries route_hydrograph(const RiverNetwork& network, const MuskingumParams& params,
                                 const LateralInflowSeries& inflow, std::span<const double> initial_discharge);

// Storage k [x I + (1 - x) O] summed over the network, where I is the reach
// inflow (upstream discharge plus lateral inflow) and O the reach outflow.
double network_storage(const RiverNetwork& network, const MuskingumParams& params,
                       std::span<const double> discharge, std::span<const double> lateral);

// Network file: one line per reach "reach_id,downstream_id,k_seconds,x" with
// "-" as the downstream id of outlets.
std::pair<RiverNetwork, MuskingumParams> read_network(std::istream& in, const std::string& source = {});
std::pair<RiverNetwork, MuskingumParams> read_network_file(const std::filesystem::path& path);
void write_network(std::ostream& out, const RiverNetwork& network, const MuskingumParams& params);

// Header "time,<reach ids...>", then one row per time step.
LateralInflowSeries read_lateral_inflow(std::istream& in, const RiverNetwork& network,
                                        const std::string& source = {});
void write_lateral_inflow(std::ostream& out, const RiverNetwork& network, const LateralInflowSeries& series);
void write_discharge(std::ostream& out, const RiverNetwork& network, const DischargeSeries& series);

}  // namespace floodchain::routing
