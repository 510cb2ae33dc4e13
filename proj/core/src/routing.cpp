#include "floodchain/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::routing {

RiverNetwork::RiverNetwork(std::vector<std::string> ids, const std::vector<std::string>& downstream_ids)
    : ids_(std::move(ids)) {
  const std::size_t n = ids_.size();
  if (downstream_ids.size() != n) throw DomainError("network: one downstream id is required per reach");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < n; ++r) {
    if (ids_[r].empty() || ids_[r] == "-") throw DomainError("network: invalid reach id '" + ids_[r] + "'");
    if (!index.emplace(ids_[r], r).second) throw DomainError("network: duplicate reach id '" + ids_[r] + "'");
  }

  downstream_.assign(n, -1);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& down = downstream_ids[r];
    if (down.empty() || down == "-") continue;
    const auto it = index.find(down);
    if (it == index.end()) throw DomainError("network: reach '" + ids_[r] + "' drains into unknown reach '" + down + "'");
    if (it->second == r) throw DomainError("network: reach '" + ids_[r] + "' drains into itself");
    downstream_[r] = static_cast<std::ptrdiff_t>(it->second);
  }

  // CSR upstream lists, ascending by reach index.
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t r = 0; r < n; ++r)
    if (downstream_[r] >= 0) ++counts[static_cast<std::size_t>(downstream_[r])];
  upstream_offsets_.assign(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) upstream_offsets_[r + 1] = upstream_offsets_[r] + counts[r];
  upstream_.resize(upstream_offsets_[n]);
  std::vector<std::size_t> fill(upstream_offsets_.begin(), upstream_offsets_.end() - 1);
  for (std::size_t r = 0; r < n; ++r)
    if (downstream_[r] >= 0) upstream_[fill[static_cast<std::size_t>(downstream_[r])]++] = r;

  // Kahn's algorithm, smallest index first so the order is deterministic.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  std::vector<std::size_t> pending = counts;
  for (std::size_t r = 0; r < n; ++r)
    if (pending[r] == 0) ready.push(r);
  order_.reserve(n);
  while (!ready.empty()) {
    const auto r = ready.top();
    ready.pop();
    order_.push_back(r);
    if (downstream_[r] >= 0) {
      const auto d = static_cast<std::size_t>(downstream_[r]);
      if (--pending[d] == 0) ready.push(d);
    }
  }
  if (order_.size() != n) throw DomainError("network: reach graph contains a cycle");
}

std::size_t RiverNetwork::index_of(std::string_view id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw DomainError("network: unknown reach id '" + std::string(id) + "'");
  return static_cast<std::size_t>(it - ids_.begin());
}

std::optional<std::size_t> RiverNetwork::downstream(std::size_t reach) const {
  const auto d = downstream_.at(reach);
  if (d < 0) return std::nullopt;
  return static_cast<std::size_t>(d);
}

std::span<const std::size_t> RiverNetwork::upstream(std::size_t reach) const {
  const auto begin = upstream_offsets_.at(reach);
  const auto end = upstream_offsets_.at(reach + 1);
  return std::span<const std::size_t>(upstream_).subspan(begin, end - begin);
}

std::vector<std::size_t> RiverNetwork::outlets() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < size(); ++r)
    if (downstream_[r] < 0) out.push_back(r);
  return out;
}

bool RiverNetwork::connects(std::size_t into, std::size_t from) const {
  return downstream_.at(from) == static_cast<std::ptrdiff_t>(into);
}

MuskingumCoefficients muskingum_coefficients(double k, double x, double dt) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("muskingum: k must be positive and finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("muskingum: dt must be positive and finite");
  if (!(x >= 0.0 && x <= 0.5)) throw DomainError("muskingum: x must lie in [0, 0.5]");
  const double half = 0.5 * dt;
  const double kx = k * x;
  const double denom = k * (1.0 - x) + half;
  MuskingumCoefficients c;
  c.c1 = (half - kx) / denom;
  c.c2 = (half + kx) / denom;
  c.c3 = (k * (1.0 - x) - half) / denom;
  return c;
}

namespace {

void check_params(const RiverNetwork& network, const MuskingumParams& params) {
  if (params.k.size() != network.size() || params.x.size() != network.size())
    throw DomainError("routing: Muskingum parameters must be sized to the reach count");
}

std::vector<MuskingumCoefficients> coefficients_for(const RiverNetwork& network, const MuskingumParams& params,
                                                    double dt) {
  check_params(network, params);
  std::vector<MuskingumCoefficients> c(network.size());
  for (std::size_t r = 0; r < network.size(); ++r) c[r] = muskingum_coefficients(params.k[r], params.x[r], dt);
  return c;
}

void check_vector(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) throw DomainError(std::string("routing: ") + what + " has the wrong dimension");
  for (double value : v)
    if (!std::isfinite(value)) throw DomainError(std::string("routing: ") + what + " contains a non-finite value");
}

double upstream_sum(const RiverNetwork& network, std::size_t reach, std::span<const double> q) {
  double sum = 0.0;
  for (const auto u : network.upstream(reach)) sum += q[u];
  return sum;
}

void step_into(const RiverNetwork& network, std::span<const MuskingumCoefficients> c, std::span<const double> q,
               std::span<const double> qe_now, std::span<const double> qe_next, std::span<double> out) {
  for (const auto r : network.topological_order()) {
    const double inflow_next = upstream_sum(network, r, out) + qe_next[r];
    const double inflow_now = upstream_sum(network, r, q) + qe_now[r];
    out[r] = c[r].c1 * inflow_next + c[r].c2 * inflow_now + c[r].c3 * q[r];
  }
}

}  // namespace

std::vector<std::string> validate_configuration(const RiverNetwork& network, const MuskingumParams& params,
                                                double dt) {
  const auto c = coefficients_for(network, params, dt);
  std::vector<std::string> warnings;
  for (std::size_t r = 0; r < network.size(); ++r) {
    const double lo = 2.0 * params.k[r] * params.x[r];
    const double hi = params.k[r];
    if (dt < lo || dt > hi) {
      std::ostringstream os;
      os << "reach '" << network.id(r) << "': dt=" << dt << " s outside [2kx, k] = [" << lo << ", " << hi
         << "] (C1=" << c[r].c1 << ", C3=" << c[r].c3 << ")";
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

std::vector<double> route_step(const RiverNetwork& network, const MuskingumParams& params,
                               std::span<const double> discharge, std::span<const double> lateral_now,
                               std::span<const double> lateral_next, double dt) {
  const auto n = network.size();
  check_vector(discharge, n, "discharge");
  check_vector(lateral_now, n, "lateral inflow");
  check_vector(lateral_next, n, "lateral inflow");
  const auto c = coefficients_for(network, params, dt);
  std::vector<double> out(n, 0.0);
  step_into(network, c, discharge, lateral_now, lateral_next, out);
  return out;
}

double LateralInflowSeries::step() const {
  if (times.size() < 2) throw DomainError("lateral inflow: at least two time levels are needed to define a step");
  return times[1] - times[0];
}

std::vector<double> DischargeSeries::reach_series(std::size_t reach) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row.at(reach));
  return out;
}

DischargeSeries route_hydrograph(const RiverNetwork& network, const MuskingumParams& params,
                                 const LateralInflowSeries& inflow, std::span<const double> initial_discharge) {
  const auto n = network.size();
  if (inflow.times.empty()) throw DomainError("route_hydrograph: inflow series is empty");
  if (inflow.values.size() != inflow.times.size())
    throw DomainError("route_hydrograph: inflow values/times length mismatch");
  check_vector(initial_discharge, n, "initial discharge");
  for (const auto& row : inflow.values) {
    check_vector(row, n, "lateral inflow");
    for (double v : row)
      if (v < 0.0) throw DomainError("route_hydrograph: lateral inflow must be non-negative");
  }

  DischargeSeries out;
  out.times = inflow.times;
  out.values.reserve(inflow.times.size());
  out.values.emplace_back(initial_discharge.begin(), initial_discharge.end());
  if (inflow.times.size() == 1) return out;

  const double dt = inflow.step();
  for (std::size_t t = 1; t < inflow.times.size(); ++t) {
    const double spacing = inflow.times[t] - inflow.times[t - 1];
    if (std::abs(spacing - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw DomainError("route_hydrograph: inflow times must be uniformly spaced");
  }
  for (const auto& w : validate_configuration(network, params, dt)) spdlog::warn("routing: {}", w);

  const auto c = coefficients_for(network, params, dt);
  for (std::size_t t = 1; t < inflow.times.size(); ++t) {
    std::vector<double> next(n, 0.0);
    step_into(network, c, out.values.back(), inflow.values[t - 1], inflow.values[t], next);
    out.values.push_back(std::move(next));
  }
  return out;
}

double network_storage(const RiverNetwork& network, const MuskingumParams& params,
                       std::span<const double> discharge, std::span<const double> lateral) {
  check_params(network, params);
  check_vector(discharge, network.size(), "discharge");
  check_vector(lateral, network.size(), "lateral inflow");
  double storage = 0.0;
  for (std::size_t r = 0; r < network.size(); ++r) {
    const double inflow = upstream_sum(network, r, discharge) + lateral[r];
    storage += params.k[r] * (params.x[r] * inflow + (1.0 - params.x[r]) * discharge[r]);
  }
  return storage;
}

std::pair<RiverNetwork, MuskingumParams> read_network(std::istream& in, const std::string& source) {
  std::vector<std::string> ids;
  std::vector<std::string> down;
  MuskingumParams params;
  for (const auto& row : csv::read(in)) {
    if (row.fields.size() != 4)
      throw FormatError("expected 'reach_id,downstream_id,k_seconds,x'", source, row.line);
    ids.push_back(row.fields[0]);
    down.push_back(row.fields[1]);
    params.k.push_back(csv::parse_double(row.fields[2], source, row.line));
    params.x.push_back(csv::parse_double(row.fields[3], source, row.line));
  }
  RiverNetwork network(std::move(ids), down);
  for (std::size_t r = 0; r < network.size(); ++r) muskingum_coefficients(params.k[r], params.x[r], 1.0);
  return {std::move(network), std::move(params)};
}

std::pair<RiverNetwork, MuskingumParams> read_network_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open network file", path.string());
  return read_network(in, path.string());
}

void write_network(std::ostream& out, const RiverNetwork& network, const MuskingumParams& params) {
  check_params(network, params);
  for (std::size_t r = 0; r < network.size(); ++r) {
    const auto d = network.downstream(r);
    csv::write_row(out, {network.id(r), d ? network.id(*d) : std::string("-"), csv::format(params.k[r]),
                         csv::format(params.x[r])});
  }
}

namespace {

void write_series(std::ostream& out, const RiverNetwork& network, const std::vector<double>& times,
                  const std::vector<std::vector<double>>& values) {
  std::vector<std::string> header{"time"};
  header.insert(header.end(), network.ids().begin(), network.ids().end());
  csv::write_row(out, header);
  for (std::size_t t = 0; t < times.size(); ++t) {
    std::vector<std::string> row{csv::format(times[t])};
    for (double v : values[t]) row.push_back(csv::format(v));
    csv::write_row(out, row);
  }
}

}  // namespace

LateralInflowSeries read_lateral_inflow(std::istream& in, const RiverNetwork& network, const std::string& source) {
  const auto rows = csv::read(in);
  if (rows.empty()) throw FormatError("lateral inflow: missing header", source);
  const auto& header = rows.front();
  if (header.fields.size() < 2 || header.fields.front() != "time")
    throw FormatError("lateral inflow: header must start with 'time'", source, header.line);
  std::vector<std::size_t> column_reach;
  for (std::size_t c = 1; c < header.fields.size(); ++c) column_reach.push_back(network.index_of(header.fields[c]));

  LateralInflowSeries series;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.fields.size() != header.fields.size()) throw FormatError("lateral inflow: ragged row", source, row.line);
    series.times.push_back(csv::parse_double(row.fields[0], source, row.line));
    std::vector<double> values(network.size(), 0.0);
    for (std::size_t c = 1; c < row.fields.size(); ++c)
      values[column_reach[c - 1]] = csv::parse_double(row.fields[c], source, row.line);
    series.values.push_back(std::move(values));
  }
  return series;
}

void write_lateral_inflow(std::ostream& out, const RiverNetwork& network, const LateralInflowSeries& series) {
  write_series(out, network, series.times, series.values);
}

void write_discharge(std::ostream& out, const RiverNetwork& network, const DischargeSeries& series) {
  write_series(out, network, series.times, series.values);
}

}  // namespace floodchain::routing
