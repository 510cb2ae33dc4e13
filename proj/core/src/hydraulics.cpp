#include "floodchain/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::hydraulics {

namespace {

inline double pressure(double g, double h) { return 0.5 * g * h * h; }

struct Flux {
  double mass;
  double normal;      // normal momentum
  double transverse;  // transverse momentum
};

// Local Lax-Friedrichs flux between two (reconstructed) states expressed in
// face-normal / face-tangential velocity components.
inline Flux rusanov(double hl, double ul, double vl, double hr, double ur, double vr, double a, double g) {
  const double ql = hl * ul;
  const double qr = hr * ur;
  Flux f;
  f.mass = 0.5 * (ql + qr) - 0.5 * a * (hr - hl);
  f.normal = 0.5 * (ql * ul + pressure(g, hl) + qr * ur + pressure(g, hr)) - 0.5 * a * (qr - ql);
  f.transverse = 0.5 * (ql * vl + qr * vr) - 0.5 * a * (hr * vr - hl * vl);
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid, state, friction, boundary data

std::vector<int> StructuredGrid::subdomain_ids() const {
  std::set<int> ids;
  for (int s : subdomain)
    if (s >= 0) ids.insert(s);
  return {ids.begin(), ids.end()};
}

void StructuredGrid::validate() const {
  if (nx <= 0 || ny <= 0) throw DomainError("grid: nx and ny must be positive");
  if (!(dx > 0.0) || !(dy > 0.0)) throw DomainError("grid: dx and dy must be positive");
  const auto n = cells();
  if (z.size() != n || friction_zone.size() != n || subdomain.size() != n)
    throw DomainError("grid: per-cell arrays must have nx*ny entries");
  for (double value : z)
    if (!std::isfinite(value)) throw DomainError("grid: bed elevation must be finite");
}

HydraulicState HydraulicState::dry(const StructuredGrid& grid, double t) {
  HydraulicState s;
  s.h.assign(grid.cells(), 0.0);
  s.qx.assign(grid.cells(), 0.0);
  s.qy.assign(grid.cells(), 0.0);
  s.t = t;
  return s;
}

HydraulicState HydraulicState::lake(const StructuredGrid& grid, double level, double t) {
  auto s = dry(grid, t);
  for (std::size_t c = 0; c < grid.cells(); ++c) s.h[c] = std::max(0.0, level - grid.z[c]);
  return s;
}

double HydraulicState::volume(const StructuredGrid& grid) const {
  double sum = 0.0;
  for (double depth : h) sum += depth;
  return sum * grid.cell_area();
}

double FrictionField::coefficient(int zone) const {
  for (std::size_t k = 0; k < zones.size(); ++k)
    if (zones[k] == zone) return strickler[k];
  throw DomainError("friction: no coefficient for zone " + std::to_string(zone));
}

void FrictionField::validate() const {
  if (zones.size() != strickler.size()) throw DomainError("friction: one coefficient per zone is required");
  if (!(k_min > 0.0) || !(k_min < k_max)) throw DomainError("friction: bounds must satisfy 0 < K_min < K_max");
  for (double k : strickler)
    if (!(k >= k_min && k <= k_max)) throw DomainError("friction: Strickler coefficient outside [K_min, K_max]");
}

double Hydrograph::at(double t) const {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return values[k - 1] + w * (values[k] - values[k - 1]);
}

double Hydrograph::volume(double t0, double t1) const {
  if (t1 <= t0 || times.empty()) return 0.0;
  // Integrate piecewise over knots inside (t0, t1).
  double total = 0.0;
  double a = t0;
  double qa = at(t0);
  auto it = std::upper_bound(times.begin(), times.end(), t0);
  while (it != times.end() && *it < t1) {
    const double qb = at(*it);
    total += 0.5 * (qa + qb) * (*it - a);
    a = *it;
    qa = qb;
    ++it;
  }
  total += 0.5 * (qa + at(t1)) * (t1 - a);
  return total;
}

double Hydrograph::peak() const {
  if (values.empty()) return 0.0;
  return *std::max_element(values.begin(), values.end());
}

void Hydrograph::validate() const {
  if (times.size() != values.size()) throw DomainError("hydrograph: times/values length mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || !std::isfinite(values[k])) throw DomainError("hydrograph: non-finite entry");
    if (values[k] < 0.0) throw DomainError("hydrograph: discharge must be non-negative");
    if (k && !(times[k] > times[k - 1])) throw DomainError("hydrograph: times must be strictly increasing");
  }
}

double RatingCurve::stage(double discharge) const { return z0 + a * std::pow(std::max(discharge, 0.0), b); }

double BoundaryConditions::inflow_at(double t) const { return inflow_scale * inflow.at(t); }

void BoundaryConditions::validate(const StructuredGrid& grid) const {
  inflow.validate();
  if (!(inflow_scale >= 0.0) || !std::isfinite(inflow_scale)) throw DomainError("bc: inflow scale must be >= 0");
  for (int j : inlet_rows)
    if (j < 0 || j >= grid.ny) throw DomainError("bc: inlet row outside grid");
  for (int j : outlet_rows)
    if (j < 0 || j >= grid.ny) throw DomainError("bc: outlet row outside grid");
  if (const auto* rc = std::get_if<RatingCurve>(&outlet)) {
    if (!(rc->a > 0.0) || !(rc->b > 0.0)) throw DomainError("bc: rating curve must be increasing (a, b > 0)");
  }
}

// ---------------------------------------------------------------------------
// Time step control

double stable_dt(const StructuredGrid& grid, const HydraulicState& state, double cfl, const SolverOptions& options) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("stable_dt: cfl must lie in (0, 1]");
  const double g = options.gravity;
  double max_speed = 0.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double h = state.h[c];
    if (h < options.dry_threshold) continue;
    const double speed = std::hypot(state.qx[c], state.qy[c]) / h + std::sqrt(g * h);
    max_speed = std::max(max_speed, speed);
  }
  if (max_speed <= 0.0) return options.dt_max;
  return std::min(options.dt_max, cfl * std::min(grid.dx, grid.dy) / max_speed);
}

// ---------------------------------------------------------------------------
// Solver

SweSolver::SweSolver(const StructuredGrid& grid, const BoundaryConditions& bc, const FrictionField& friction,
                     SolverOptions options)
    : grid_(grid), bc_(bc), options_(options) {
  grid_.validate();
  friction.validate();
  bc_.validate(grid_);
  const auto n = grid_.cells();
  manning_factor_.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double k = friction.coefficient(grid_.friction_zone[c]);
    manning_factor_[c] = options_.gravity / (k * k);
  }
  inlet_row_.assign(static_cast<std::size_t>(grid_.ny), 0);
  outlet_row_.assign(static_cast<std::size_t>(grid_.ny), 0);
  for (int j : bc_.inlet_rows) inlet_row_[static_cast<std::size_t>(j)] = 1;
  for (int j : bc_.outlet_rows) outlet_row_[static_cast<std::size_t>(j)] = 1;
  u_.resize(n);
  v_.resize(n);
  c_.resize(n);
  dh_.resize(n);
  dqx_.resize(n);
  dqy_.resize(n);
}

void SweSolver::check_state(const HydraulicState& state) const {
  const auto n = grid_.cells();
  if (state.h.size() != n || state.qx.size() != n || state.qy.size() != n)
    throw DomainError("swe: state arrays must match the grid");
}

double SweSolver::stable_dt(const HydraulicState& state) const {
  double dt = hydraulics::stable_dt(grid_, state, options_.cfl, options_);
  const auto inlets = bc_.inlet_rows.size();
  if (inlets == 0) return dt;
  const double g = options_.gravity;
  const double q_in = bc_.inflow_at(state.t) / (static_cast<double>(inlets) * grid_.dy);
  if (q_in <= 0.0) return dt;
  const double h_crit = std::cbrt(q_in * q_in / g);
  for (int j : bc_.inlet_rows) {
    const double h = std::max(state.h[grid_.index(0, j)], h_crit);
    const double speed = q_in / h + std::sqrt(g * h);
    dt = std::min(dt, options_.cfl * std::min(grid_.dx, grid_.dy) / speed);
  }
  return dt;
}

StepReport SweSolver::step(HydraulicState& state, double dt) {
  check_state(state);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("swe: dt must be positive");

  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const auto n = grid_.cells();
  const double g = options_.gravity;
  const double eps = options_.dry_threshold;
  const double inv_dx = 1.0 / grid_.dx;
  const double inv_dy = 1.0 / grid_.dy;
  const auto& z = grid_.z;
  const auto& h = state.h;

  for (std::size_t c = 0; c < n; ++c) {
    const double depth = h[c];
    if (depth >= eps) {
      u_[c] = state.qx[c] / depth;
      v_[c] = state.qy[c] / depth;
    } else {
      u_[c] = 0.0;
      v_[c] = 0.0;
    }
    c_[c] = std::sqrt(g * depth);
  }
  std::fill(dh_.begin(), dh_.end(), 0.0);
  std::fill(dqx_.begin(), dqx_.end(), 0.0);
  std::fill(dqy_.begin(), dqy_.end(), 0.0);

  // Interior x-faces. Momentum contributions subtract the pressure of the
  // reconstructed depth on each side; the cell's own pressure cancels between
  // its two faces, which is what makes the lake at rest exact.
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = grid_.index(0, j);
    for (int i = 1; i < nx; ++i) {
      const std::size_t l = row + static_cast<std::size_t>(i - 1);
      const std::size_t r = l + 1;
      const double hl = h[l];
      const double hr = h[r];
      if (hl < eps && hr < eps) continue;
      const double zs = std::max(z[l], z[r]);
      const double hls = std::max(0.0, hl + z[l] - zs);
      const double hrs = std::max(0.0, hr + z[r] - zs);
      const double a = std::max(std::abs(u_[l]) + c_[l], std::abs(u_[r]) + c_[r]);
      const Flux f = rusanov(hls, u_[l], v_[l], hrs, u_[r], v_[r], a, g);
      dh_[l] -= f.mass * inv_dx;
      dh_[r] += f.mass * inv_dx;
      dqx_[l] -= (f.normal - pressure(g, hls)) * inv_dx;
      dqx_[r] += (f.normal - pressure(g, hrs)) * inv_dx;
      dqy_[l] -= f.transverse * inv_dx;
      dqy_[r] += f.transverse * inv_dx;
    }
  }

  // Interior y-faces (normal component is v).
  for (int j = 1; j < ny; ++j) {
    const std::size_t row_b = grid_.index(0, j - 1);
    const std::size_t row_t = grid_.index(0, j);
    for (int i = 0; i < nx; ++i) {
      const std::size_t b = row_b + static_cast<std::size_t>(i);
      const std::size_t t = row_t + static_cast<std::size_t>(i);
      const double hb = h[b];
      const double ht = h[t];
      if (hb < eps && ht < eps) continue;
      const double zs = std::max(z[b], z[t]);
      const double hbs = std::max(0.0, hb + z[b] - zs);
      const double hts = std::max(0.0, ht + z[t] - zs);
      const double a = std::max(std::abs(v_[b]) + c_[b], std::abs(v_[t]) + c_[t]);
      const Flux f = rusanov(hbs, v_[b], u_[b], hts, v_[t], u_[t], a, g);
      dh_[b] -= f.mass * inv_dy;
      dh_[t] += f.mass * inv_dy;
      dqy_[b] -= (f.normal - pressure(g, hbs)) * inv_dy;
      dqy_[t] += (f.normal - pressure(g, hts)) * inv_dy;
      dqx_[b] -= f.transverse * inv_dy;
      dqx_[t] += f.transverse * inv_dy;
    }
  }

  StepReport report;

  // West edge: prescribed discharge on inlet rows, walls elsewhere.
  const auto inlets = bc_.inlet_rows.size();
  const double q_avg = inlets ? 0.5 * (bc_.inflow_at(state.t) + bc_.inflow_at(state.t + dt)) : 0.0;
  const double q_in = inlets ? q_avg / (static_cast<double>(inlets) * grid_.dy) : 0.0;
  for (int j = 0; j < ny; ++j) {
    const std::size_t c = grid_.index(0, j);
    const double hc = h[c];
    if (inlet_row_[static_cast<std::size_t>(j)]) {
      double normal = pressure(g, hc);
      if (q_in > 0.0) {
        const double hf = std::max(hc, std::cbrt(q_in * q_in / g));
        normal = q_in * q_in / hf + pressure(g, hf);
      }
      dh_[c] += q_in * inv_dx;
      dqx_[c] += (normal - pressure(g, hc)) * inv_dx;
    } else if (hc > 0.0) {
      const double a = std::abs(u_[c]) + c_[c];
      const Flux f = rusanov(hc, -u_[c], v_[c], hc, u_[c], v_[c], a, g);
      dqx_[c] += (f.normal - pressure(g, hc)) * inv_dx;
      dqy_[c] += f.transverse * inv_dx;
    }
  }
  report.inflow_volume = q_avg * dt;

  // East edge: stage condition on outlet rows, walls elsewhere.
  double outlet_stage = 0.0;
  if (!bc_.outlet_rows.empty()) {
    if (const auto* rc = std::get_if<RatingCurve>(&bc_.outlet)) {
      double q_out = 0.0;
      for (int j : bc_.outlet_rows) q_out += state.qx[grid_.index(nx - 1, j)];
      outlet_stage = rc->stage(q_out * grid_.dy);
    } else {
      outlet_stage = std::get<FixedStage>(bc_.outlet).stage;
    }
  }
  double outflow_rate = 0.0;
  for (int j = 0; j < ny; ++j) {
    const std::size_t c = grid_.index(nx - 1, j);
    const double hc = h[c];
    if (outlet_row_[static_cast<std::size_t>(j)]) {
      const double hg = std::max(0.0, outlet_stage - z[c]);
      if (hc <= 0.0 && hg <= 0.0) continue;
      const double a = std::abs(u_[c]) + std::max(c_[c], std::sqrt(g * hg));
      const Flux f = rusanov(hc, u_[c], v_[c], hg, u_[c], v_[c], a, g);
      dh_[c] -= f.mass * inv_dx;
      dqx_[c] -= (f.normal - pressure(g, hc)) * inv_dx;
      dqy_[c] -= f.transverse * inv_dx;
      outflow_rate += f.mass * grid_.dy;
    } else if (hc > 0.0) {
      const double a = std::abs(u_[c]) + c_[c];
      const Flux f = rusanov(hc, u_[c], v_[c], hc, -u_[c], v_[c], a, g);
      dqx_[c] -= (f.normal - pressure(g, hc)) * inv_dx;
      dqy_[c] -= f.transverse * inv_dx;
    }
  }
  report.outflow_volume = outflow_rate * dt;

  // South and north walls.
  for (int i = 0; i < nx; ++i) {
    const std::size_t s = grid_.index(i, 0);
    if (h[s] > 0.0) {
      const double a = std::abs(v_[s]) + c_[s];
      const Flux f = rusanov(h[s], -v_[s], u_[s], h[s], v_[s], u_[s], a, g);
      dqy_[s] += (f.normal - pressure(g, h[s])) * inv_dy;
      dqx_[s] += f.transverse * inv_dy;
    }
    const std::size_t t = grid_.index(i, ny - 1);
    if (h[t] > 0.0) {
      const double a = std::abs(v_[t]) + c_[t];
      const Flux f = rusanov(h[t], v_[t], u_[t], h[t], -v_[t], u_[t], a, g);
      dqy_[t] -= (f.normal - pressure(g, h[t])) * inv_dy;
      dqx_[t] -= f.transverse * inv_dy;
    }
  }

  // Update, then semi-implicit friction: q / (1 + dt g n^2 |q| / h^(7/3)).
  bool finite = true;
  for (std::size_t c = 0; c < n; ++c) {
    double depth = state.h[c] + dt * dh_[c];
    if (depth < 0.0) depth = 0.0;
    double qx = state.qx[c] + dt * dqx_[c];
    double qy = state.qy[c] + dt * dqy_[c];
    if (depth < eps) {
      qx = 0.0;
      qy = 0.0;
    } else {
      const double qn = std::hypot(qx, qy);
      if (qn > 0.0) {
        const double denom = 1.0 + dt * manning_factor_[c] * qn / (depth * depth * std::cbrt(depth));
        qx /= denom;
        qy /= denom;
      }
    }
    state.h[c] = depth;
    state.qx[c] = qx;
    state.qy[c] = qy;
    finite = finite && std::isfinite(depth) && std::isfinite(qx) && std::isfinite(qy);
  }
  state.t += dt;

  if (!finite) {
    for (std::size_t c = 0; c < n; ++c) {
      const char* field = !std::isfinite(state.h[c]) ? "h" : !std::isfinite(state.qx[c]) ? "qx"
                          : !std::isfinite(state.qy[c]) ? "qy" : nullptr;
      if (field) {
        const int i = static_cast<int>(c % static_cast<std::size_t>(nx));
        const int j = static_cast<int>(c / static_cast<std::size_t>(nx));
        throw InstabilityError(state.t, i, j, field);
      }
    }
  }
  return report;
}

HydraulicState swe_step(const StructuredGrid& grid, const HydraulicState& state, const BoundaryConditions& bc,
                        const FrictionField& friction, double dt, const SolverOptions& options) {
  SweSolver solver(grid, bc, friction, options);
  HydraulicState next = state;
  solver.step(next, dt);
  return next;
}

// ---------------------------------------------------------------------------
// Driver

Trajectory simulate(const StructuredGrid& grid, const HydraulicState& state0, const BoundaryConditions& bc,
                    const FrictionField& friction, double t_end, std::span<const double> output_times,
                    const SolverOptions& options) {
  if (!(t_end >= state0.t)) throw DomainError("simulate: t_end precedes the initial time");
  for (std::size_t k = 0; k < output_times.size(); ++k) {
    if (output_times[k] < state0.t || output_times[k] > t_end)
      throw DomainError("simulate: output time outside [t0, t_end]");
    if (k && output_times[k] < output_times[k - 1]) throw DomainError("simulate: output times must be sorted");
  }

  SweSolver solver(grid, bc, friction, options);
  Trajectory traj;
  traj.snapshots.reserve(output_times.size());

  // Every time the stepping must land on exactly.
  std::vector<double> stops(output_times.begin(), output_times.end());
  for (double t : bc.inflow.times)
    if (t > state0.t && t < t_end) stops.push_back(t);
  stops.push_back(t_end);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  HydraulicState state = state0;
  std::size_t next_output = 0;
  auto emit = [&]() {
    while (next_output < output_times.size() && output_times[next_output] == state.t) {
      traj.snapshots.push_back(state);
      ++next_output;
    }
  };
  emit();

  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= state.t) ++next_stop;
  while (state.t < t_end) {
    const double target = stops[next_stop];
    double dt = solver.stable_dt(state);
    const double remaining = target - state.t;
    const bool lands = dt >= remaining;
    if (lands) dt = remaining;
    const auto report = solver.step(state, dt);
    traj.inflow_volume += report.inflow_volume;
    traj.outflow_volume += report.outflow_volume;
    ++traj.steps;
    if (lands) {
      state.t = target;
      ++next_stop;
      emit();
    }
  }
  return traj;
}

HydraulicState apply_state_correction(const HydraulicState& state, const StructuredGrid& grid,
                                      const std::map<int, double>& delta_h, double dry_threshold) {
  const auto known = grid.subdomain_ids();
  for (const auto& [id, offset] : delta_h) {
    if (!std::binary_search(known.begin(), known.end(), id))
      throw DomainError("state correction: unknown subdomain id " + std::to_string(id));
    if (!std::isfinite(offset)) throw DomainError("state correction: offsets must be finite");
  }
  HydraulicState out = state;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const int s = grid.subdomain[c];
    if (s < 0) continue;
    const auto it = delta_h.find(s);
    if (it == delta_h.end()) continue;
    const double depth = std::max(0.0, state.h[c] + it->second);
    out.h[c] = depth;
    if (depth < dry_threshold) {
      out.qx[c] = 0.0;
      out.qy[c] = 0.0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

StructuredGrid read_grid(std::istream& in, const std::string& source) {
  const auto rows = csv::read(in);
  if (rows.size() < 3) throw FormatError("grid: missing header", source);
  if (rows[0].fields != std::vector<std::string>{"nx", "ny", "dx", "dy"})
    throw FormatError("grid: first line must be 'nx,ny,dx,dy'", source, rows[0].line);
  if (rows[1].fields.size() != 4) throw FormatError("grid: expected nx,ny,dx,dy values", source, rows[1].line);
  StructuredGrid grid;
  grid.nx = static_cast<int>(csv::parse_int(rows[1].fields[0], source, rows[1].line));
  grid.ny = static_cast<int>(csv::parse_int(rows[1].fields[1], source, rows[1].line));
  grid.dx = csv::parse_double(rows[1].fields[2], source, rows[1].line);
  grid.dy = csv::parse_double(rows[1].fields[3], source, rows[1].line);
  if (grid.nx <= 0 || grid.ny <= 0) throw FormatError("grid: nx and ny must be positive", source, rows[1].line);
  if (rows[2].fields != std::vector<std::string>{"i", "j", "z", "friction_zone", "subdomain_id"})
    throw FormatError("grid: expected 'i,j,z,friction_zone,subdomain_id' header", source, rows[2].line);

  const auto n = static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  grid.z.assign(n, 0.0);
  grid.friction_zone.assign(n, 0);
  grid.subdomain.assign(n, -1);
  std::vector<char> seen(n, 0);
  for (std::size_t k = 3; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.fields.size() != 5) throw FormatError("grid: expected 5 fields per cell", source, row.line);
    const int i = static_cast<int>(csv::parse_int(row.fields[0], source, row.line));
    const int j = static_cast<int>(csv::parse_int(row.fields[1], source, row.line));
    if (!grid.contains(i, j)) throw FormatError("grid: cell index outside grid", source, row.line);
    const auto c = grid.index(i, j);
    if (seen[c]) throw FormatError("grid: duplicate cell", source, row.line);
    seen[c] = 1;
    grid.z[c] = csv::parse_double(row.fields[2], source, row.line);
    grid.friction_zone[c] = static_cast<int>(csv::parse_int(row.fields[3], source, row.line));
    grid.subdomain[c] = static_cast<int>(csv::parse_int(row.fields[4], source, row.line));
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw FormatError("grid: missing cells", source);
  grid.validate();
  return grid;
}

StructuredGrid read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open grid file", path.string());
  return read_grid(in, path.string());
}

void write_grid(std::ostream& out, const StructuredGrid& grid) {
  csv::write_row(out, {"nx", "ny", "dx", "dy"});
  csv::write_row(out, {std::to_string(grid.nx), std::to_string(grid.ny), csv::format(grid.dx), csv::format(grid.dy)});
  csv::write_row(out, {"i", "j", "z", "friction_zone", "subdomain_id"});
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const auto c = grid.index(i, j);
      csv::write_row(out, {std::to_string(i), std::to_string(j), csv::format(grid.z[c]),
                           std::to_string(grid.friction_zone[c]), std::to_string(grid.subdomain[c])});
    }
}

HydraulicState read_state(std::istream& in, const StructuredGrid& grid, const std::string& source) {
  const auto rows = csv::read(in);
  if (rows.size() < 2 || rows[0].fields.size() != 2 || rows[0].fields[0] != "time")
    throw FormatError("state: first line must be 'time,<seconds>'", source);
  auto state = HydraulicState::dry(grid, csv::parse_double(rows[0].fields[1], source, rows[0].line));
  if (rows[1].fields != std::vector<std::string>{"i", "j", "h", "qx", "qy"})
    throw FormatError("state: expected 'i,j,h,qx,qy' header", source, rows[1].line);
  if (rows.size() - 2 != grid.cells()) throw FormatError("state: cell count does not match the grid", source);
  for (std::size_t k = 2; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (row.fields.size() != 5) throw FormatError("state: expected 5 fields per cell", source, row.line);
    const int i = static_cast<int>(csv::parse_int(row.fields[0], source, row.line));
    const int j = static_cast<int>(csv::parse_int(row.fields[1], source, row.line));
    if (!grid.contains(i, j)) throw FormatError("state: cell index outside grid", source, row.line);
    const auto c = grid.index(i, j);
    state.h[c] = csv::parse_double(row.fields[2], source, row.line);
    state.qx[c] = csv::parse_double(row.fields[3], source, row.line);
    state.qy[c] = csv::parse_double(row.fields[4], source, row.line);
    if (state.h[c] < 0.0) throw FormatError("state: negative depth", source, row.line);
  }
  return state;
}

void write_state(std::ostream& out, const StructuredGrid& grid, const HydraulicState& state) {
  csv::write_row(out, {"time", csv::format(state.t)});
  csv::write_row(out, {"i", "j", "h", "qx", "qy"});
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const auto c = grid.index(i, j);
      csv::write_row(out, {std::to_string(i), std::to_string(j), csv::format(state.h[c]), csv::format(state.qx[c]),
                           csv::format(state.qy[c])});
    }
}

Hydrograph read_hydrograph(std::istream& in, const std::string& source) {
  Hydrograph hg;
  for (const auto& row : csv::read(in)) {
    if (row.fields.size() != 2) throw FormatError("hydrograph: expected 'time,discharge'", source, row.line);
    if (row.fields[0] == "time") continue;
    hg.times.push_back(csv::parse_double(row.fields[0], source, row.line));
    hg.values.push_back(csv::parse_double(row.fields[1], source, row.line));
  }
  hg.validate();
  return hg;
}

void write_hydrograph(std::ostream& out, const Hydrograph& hydrograph) {
  csv::write_row(out, {"time", "discharge"});
  for (std::size_t k = 0; k < hydrograph.times.size(); ++k)
    csv::write_row(out, {csv::format(hydrograph.times[k]), csv::format(hydrograph.values[k])});
}

}  // namespace floodchain::hydraulics
