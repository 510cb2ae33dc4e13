#pragma once

// First-order explicit finite-volume shallow-water solver on a structured grid.
//
// Interface fluxes use the local Lax-Friedrichs (Rusanov) flux on
// hydrostatically reconstructed depths, which keeps a lake at rest exactly at
// rest and keeps depths non-negative for cfl <= 0.5. Manning/Strickler friction
// is applied as a semi-implicit source after the flux update.
//
// Cell (i, j) has index j * nx + i; i runs along x (west -> east), j along y
// (south -> north). The west and east edges carry the inflow and outlet
// boundaries, every other boundary face is a reflective wall.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace floodchain::hydraulics {

struct StructuredGrid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> z;            // bed elevation [m]
  std::vector<int> friction_zone;   // zone id per cell
  std::vector<int> subdomain;       // floodplain subdomain id, -1 for none

  std::size_t cells() const noexcept { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  bool contains(int i, int j) const noexcept { return i >= 0 && i < nx && j >= 0 && j < ny; }
  double cell_area() const noexcept { return dx * dy; }

  // Sorted distinct subdomain ids (excluding -1).
  std::vector<int> subdomain_ids() const;
  void validate() const;
};

struct HydraulicState {
  std::vector<double> h;   // depth [m]
  std::vector<double> qx;  // unit discharge along x [m^2/s]
  std::vector<double> qy;  // unit discharge along y [m^2/s]
  double t = 0.0;          // [s]

  static HydraulicState dry(const StructuredGrid& grid, double t = 0.0);
  // Still water at elevation `level` (dry where the bed is above it).
  static HydraulicState lake(const StructuredGrid& grid, double level, double t = 0.0);

  double volume(const StructuredGrid& grid) const;
};

struct FrictionField {
  std::vector<int> zones;
  std::vector<double> strickler;  // [m^(1/3)/s], one per zone
  double k_min = 1.0;
  double k_max = 200.0;

  double coefficient(int zone) const;
  void validate() const;
};

// Piecewise-linear discharge time series [s, m^3/s]; constant beyond its ends.
struct Hydrograph {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;
  // Exact integral of the piecewise-linear series over [t0, t1].
  double volume(double t0, double t1) const;
  double peak() const;
  void validate() const;
};

// stage = z0 + a * Q^b
struct RatingCurve {
  double a = 1.0;
  double b = 0.6;
  double z0 = 0.0;

  double stage(double discharge) const;
};

struct FixedStage {
  double stage = 0.0;
};

struct BoundaryConditions {
  std::vector<int> inlet_rows;   // west-edge rows receiving the inflow
  Hydrograph inflow;
  double inflow_scale = 1.0;     // multiplies the hydrograph
  std::vector<int> outlet_rows;  // east-edge rows with a stage condition
  std::variant<RatingCurve, FixedStage> outlet = RatingCurve{};

  double inflow_at(double t) const;
  void validate(const StructuredGrid& grid) const;
};

struct SolverOptions {
  double gravity = 9.81;
  double dry_threshold = 1e-4;  // cells with h below this carry no momentum
  double cfl = 0.45;
  double dt_max = 60.0;
};

// cfl * min over wet cells of min(dx, dy) / (|u| + sqrt(g h)); dt_max when
// nothing is wet.
double stable_dt(const StructuredGrid& grid, const HydraulicState& state, double cfl,
                 const SolverOptions& options = {});

struct StepReport {
  double inflow_volume = 0.0;   // through inlet faces [m^3]
  double outflow_volume = 0.0;  // through outlet faces [m^3], negative if water entered
};

// Reusable solver with preallocated work arrays. Grid and boundary conditions
// are borrowed and must outlive the solver; friction is copied into per-cell
// factors.
class SweSolver {
 public:
  SweSolver(const StructuredGrid& grid, const BoundaryConditions& bc, const FrictionField& friction,
            SolverOptions options = {});
  SweSolver(StructuredGrid&&, const BoundaryConditions&, const FrictionField&, SolverOptions = {}) = delete;
  SweSolver(const StructuredGrid&, BoundaryConditions&&, const FrictionField&, SolverOptions = {}) = delete;

  // Advances `state` in place by dt. Throws InstabilityError if any value
  // becomes non-finite.
  StepReport step(HydraulicState& state, double dt);

  // stable_dt() extended with the wave speed of the prescribed inflow.
  double stable_dt(const HydraulicState& state) const;

  const SolverOptions& options() const noexcept { return options_; }

 private:
  void check_state(const HydraulicState& state) const;

  const StructuredGrid& grid_;
  const BoundaryConditions& bc_;
  SolverOptions options_;
  std::vector<double> manning_factor_;  // g / K^2 per cell
  std::vector<char> inlet_row_;
  std::vector<char> outlet_row_;
  std::vector<double> u_, v_, c_;
  std::vector<double> dh_, dqx_, dqy_;
};

HydraulicState swe_step(const StructuredGrid& grid, const HydraulicState& state, const BoundaryConditions& bc,
                        const FrictionField& friction, double dt, const SolverOptions& options = {});

struct Trajectory {
  std::vector<HydraulicState> snapshots;  // one per requested output time
  double inflow_volume = 0.0;
  double outflow_volume = 0.0;
  std::size_t steps = 0;
};

// Steps with the adaptive dt, clipped so that steps land exactly on every
// output time and every hydrograph knot inside (state0.t, t_end].
Trajectory simulate(const StructuredGrid& grid, const HydraulicState& state0, const BoundaryConditions& bc,
                    const FrictionField& friction, double t_end, std::span<const double> output_times,
                    const SolverOptions& options = {});

// h <- max(0, h + delta_h[subdomain]) on the listed subdomains; momentum is
// zeroed where the corrected depth falls below the dry threshold.
HydraulicState apply_state_correction(const HydraulicState& state, const StructuredGrid& grid,
                                      const std::map<int, double>& delta_h, double dry_threshold = 1e-4);

// Grid file: "nx,ny,dx,dy" header line, its values, "i,j,z,friction_zone,subdomain_id"
// header line, then one row per cell.
StructuredGrid read_grid(std::istream& in, const std::string& source = {});
StructuredGrid read_grid_file(const std::filesystem::path& path);
void write_grid(std::ostream& out, const StructuredGrid& grid);

// Snapshot file: "time,<t>" then "i,j,h,qx,qy" and one row per cell.
HydraulicState read_state(std::istream& in, const StructuredGrid& grid, const std::string& source = {});
void write_state(std::ostream& out, const StructuredGrid& grid, const HydraulicState& state);

// Two-column CSV "time,discharge".
Hydrograph read_hydrograph(std::istream& in, const std::string& source = {});
void write_hydrograph(std::ostream& out, const Hydrograph& hydrograph);

}  // namespace floodchain::hydraulics
