#include "floodchain/assimilation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "floodchain/csv.hpp"
#include "floodchain/enkf.hpp"
#include "floodchain/error.hpp"

namespace floodchain::assimilation {

namespace {

constexpr std::uint64_t kPriorSalt = 0x9d2c5680a1b3e7f1ULL;
constexpr std::uint64_t kAnalysisSalt = 0x3c6ef372fe94f82bULL;
constexpr std::uint64_t kRespawnSalt = 0xa54ff53a5f1d36f1ULL;
constexpr std::uint64_t kMemberSalt = 0x510e527fade682d1ULL;
constexpr int kRespawnAttempts = 4;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1u), n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi) {
  if (sd == 0.0) return std::clamp(mean, lo, hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const double v = mean + sd * normal(rng);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mean, lo, hi);
}

void unflatten(std::span<const double> values, ControlVector& control, bool with_delta_h) {
  std::size_t k = 0;
  for (double& f : control.friction) f = values[k++];
  control.mu = values[k++];
  if (with_delta_h)
    for (double& d : control.delta_h) d = values[k++];
}

void moments(const Eigen::MatrixXd& x, std::vector<double>& mean, std::vector<double>& sd) {
  const auto n = x.rows();
  const auto m = x.cols();
  mean.assign(static_cast<std::size_t>(n), 0.0);
  sd.assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    mean[static_cast<std::size_t>(r)] = mu;
    if (m > 1)
      sd[static_cast<std::size_t>(r)] =
          std::sqrt((x.row(r).array() - mu).square().sum() / static_cast<double>(m - 1));
  }
}

Eigen::MatrixXd control_matrix(std::span<const EnsembleMember> members, bool with_delta_h) {
  const auto n = flatten(members.front().control, with_delta_h).size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(members.size()));
  for (std::size_t j = 0; j < members.size(); ++j) {
    const auto v = flatten(members[j].control, with_delta_h);
    for (std::size_t r = 0; r < n; ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v[r];
  }
  return x;
}

ControlVector mean_control(std::span<const EnsembleMember> members) {
  ControlVector mean = members.front().control;
  std::fill(mean.friction.begin(), mean.friction.end(), 0.0);
  std::fill(mean.delta_h.begin(), mean.delta_h.end(), 0.0);
  mean.mu = 0.0;
  double count = 0.0;
  for (const auto& member : members) {
    count += 1.0;
    for (std::size_t z = 0; z < mean.friction.size(); ++z)
      mean.friction[z] += (member.control.friction[z] - mean.friction[z]) / count;
    for (std::size_t s = 0; s < mean.delta_h.size(); ++s)
      mean.delta_h[s] += (member.control.delta_h[s] - mean.delta_h[s]) / count;
    mean.mu += (member.control.mu - mean.mu) / count;
  }
  return mean;
}

std::size_t time_index(std::span<const double> times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) throw DomainError("assimilation: observation time not propagated");
  return static_cast<std::size_t>(it - times.begin());
}

std::map<int, double> correction_map(const ModelSetup& setup, std::span<const double> delta_h) {
  std::map<int, double> out;
  for (std::size_t s = 0; s < setup.subdomains.size() && s < delta_h.size(); ++s)
    if (delta_h[s] != 0.0) out[setup.subdomains[s].id] = delta_h[s];
  return out;
}

}  // namespace

void ControlBounds::validate() const {
  if (!(k_min > 0.0 && k_min < k_max)) throw DomainError("control bounds: need 0 < k_min < k_max");
  if (!(mu_min > 0.0 && mu_min < mu_max)) throw DomainError("control bounds: need 0 < mu_min < mu_max");
  if (!(dh_max > 0.0)) throw DomainError("control bounds: dh_max must be positive");
}

double ControlSpreads::friction_for(std::size_t zone) const {
  if (friction.empty()) return 0.0;
  if (friction.size() == 1) return friction.front();
  if (zone >= friction.size()) throw DomainError("control spreads: no friction spread for zone");
  return friction[zone];
}

std::vector<ControlVector> perturb_controls(const ControlVector& prior, const ControlSpreads& spreads,
                                            const ControlBounds& bounds, std::size_t members, std::uint64_t seed) {
  bounds.validate();
  if (members == 0) throw DomainError("perturb_controls: ensemble size must be positive");
  if (spreads.mu < 0.0 || spreads.delta_h < 0.0 ||
      std::any_of(spreads.friction.begin(), spreads.friction.end(), [](double s) { return s < 0.0; }))
    throw DomainError("perturb_controls: spreads must be non-negative");
  if (!(prior.mu > 0.0)) throw DomainError("perturb_controls: prior mu must be positive");

  std::mt19937_64 rng(seed);
  std::vector<ControlVector> out(members, prior);
  const double log_lo = std::log(bounds.mu_min);
  const double log_hi = std::log(bounds.mu_max);
  for (auto& c : out) {
    for (std::size_t z = 0; z < c.friction.size(); ++z)
      c.friction[z] = truncated_normal(rng, prior.friction[z], spreads.friction_for(z), bounds.k_min, bounds.k_max);
    if (spreads.mu > 0.0)
      c.mu = std::exp(truncated_normal(rng, std::log(prior.mu), spreads.mu, log_lo, log_hi));
    else
      c.mu = std::clamp(prior.mu, bounds.mu_min, bounds.mu_max);
    for (std::size_t s = 0; s < c.delta_h.size(); ++s)
      c.delta_h[s] = truncated_normal(rng, prior.delta_h[s], spreads.delta_h, -bounds.dh_max, bounds.dh_max);
  }
  return out;
}

std::size_t clip_controls(ControlVector& control, const ControlBounds& bounds) {
  std::size_t clipped = 0;
  auto clip = [&](double& v, double lo, double hi) {
    const double c = std::clamp(v, lo, hi);
    if (c != v) {
      v = c;
      ++clipped;
    }
  };
  for (double& f : control.friction) clip(f, bounds.k_min, bounds.k_max);
  clip(control.mu, bounds.mu_min, bounds.mu_max);
  for (double& d : control.delta_h) clip(d, -bounds.dh_max, bounds.dh_max);
  return clipped;
}

hydraulics::FrictionField ModelSetup::friction_field(const ControlVector& control) const {
  if (control.friction.size() != friction_zones.size())
    throw DomainError("model setup: friction control does not match the zone list");
  hydraulics::FrictionField field;
  field.zones = friction_zones;
  field.strickler = control.friction;
  field.k_min = bounds.k_min;
  field.k_max = bounds.k_max;
  return field;
}

MemberForecast propagate_member(const ModelSetup& setup, const EnsembleMember& member, double t_end,
                                std::span<const double> wse_times, std::span<const double> wsr_times,
                                std::span<const double> record_times) {
  const double t0 = member.state.t;
  std::vector<double> outputs;
  outputs.reserve(wse_times.size() + wsr_times.size() + record_times.size());
  for (auto times : {wse_times, wsr_times, record_times})
    for (double t : times) {
      if (!(t > t0 && t <= t_end)) throw DomainError("propagate_member: output time outside the window");
      outputs.push_back(t);
    }
  outputs.push_back(t_end);
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());

  const auto correction = correction_map(setup, member.control.delta_h);
  const hydraulics::HydraulicState start =
      correction.empty() ? member.state
                         : hydraulics::apply_state_correction(member.state, setup.grid, correction,
                                                              setup.solver.dry_threshold);
  hydraulics::BoundaryConditions bc = setup.bc;
  bc.inflow_scale = member.control.mu;
  const auto friction = setup.friction_field(member.control);

  auto trajectory = hydraulics::simulate(setup.grid, start, bc, friction, t_end, outputs, setup.solver);

  MemberForecast out;
  out.inflow_volume = trajectory.inflow_volume;
  out.wse.reserve(wse_times.size());
  for (double t : wse_times) {
    const auto& snap = trajectory.snapshots[time_index(outputs, t)];
    auto& row = out.wse.emplace_back();
    row.reserve(setup.stations.size());
    for (const auto& station : setup.stations)
      row.push_back(observing::extract_wse(snap, setup.grid, station, setup.wet_threshold));
  }
  out.wsr.reserve(wsr_times.size());
  for (double t : wsr_times) {
    const auto& snap = trajectory.snapshots[time_index(outputs, t)];
    auto& row = out.wsr.emplace_back();
    row.reserve(setup.subdomains.size());
    for (const auto& sub : setup.subdomains) row.push_back(observing::wsr(snap, setup.grid, sub, setup.wet_threshold));
  }
  out.snapshots.reserve(record_times.size());
  for (double t : record_times) out.snapshots.push_back(trajectory.snapshots[time_index(outputs, t)]);
  out.end_state = std::move(trajectory.snapshots.back());
  return out;
}

void CycleConfig::validate() const {
  if (!(window > 0.0)) throw DomainError("cycle config: window length must be positive");
  if (members == 0) throw DomainError("cycle config: ensemble size must be positive");
  if (selection != ObservationSelection::none && members < 2)
    throw DomainError("cycle config: assimilation requires at least two members");
  if (!(inflation > 0.0)) throw DomainError("cycle config: inflation must be positive");
  if (!(saturation_fraction >= 0.0 && saturation_fraction <= 1.0))
    throw DomainError("cycle config: saturation fraction must lie in [0, 1]");
  if (spreads.mu < 0.0 || spreads.delta_h < 0.0 ||
      std::any_of(spreads.friction.begin(), spreads.friction.end(), [](double s) { return s < 0.0; }))
    throw DomainError("cycle config: spreads must be non-negative");
}

CycleResult run_cycle(const ModelSetup& setup, std::span<const EnsembleMember> members,
                      const observing::ObservationSet& obs, double t_end, std::span<const double> record_times,
                      const CycleConfig& config, std::size_t window_index, CycleContext* context) {
  if (members.empty()) throw DomainError("run_cycle: empty ensemble");
  const std::size_t m = members.size();
  const double t0 = members.front().state.t;
  const bool with_dh = config.correct_state;
  const bool use_wse = config.selection != ObservationSelection::none;
  const bool use_wsr = config.selection == ObservationSelection::wse_wsr;

  observing::ObservationSet used;
  if (use_wse) used.wse = obs.wse;
  if (use_wsr) used.wsr = obs.wsr;
  const auto wse_times = used.wse_times();
  const auto wsr_times = used.wsr_times();

  CycleDiagnostics diag;
  diag.window = window_index;
  diag.t0 = t0;
  diag.t1 = t_end;

  // Forecast.
  std::vector<EnsembleMember> current(members.begin(), members.end());
  std::vector<MemberForecast> forecast(m);
  const ControlVector centre = mean_control(members);
  std::atomic<std::size_t> respawned{0};
  parallel_for(m, config.threads, [&](std::size_t j) {
    for (int attempt = 0;; ++attempt) {
      try {
        forecast[j] = propagate_member(setup, current[j], t_end, wse_times, wsr_times, record_times);
        return;
      } catch (const InstabilityError& e) {
        if (attempt + 1 >= kRespawnAttempts) throw;
        spdlog::warn("window {}: member {} diverged ({}); respawning around the ensemble mean", window_index,
                     current[j].id, e.what());
        auto fresh = perturb_controls(centre, config.spreads, setup.bounds, 1,
                                      mix(current[j].seed, window_index, kRespawnSalt + static_cast<unsigned>(attempt)))
                         .front();
        if (!with_dh) fresh.delta_h = current[j].control.delta_h;
        current[j].control = fresh;
        ++respawned;
      }
    }
  });
  diag.respawned = respawned.load();

  // Observation vector and model equivalents.
  std::vector<double> y;
  std::vector<double> sd;
  std::vector<std::vector<double>> predicted;
  std::vector<int> obs_subdomain;  // -1 for WSE
  for (const auto& rec : used.wse) {
    const std::size_t ti = time_index(wse_times, rec.time);
    if (rec.dry) continue;
    std::vector<double> row(m);
    bool any_dry = false;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& reading = forecast[j].wse[ti][rec.station];
      any_dry = any_dry || reading.dry;
      row[j] = reading.value;
    }
    if (any_dry) continue;
    y.push_back(rec.value);
    sd.push_back(rec.sigma);
    predicted.push_back(std::move(row));
    obs_subdomain.push_back(-1);
    ++diag.wse_used;
  }
  for (const auto& rec : used.wsr) {
    const std::size_t ti = time_index(wsr_times, rec.time);
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) row[j] = forecast[j].wsr[ti][rec.subdomain];
    double value = rec.value;
    double sigma = rec.sigma;
    if (config.anamorphosis) {
      const auto saturated = static_cast<double>(
          std::count_if(row.begin(), row.end(), [](double v) { return v == 0.0 || v == 1.0; }));
      if (saturated > config.saturation_fraction * static_cast<double>(m)) {
        spdlog::info("window {}: WSR of subdomain {} at t={} skipped, {} of {} members saturated", window_index,
                     setup.subdomains[rec.subdomain].id, rec.time, saturated, m);
        ++diag.wsr_skipped;
        continue;
      }
      const anamorphosis::AnamorphosisOptions options{.score_bound = 4.0, .unit_interval = true};
      std::optional<anamorphosis::AnamorphosisMap> fitted;
      const anamorphosis::AnamorphosisMap* map = nullptr;
      if (!config.anamorphosis_per_cycle && context) {
        auto it = context->fixed_maps.find(rec.subdomain);
        if (it == context->fixed_maps.end())
          it = context->fixed_maps.emplace(rec.subdomain, anamorphosis::AnamorphosisMap::fit(row, options)).first;
        map = &it->second;
      } else {
        fitted = anamorphosis::AnamorphosisMap::fit(row, options);
        map = &*fitted;
      }
      if (context && context->knot_dump)
        anamorphosis::write_knots(*context->knot_dump, *map,
                                  std::to_string(window_index) + "_" + csv::format(rec.time) + "_" +
                                      std::to_string(setup.subdomains[rec.subdomain].id));
      if (map->degenerate()) {
        spdlog::warn("window {}: WSR ensemble of subdomain {} has no spread; anamorphosis is the identity",
                     window_index, setup.subdomains[rec.subdomain].id);
      } else {
        for (double& v : row) v = map->forward(v);
        value = map->forward(value);
        if (config.transformed_unit_variance) sigma = 1.0;
      }
    }
    y.push_back(value);
    sd.push_back(sigma);
    predicted.push_back(std::move(row));
    obs_subdomain.push_back(static_cast<int>(rec.subdomain));
    ++diag.wsr_used;
  }

  Eigen::MatrixXd x = control_matrix(current, with_dh);
  moments(x, diag.prior_mean, diag.prior_std);

  CycleResult result;
  result.members = current;
  const bool analyse = !y.empty();
  if (!analyse && !used.empty()) spdlog::warn("window {}: no usable observation; controls unchanged", window_index);
  if (analyse) {
    const auto p = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXd ypred(p, static_cast<Eigen::Index>(m));
    Eigen::VectorXd yobs(p), ysd(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      yobs[k] = y[static_cast<std::size_t>(k)];
      ysd[k] = sd[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < m; ++j)
        ypred(k, static_cast<Eigen::Index>(j)) = predicted[static_cast<std::size_t>(k)][j];
    }
    if (config.inflation != 1.0) {
      const Eigen::VectorXd mean = x.rowwise().mean();
      x = ((x.colwise() - mean) * config.inflation).colwise() + mean;
    }
    diag.innovation_norm = (yobs - ypred.rowwise().mean()).norm();
    // delta_h of a subdomain only sees the WSR of that subdomain.
    std::optional<Eigen::MatrixXd> local;
    if (with_dh && config.localize_delta_h) {
      const Eigen::Index n_global = x.rows() - static_cast<Eigen::Index>(setup.subdomains.size());
      local = Eigen::MatrixXd::Ones(x.rows(), p);
      for (Eigen::Index r = n_global; r < x.rows(); ++r)
        for (Eigen::Index k = 0; k < p; ++k)
          if (obs_subdomain[static_cast<std::size_t>(k)] != r - n_global) (*local)(r, k) = 0.0;
    }
    const auto analysis = enkf::stochastic_analysis(x, ypred, yobs, ysd, mix(config.seed, window_index, kAnalysisSalt),
                                                    local ? &*local : nullptr);
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::VectorXd col = analysis.analysis.col(static_cast<Eigen::Index>(j));
      unflatten(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), result.members[j].control,
                with_dh);
      diag.clipped += clip_controls(result.members[j].control, setup.bounds);
    }
  }
  moments(control_matrix(result.members, with_dh), diag.posterior_mean, diag.posterior_std);

  // Reanalysis of the window.
  std::vector<hydraulics::HydraulicState> ends(m);
  std::vector<std::vector<hydraulics::HydraulicState>> snaps(m);
  std::vector<double> inflow(m);
  if (analyse && config.rerun) {
    parallel_for(m, config.threads, [&](std::size_t j) {
      EnsembleMember member = result.members[j];
      member.state = members[j].state;
      MemberForecast run;
      try {
        run = propagate_member(setup, member, t_end, {}, {}, record_times);
      } catch (const InstabilityError& e) {
        spdlog::warn("window {}: analysed member {} diverged ({}); keeping its forecast", window_index, member.id,
                     e.what());
        result.members[j].control = current[j].control;
        run = std::move(forecast[j]);
      }
      ends[j] = std::move(run.end_state);
      snaps[j] = std::move(run.snapshots);
      inflow[j] = run.inflow_volume;
    });
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      ends[j] = std::move(forecast[j].end_state);
      snaps[j] = std::move(forecast[j].snapshots);
      inflow[j] = forecast[j].inflow_volume;
      if (analyse && with_dh) {
        std::vector<double> increment(setup.subdomains.size());
        for (std::size_t s = 0; s < increment.size(); ++s)
          increment[s] = result.members[j].control.delta_h[s] - current[j].control.delta_h[s];
        const auto correction = correction_map(setup, increment);
        if (!correction.empty())
          ends[j] = hydraulics::apply_state_correction(ends[j], setup.grid, correction, setup.solver.dry_threshold);
      }
    }
  }

  double count = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    result.members[j].state = std::move(ends[j]);
    count += 1.0;
    diag.inflow_volume += (inflow[j] - diag.inflow_volume) / count;
  }
  result.mean_states.reserve(record_times.size());
  std::vector<hydraulics::HydraulicState> column(m);
  for (std::size_t k = 0; k < record_times.size(); ++k) {
    for (std::size_t j = 0; j < m; ++j) column[j] = std::move(snaps[j][k]);
    result.mean_states.push_back(ensemble_mean(column));
    result.wet_fractions.push_back(wet_fraction(column, setup.wet_threshold));
  }
  result.diagnostics = std::move(diag);
  return result;
}

ReanalysisResult run_reanalysis(const ModelSetup& setup, const hydraulics::HydraulicState& initial_state,
                                const ControlVector& prior, const observing::ObservationSet& obs, double t_end,
                                std::span<const double> record_times, const CycleConfig& config,
                                std::ostream* knot_dump) {
  config.validate();
  setup.bounds.validate();
  if (!(t_end > initial_state.t)) throw DomainError("run_reanalysis: end time must follow the initial state");
  if (prior.friction.size() != setup.friction_zones.size() || prior.delta_h.size() != setup.subdomains.size())
    throw DomainError("run_reanalysis: prior control does not match the model setup");
  if (!std::is_sorted(record_times.begin(), record_times.end()))
    throw DomainError("run_reanalysis: record times must be sorted");

  ControlSpreads spreads = config.spreads;
  if (!config.correct_state) spreads.delta_h = 0.0;
  const std::size_t m = config.members;

  std::vector<EnsembleMember> members(m);
  {
    const auto controls = perturb_controls(prior, spreads, setup.bounds, m, mix(config.seed, 0, kPriorSalt));
    for (std::size_t j = 0; j < m; ++j)
      members[j] = EnsembleMember{controls[j], initial_state, j, mix(config.seed, j, kMemberSalt)};
  }

  ReanalysisResult out;
  for (double t : record_times)
    if (t == initial_state.t) {
      out.times.push_back(t);
      out.mean_states.push_back(initial_state);
      out.wet_fractions.push_back(wet_fraction(std::span(&initial_state, 1), setup.wet_threshold));
    }

  CycleContext context;
  context.knot_dump = knot_dump;
  double t = initial_state.t;
  for (std::size_t w = 0; t < t_end; ++w) {
    const double t1 = std::min(t + config.window, t_end);
    if (w > 0) {
      ControlVector centre = mean_control(members);
      std::fill(centre.delta_h.begin(), centre.delta_h.end(), 0.0);
      const auto fresh = perturb_controls(centre, spreads, setup.bounds, m, mix(config.seed, w, kPriorSalt));
      for (std::size_t j = 0; j < m; ++j) {
        if (config.respread) {
          members[j].control.friction = fresh[j].friction;
          members[j].control.mu = fresh[j].mu;
        }
        members[j].control.delta_h = fresh[j].delta_h;
      }
    }
    const auto window_obs = obs.window(t, t1);
    const bool wsr_in_window = config.selection == ObservationSelection::wse_wsr && !window_obs.wsr.empty();
    if (config.correct_state && !config.delta_h_without_wsr && !wsr_in_window)
      for (auto& member : members) std::fill(member.control.delta_h.begin(), member.control.delta_h.end(), 0.0);
    std::vector<double> window_records;
    for (double r : record_times)
      if (r > t && r <= t1) window_records.push_back(r);
    auto cycle = run_cycle(setup, members, window_obs, t1, window_records, config, w, &context);
    members = std::move(cycle.members);
    for (std::size_t k = 0; k < window_records.size(); ++k) {
      out.times.push_back(window_records[k]);
      out.mean_states.push_back(std::move(cycle.mean_states[k]));
      out.wet_fractions.push_back(std::move(cycle.wet_fractions[k]));
    }
    out.cycles.push_back(std::move(cycle.diagnostics));
    t = t1;
  }
  out.final_members = std::move(members);
  return out;
}

std::vector<double> flatten(const ControlVector& control, bool with_delta_h) {
  std::vector<double> out(control.friction);
  out.push_back(control.mu);
  if (with_delta_h) out.insert(out.end(), control.delta_h.begin(), control.delta_h.end());
  return out;
}

std::vector<std::string> control_labels(const ModelSetup& setup, bool with_delta_h) {
  std::vector<std::string> out;
  for (int zone : setup.friction_zones) out.push_back("friction_" + std::to_string(zone));
  out.emplace_back("mu");
  if (with_delta_h)
    for (const auto& sub : setup.subdomains) out.push_back("dh_" + std::to_string(sub.id));
  return out;
}

void write_diagnostics(std::ostream& out, const ModelSetup& setup, std::span<const CycleDiagnostics> cycles,
                       bool with_delta_h) {
  const auto labels = control_labels(setup, with_delta_h);
  std::vector<std::string> header{"window",      "t0",          "t1",          "wse_used",       "wsr_used",
                                  "wsr_skipped", "innovation_norm", "clipped", "respawned", "inflow_volume"};
  for (const char* stat : {"prior_mean", "prior_std", "posterior_mean", "posterior_std"})
    for (const auto& l : labels) header.push_back(l + "_" + stat);
  csv::write_row(out, header);
  for (const auto& c : cycles) {
    if (c.prior_mean.size() != labels.size()) throw DomainError("write_diagnostics: control layout mismatch");
    std::vector<std::string> row{std::to_string(c.window),      csv::format(c.t0),
                                 csv::format(c.t1),             std::to_string(c.wse_used),
                                 std::to_string(c.wsr_used),    std::to_string(c.wsr_skipped),
                                 csv::format(c.innovation_norm), std::to_string(c.clipped),
                                 std::to_string(c.respawned),   csv::format(c.inflow_volume)};
    for (const auto* values : {&c.prior_mean, &c.prior_std, &c.posterior_mean, &c.posterior_std})
      for (double v : *values) row.push_back(csv::format(v));
    csv::write_row(out, row);
  }
}

void write_control_history(std::ostream& out, const ModelSetup& setup, std::span<const CycleDiagnostics> cycles,
                           bool with_delta_h) {
  const auto labels = control_labels(setup, with_delta_h);
  std::vector<std::string> header{"window", "t0", "t1"};
  header.insert(header.end(), labels.begin(), labels.end());
  csv::write_row(out, header);
  for (const auto& c : cycles) {
    if (c.posterior_mean.size() != labels.size()) throw DomainError("write_control_history: control layout mismatch");
    std::vector<std::string> row{std::to_string(c.window), csv::format(c.t0), csv::format(c.t1)};
    for (double v : c.posterior_mean) row.push_back(csv::format(v));
    csv::write_row(out, row);
  }
}

std::vector<double> wet_fraction(std::span<const hydraulics::HydraulicState> states, double threshold) {
  if (states.empty()) throw DomainError("wet_fraction: no states");
  const auto n = states.front().h.size();
  std::vector<double> out(n, 0.0);
  for (const auto& s : states) {
    if (s.h.size() != n) throw DomainError("wet_fraction: states are not aligned");
    for (std::size_t c = 0; c < n; ++c)
      if (s.h[c] >= threshold) out[c] += 1.0;
  }
  for (double& f : out) f /= static_cast<double>(states.size());
  return out;
}

hydraulics::HydraulicState ensemble_mean(std::span<const hydraulics::HydraulicState> states) {
  if (states.empty()) throw DomainError("ensemble_mean: no states");
  hydraulics::HydraulicState mean = states.front();
  const std::size_t n = mean.h.size();
  double count = 1.0;
  for (std::size_t j = 1; j < states.size(); ++j) {
    const auto& s = states[j];
    if (s.h.size() != n || s.t != mean.t) throw DomainError("ensemble_mean: states are not aligned");
    count += 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      mean.h[c] += (s.h[c] - mean.h[c]) / count;
      mean.qx[c] += (s.qx[c] - mean.qx[c]) / count;
      mean.qy[c] += (s.qy[c] - mean.qy[c]) / count;
    }
  }
  return mean;
}

}  // namespace floodchain::assimilation
