#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "floodchain/assimilation.hpp"
#include "floodchain/error.hpp"
#include "floodchain/scenario.hpp"

using namespace floodchain;
using namespace floodchain::assimilation;
using hydraulics::HydraulicState;

namespace {

// Small twin: 20 x 8 cells, two subdomains, a 6 h flood wave.
struct Twin {
  scenario::Scenario s;
  scenario::Forcings forcings;
  ModelSetup setup;
  HydraulicState initial;
  std::vector<double> gauge_times;
  std::vector<double> wsr_times{10800.0};
  double t_end = 21600.0;
  double window = 3600.0;

  Twin() {
    scenario::ScenarioConfig cfg;
    cfg.nx = 20;
    cfg.ny = 8;
    cfg.pocket_rows = 1;
    cfg.subdomains = 2;
    s = scenario::build_scenario(cfg);
    scenario::EventConfig event;
    event.duration = t_end;
    event.storm_peak = 7200.0;
    forcings = scenario::make_forcings(s, event, {}, 1);
    setup = scenario::model_setup(s, forcings.observed, {}, 0.05, {});
    initial = scenario::spin_up(s, event.baseflow, 21600.0, setup.solver);
    for (double t = 1800.0; t <= t_end; t += 1800.0) gauge_times.push_back(t);
  }

  scenario::TruthRun truth(std::span<const scenario::Injection> injections = {}) const {
    return scenario::run_truth(setup, s.truth, initial, t_end, window, gauge_times, injections);
  }

  observing::ObservationSet observe(const scenario::TruthRun& run) const {
    observing::SynthesisOptions options;
    options.wet_threshold = 0.05;
    options.seed = 5;
    return observing::synthesize_observations(run.snapshots, s.grid, setup.stations, setup.subdomains, gauge_times,
                                              wsr_times, options);
  }

  CycleConfig cycle(ObservationSelection selection) const {
    CycleConfig c;
    c.window = window;
    c.members = 12;
    c.selection = selection;
    c.correct_state = selection == ObservationSelection::wse_wsr;
    c.spreads.friction = {3.0};
    c.spreads.mu = 0.25;
    c.spreads.delta_h = 0.15;
    c.seed = 9;
    return c;
  }
};

const Twin& twin() {
  static const Twin t;
  return t;
}

bool same_states(const std::vector<HydraulicState>& a, const std::vector<HydraulicState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k].t != b[k].t || a[k].h != b[k].h || a[k].qx != b[k].qx || a[k].qy != b[k].qy) return false;
  return true;
}

}  // namespace

TEST_CASE("perturbed controls stay inside the bounds") {
  const ControlVector prior{{30.0, 18.0}, 1.0, {0.0, 0.0, 0.0}};
  ControlSpreads spreads{{20.0, 20.0}, 1.0, 0.8};
  ControlBounds bounds;
  bounds.k_min = 10.0;
  bounds.k_max = 40.0;
  bounds.mu_min = 0.5;
  bounds.mu_max = 2.0;
  bounds.dh_max = 0.5;
  const auto members = perturb_controls(prior, spreads, bounds, 2000, 3);
  for (const auto& c : members) {
    for (double k : c.friction) CHECK((k >= 10.0 && k <= 40.0));
    CHECK((c.mu >= 0.5 && c.mu <= 2.0));
    for (double d : c.delta_h) CHECK((d >= -0.5 && d <= 0.5));
  }
  CHECK(perturb_controls(prior, spreads, bounds, 5, 3) ==
        std::vector<ControlVector>(members.begin(), members.begin() + 5));
  CHECK(perturb_controls(prior, spreads, bounds, 5, 4) !=
        std::vector<ControlVector>(members.begin(), members.begin() + 5));
}

TEST_CASE("perturbed controls follow the prior moments") {
  const ControlVector prior{{30.0}, 1.2, {0.0}};
  const ControlSpreads spreads{{2.0}, 0.1, 0.15};
  const std::size_t m = 20000;
  const auto members = perturb_controls(prior, spreads, {}, m, 11);
  std::vector<double> k, logmu, dh;
  for (const auto& c : members) {
    k.push_back(c.friction[0]);
    logmu.push_back(std::log(c.mu));
    dh.push_back(c.delta_h[0]);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  auto sd = [&](const std::vector<double>& v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / (v.size() - 1));
  };
  // 5 standard errors
  const double se = 5.0 / std::sqrt(static_cast<double>(m));
  CHECK(std::abs(mean(k) - 30.0) < 2.0 * se);
  CHECK(std::abs(sd(k) - 2.0) < 2.0 * se);
  CHECK(std::abs(mean(logmu) - std::log(1.2)) < 0.1 * se);
  CHECK(std::abs(sd(logmu) - 0.1) < 0.1 * se);
  CHECK(std::abs(mean(dh)) < 0.15 * se);
  CHECK(std::abs(sd(dh) - 0.15) < 0.15 * se);
}

TEST_CASE("zero spreads reproduce the prior") {
  const ControlVector prior{{30.0, 18.0}, 0.8, {0.1, -0.2}};
  const auto members = perturb_controls(prior, {}, {}, 3, 1);
  for (const auto& c : members) CHECK(c == prior);
}

TEST_CASE("perturbation rejects invalid inputs") {
  const ControlVector prior{{30.0}, 1.0, {}};
  CHECK_THROWS_AS(perturb_controls(prior, {}, {}, 0, 1), DomainError);
  CHECK_THROWS_AS(perturb_controls(prior, {{-1.0}, 0.0, 0.0}, {}, 2, 1), DomainError);
  CHECK_THROWS_AS(perturb_controls({{30.0}, 0.0, {}}, {}, {}, 2, 1), DomainError);
  ControlBounds bad;
  bad.k_min = 50.0;
  bad.k_max = 40.0;
  CHECK_THROWS_AS(perturb_controls(prior, {}, bad, 2, 1), DomainError);
}

TEST_CASE("clipping clamps every component and counts them") {
  ControlVector c{{2.0, 50.0, 150.0}, 5.0, {-2.0, 0.3}};
  CHECK(clip_controls(c, {}) == 4);
  CHECK(c.friction == std::vector<double>{5.0, 50.0, 100.0});
  CHECK(c.mu == 3.0);
  CHECK(c.delta_h == std::vector<double>{-1.0, 0.3});
  CHECK(clip_controls(c, {}) == 0);
}

TEST_CASE("control layout helpers") {
  const ControlVector c{{30.0, 18.0}, 1.1, {0.1, 0.2}};
  CHECK(flatten(c, false) == std::vector<double>{30.0, 18.0, 1.1});
  CHECK(flatten(c, true) == std::vector<double>{30.0, 18.0, 1.1, 0.1, 0.2});
  const auto labels = control_labels(twin().setup, true);
  CHECK(labels == std::vector<std::string>{"friction_0", "friction_1", "mu", "dh_0", "dh_1"});
}

TEST_CASE("wet fraction and ensemble mean") {
  hydraulics::StructuredGrid g;
  g.nx = 3;
  g.ny = 1;
  g.dx = g.dy = 1.0;
  g.z = {0.0, 0.0, 0.0};
  g.friction_zone = {0, 0, 0};
  g.subdomain = {-1, -1, -1};
  std::vector<HydraulicState> states(4, HydraulicState::dry(g));
  states[0].h = {0.1, 0.0, 0.3};
  states[1].h = {0.1, 0.05, 0.3};
  states[2].h = {0.0, 0.2, 0.3};
  states[3].h = {0.0, 0.0, 0.3};
  CHECK(wet_fraction(states, 0.05) == std::vector<double>{0.5, 0.5, 1.0});
  const auto mean = ensemble_mean(states);
  CHECK(mean.h[2] == 0.3);
  CHECK(mean.h[0] == doctest::Approx(0.05));
  CHECK(mean.h[1] == doctest::Approx(0.0625));
}

TEST_CASE("inflow multiplier scales the inflow volume") {
  const auto& t = twin();
  EnsembleMember member{t.s.truth, t.initial, 0, 0};
  const auto full = propagate_member(t.setup, member, 7200.0, {}, {}, {});
  member.control.mu = 0.5;
  const auto half = propagate_member(t.setup, member, 7200.0, {}, {}, {});
  CHECK(full.inflow_volume == doctest::Approx(t.forcings.observed.volume(0.0, 7200.0)).epsilon(1e-9));
  CHECK(half.inflow_volume == doctest::Approx(0.5 * full.inflow_volume).epsilon(1e-12));
}

TEST_CASE("propagation rejects output times outside the window") {
  const auto& t = twin();
  const EnsembleMember member{t.s.truth, t.initial, 0, 0};
  const std::vector<double> late{9000.0};
  CHECK_THROWS_AS(propagate_member(t.setup, member, 7200.0, late, {}, {}), DomainError);
}

TEST_CASE("open loop with the true controls reproduces the truth bit for bit") {
  const auto& t = twin();
  const auto truth = t.truth();
  auto cfg = t.cycle(ObservationSelection::none);
  cfg.members = 1;
  cfg.spreads = {};
  const auto ol = run_reanalysis(t.setup, t.initial, t.s.truth, {}, t.t_end, t.gauge_times, cfg);
  CHECK(ol.times == truth.times);
  CHECK(same_states(ol.mean_states, truth.snapshots));
  CHECK(ol.cycles.size() == 6);
  CHECK(ol.cycles.back().inflow_volume > 0.0);
}

TEST_CASE("reanalysis is deterministic across thread counts") {
  const auto& t = twin();
  const auto obs = t.observe(t.truth());
  auto cfg = t.cycle(ObservationSelection::wse_wsr);
  cfg.threads = 1;
  const ControlVector prior{{30.0, 18.0}, 0.8, {0.0, 0.0}};
  const auto a = run_reanalysis(t.setup, t.initial, prior, obs, t.t_end, t.gauge_times, cfg);
  cfg.threads = 3;
  const auto b = run_reanalysis(t.setup, t.initial, prior, obs, t.t_end, t.gauge_times, cfg);
  CHECK(a.cycles == b.cycles);
  CHECK(same_states(a.mean_states, b.mean_states));
  CHECK(a.wet_fractions == b.wet_fractions);
  cfg.seed += 1;
  const auto c = run_reanalysis(t.setup, t.initial, prior, obs, t.t_end, t.gauge_times, cfg);
  CHECK_FALSE(a.cycles == c.cycles);
}

TEST_CASE("WSE assimilation pulls a biased inflow multiplier toward the truth") {
  const auto& t = twin();
  const auto obs = t.observe(t.truth());
  const auto cfg = t.cycle(ObservationSelection::wse);
  const ControlVector prior{{30.0, 18.0}, 0.6, {0.0, 0.0}};
  const auto r = run_reanalysis(t.setup, t.initial, prior, obs, t.t_end, t.gauge_times, cfg);
  const auto mu_index = 2;
  const double first_prior = r.cycles.front().prior_mean[mu_index];
  const double last = r.cycles.back().posterior_mean[mu_index];
  CHECK(std::abs(last - 1.0) < 0.5 * std::abs(first_prior - 1.0));
  for (const auto& c : r.cycles) CHECK(c.wsr_used == 0);
}

TEST_CASE("delta_h is held at zero in windows without WSR") {
  const auto& t = twin();
  const auto obs = t.observe(t.truth());
  const auto cfg = t.cycle(ObservationSelection::wse_wsr);
  const auto r = run_reanalysis(t.setup, t.initial, t.s.truth, obs, t.t_end, t.gauge_times, cfg);
  const std::size_t n_global = 3;
  for (const auto& c : r.cycles) {
    const bool has_wsr = c.t0 < t.wsr_times[0] && t.wsr_times[0] <= c.t1;
    for (std::size_t s = 0; s < 2; ++s) {
      if (has_wsr)
        CHECK(c.prior_std[n_global + s] > 0.0);
      else
        CHECK(c.prior_std[n_global + s] == 0.0);
    }
  }
}

TEST_CASE("delta_h of a subdomain only sees its own WSR") {
  const auto& t = twin();
  const auto truth = t.truth();
  auto obs = t.observe(truth);
  // keep the WSR of subdomain 0 only
  std::erase_if(obs.wsr, [](const observing::WsrObservation& o) { return o.subdomain != 0; });
  REQUIRE(obs.wsr.size() == 1);
  auto cfg = t.cycle(ObservationSelection::wse_wsr);
  cfg.anamorphosis = false;
  const double t0 = 7200.0;
  const auto window = obs.window(t0, t0 + t.window);
  REQUIRE(window.wsr.size() == 1);

  const auto start_index =
      static_cast<std::size_t>(std::find(truth.times.begin(), truth.times.end(), t0) - truth.times.begin());
  ControlSpreads spreads = cfg.spreads;
  const auto controls = perturb_controls(t.s.truth, spreads, t.setup.bounds, cfg.members, 21);
  std::vector<EnsembleMember> members;
  for (std::size_t j = 0; j < controls.size(); ++j)
    members.push_back({controls[j], truth.snapshots[start_index], j, j + 1});

  const std::vector<double> records;
  const auto local = run_cycle(t.setup, members, window, t0 + t.window, records, cfg, 2);
  REQUIRE(local.diagnostics.wsr_used == 1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    CHECK(local.members[j].control.delta_h[1] == members[j].control.delta_h[1]);
    CHECK(local.members[j].control.delta_h[0] != members[j].control.delta_h[0]);
  }

  cfg.localize_delta_h = false;
  const auto global = run_cycle(t.setup, members, window, t0 + t.window, records, cfg, 2);
  std::size_t moved = 0;
  for (std::size_t j = 0; j < members.size(); ++j)
    moved += global.members[j].control.delta_h[1] != members[j].control.delta_h[1];
  CHECK(moved == members.size());
}

TEST_CASE("diagnostics and control history csv") {
  const auto& t = twin();
  CycleDiagnostics d;
  d.window = 0;
  d.t0 = 0.0;
  d.t1 = 3600.0;
  d.prior_mean = {30.0, 18.0, 1.0};
  d.prior_std = {1.0, 1.0, 0.1};
  d.posterior_mean = {29.0, 18.5, 0.9};
  d.posterior_std = {0.5, 0.5, 0.05};
  const std::vector<CycleDiagnostics> cycles{d};
  std::ostringstream history;
  write_control_history(history, t.setup, cycles, false);
  CHECK(history.str() == "window,t0,t1,friction_0,friction_1,mu\n0,0,3600,29,18.5,0.9\n");
  std::ostringstream diag;
  write_diagnostics(diag, t.setup, cycles, false);
  const auto text = diag.str();
  CHECK(text.rfind("window,t0,t1,wse_used,wsr_used,wsr_skipped,innovation_norm,clipped,respawned,", 0) == 0);
  CHECK(text.find("mu_posterior_std") != std::string::npos);
}
