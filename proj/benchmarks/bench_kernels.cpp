#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <benchmark/benchmark.h>

#include "floodchain/anamorphosis.hpp"
#include "floodchain/enkf.hpp"
#include "floodchain/hydraulics.hpp"
#include "floodchain/routing.hpp"
#include "floodchain/scenario.hpp"

namespace fc = floodchain;

namespace {

// One explicit step on the default twin grid, wet channel and floodplain.
void BM_SweStep(benchmark::State& state) {
  const auto s = fc::scenario::build_scenario({});
  const auto f = fc::scenario::make_forcings(s, {}, {}, 1);
  const auto setup = fc::scenario::model_setup(s, f.observed, {}, 0.05, {});
  const auto friction = setup.friction_field(s.truth);
  fc::hydraulics::SweSolver solver(setup.grid, setup.bc, friction, setup.solver);
  const double level = s.grid.z[s.grid.index(0, s.inlet_rows.front())] + 4.0;
  auto h = fc::hydraulics::HydraulicState::lake(s.grid, level);
  for (auto _ : state) {
    solver.step(h, solver.stable_dt(h));
    benchmark::DoNotOptimize(h.h.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.grid.cells()));
}
BENCHMARK(BM_SweStep);

// Matrix Muskingum step on a binary tree of n reaches.
void BM_RouteStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> ids(n), down(n);
  for (std::size_t r = 0; r < n; ++r) {
    ids[r] = "R" + std::to_string(r);
    down[r] = r == 0 ? "-" : "R" + std::to_string((r - 1) / 2);
  }
  const fc::routing::RiverNetwork net(ids, down);
  fc::routing::MuskingumParams params;
  params.k.assign(n, 3600.0);
  params.x.assign(n, 0.2);
  std::vector<double> q(n, 10.0), now(n, 1.0), next(n, 1.5);
  for (auto _ : state) {
    q = fc::routing::route_step(net, params, q, now, next, 900.0);
    benchmark::DoNotOptimize(q.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RouteStep)->RangeMultiplier(8)->Range(8, 4096);

// Stochastic analysis with a control vector of 8 and p observations, m = 20.
void BM_EnkfAnalysis(benchmark::State& state) {
  const auto p = state.range(0);
  const Eigen::Index n = 8, m = 20;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, m), y(p, m);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = normal(rng);
  const Eigen::VectorXd obs = Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd sd = Eigen::VectorXd::Constant(p, 0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fc::enkf::stochastic_analysis(x, y, obs, sd, ++seed));
}
BENCHMARK(BM_EnkfAnalysis)->Arg(6)->Arg(36)->Arg(200);

void BM_AnamorphosisFit(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> sample(static_cast<std::size_t>(state.range(0)));
  for (auto& v : sample) v = u(rng);
  for (auto _ : state) {
    const auto map = fc::anamorphosis::AnamorphosisMap::fit(sample);
    benchmark::DoNotOptimize(map.forward(0.5));
  }
}
BENCHMARK(BM_AnamorphosisFit)->Arg(20)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
