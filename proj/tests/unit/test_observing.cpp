#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "floodchain/error.hpp"
#include "floodchain/observing.hpp"

using namespace floodchain;
using namespace floodchain::observing;
using hydraulics::HydraulicState;
using hydraulics::StructuredGrid;

namespace {

StructuredGrid grid_4x2() {
  StructuredGrid g;
  g.nx = 4;
  g.ny = 2;
  g.dx = g.dy = 10.0;
  g.z = {1.0, 2.0, 3.0, 4.0, 1.5, 2.5, 3.5, 4.5};
  g.friction_zone.assign(8, 0);
  g.subdomain = {-1, 0, 0, 1, -1, 0, 1, 1};
  return g;
}

}  // namespace

TEST_CASE("gauge reads bed plus depth, or the bed when dry") {
  const auto g = grid_4x2();
  auto s = HydraulicState::dry(g);
  s.h[g.index(1, 0)] = 0.75;
  const auto wet = extract_wse(s, g, {"a", 1, 0}, 1e-4);
  CHECK_FALSE(wet.dry);
  CHECK(wet.value == 2.75);
  const auto dry = extract_wse(s, g, {"b", 2, 1}, 1e-4);
  CHECK(dry.dry);
  CHECK(dry.value == 3.5);
  CHECK_THROWS_AS(extract_wse(s, g, {"c", 9, 0}), DomainError);
}

TEST_CASE("wet surface ratio counts cells at or above the threshold") {
  const auto g = grid_4x2();
  const auto subs = subdomains_from_grid(g, 0.05);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].id == 0);
  CHECK(subs[0].cells.size() == 3);
  auto s = HydraulicState::dry(g);
  s.h[g.index(1, 0)] = 0.05;
  s.h[g.index(2, 0)] = 0.049;
  s.h[g.index(1, 1)] = 1.0;
  CHECK(wsr(s, g, subs[0], 0.05) == doctest::Approx(2.0 / 3.0));
  CHECK(wsr(s, g, subs[1], 0.05) == 0.0);
  const auto map = wet_dry_map(s, g, 0.05);
  CHECK(map == std::vector<std::uint8_t>{0, 1, 0, 0, 0, 1, 0, 0});
}

TEST_CASE("wsr stays in [0, 1] for any state") {
  const auto g = grid_4x2();
  const auto subs = subdomains_from_grid(g, 0.05);
  for (int k = 0; k < 256; ++k) {
    auto s = HydraulicState::dry(g);
    for (std::size_t c = 0; c < 8; ++c) s.h[c] = ((k >> c) & 1) ? 0.3 : 0.0;
    for (const auto& sub : subs) {
      const double r = wsr(s, g, sub, 0.05);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_CASE("synthesized observations are deterministic, clipped and flag dry gauges") {
  const auto g = grid_4x2();
  const auto subs = subdomains_from_grid(g, 0.05);
  std::vector<HydraulicState> truth;
  for (double t : {0.0, 60.0, 120.0}) {
    auto s = HydraulicState::dry(g, t);
    s.h[g.index(1, 0)] = t / 60.0;
    s.h[g.index(3, 0)] = 1.0;
    truth.push_back(s);
  }
  const std::vector<GaugeStation> stations{{"up", 1, 0, 0.05}, {"down", 3, 0, 0.05}};
  SynthesisOptions o;
  o.noise_std_wsr = 0.5;
  o.wet_threshold = 0.05;
  o.dry_threshold = 0.05;
  o.seed = 99;
  const std::vector<double> wse_times{0.0, 60.0, 120.0}, wsr_times{60.0, 120.0};
  const auto a = synthesize_observations(truth, g, stations, subs, wse_times, wsr_times, o);
  const auto b = synthesize_observations(truth, g, stations, subs, wse_times, wsr_times, o);
  CHECK(a == b);
  REQUIRE(a.wse.size() == 6);
  REQUIRE(a.wsr.size() == 4);
  CHECK(a.wse[0].dry);
  CHECK(a.wse[0].value == 2.0);
  CHECK_FALSE(a.wse[2].dry);
  for (const auto& r : a.wsr) {
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
  }
  o.seed = 100;
  CHECK_FALSE(synthesize_observations(truth, g, stations, subs, wse_times, wsr_times, o) == a);
  CHECK_THROWS_AS(synthesize_observations(truth, g, stations, subs, std::vector<double>{30.0}, {}, o), DomainError);

  const auto w = a.window(0.0, 60.0);
  CHECK(w.wse.size() == 2);
  CHECK(w.wsr.size() == 2);
  CHECK(a.wse_times() == wse_times);
  CHECK(a.wsr_times() == wsr_times);
}

TEST_CASE("observation files round trip") {
  const auto g = grid_4x2();
  const auto subs = subdomains_from_grid(g, 0.05);
  const std::vector<GaugeStation> stations{{"up", 1, 0, 0.05}, {"down", 3, 1, 0.1}};
  ObservationSet obs;
  obs.wse.push_back({60.0, 1, 4.5 + 1.0 / 3.0, 0.1, false});
  obs.wse.push_back({120.0, 0, 2.0, 0.05, true});
  obs.wsr.push_back({60.0, 1, 0.125, 0.05});
  std::stringstream ss;
  write_observations(ss, obs, stations, subs);
  CHECK(read_observations(ss, stations, subs) == obs);

  std::stringstream st;
  write_stations(st, stations);
  const auto back = read_stations(st, g);
  REQUIRE(back.size() == 2);
  CHECK(back[1].name == "down");
  CHECK(back[1].sigma == 0.1);

  std::istringstream bad("wse,60,nowhere,1.0,0.05,0\n");
  CHECK_THROWS_AS(read_observations(bad, stations, subs, "obs.csv"), FormatError);
}

TEST_CASE("wet/dry maps are written north row first") {
  const auto g = grid_4x2();
  const std::vector<std::uint8_t> wet{1, 0, 0, 0, 0, 0, 0, 1};
  std::ostringstream csv, pgm;
  write_wet_dry_map(csv, g, wet, MapFormat::csv);
  CHECK(csv.str() == "0,0,0,1\n1,0,0,0\n");
  write_wet_dry_map(pgm, g, wet, MapFormat::pgm);
  CHECK(pgm.str().rfind("P2", 0) == 0);
}
