#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "floodchain/anamorphosis.hpp"
#include "floodchain/error.hpp"

using namespace floodchain;
using namespace floodchain::anamorphosis;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One-sample Kolmogorov-Smirnov statistic against the standard normal.
double ks_statistic(std::vector<double> z) {
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

// Asymptotic 1% critical values, one-sample and two-sample.
double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }
double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double a = static_cast<double>(n), b = static_cast<double>(m);
  return 1.6276 * std::sqrt((a + b) / (a * b));
}

template <class Dist>
std::vector<double> draw(Dist dist, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

std::vector<double> beta_half(std::size_t n, std::uint64_t seed) {
  // Beta(1/2, 1/2) is the arcsine law: sin^2(pi U / 2).
  const double pi = std::acos(-1.0);
  auto u = draw(std::uniform_real_distribution<double>(0.0, 1.0), n, seed);
  for (auto& v : u) v = std::pow(std::sin(0.5 * pi * v), 2.0);
  return u;
}

}  // namespace

TEST_CASE("normal quantile reference values") {
  CHECK(normal_quantile(1.0 / 6.0) == doctest::Approx(-0.967421566101701).epsilon(1e-13));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
}

TEST_CASE("three-point map uses plotting positions (i - 0.5) / m") {
  const std::vector<double> x{0.0, 0.5, 1.0};
  const auto map = AnamorphosisMap::fit(x);
  const double s = -0.967421566101701;
  CHECK(map.forward(0.0) == doctest::Approx(s).epsilon(1e-13));
  CHECK(map.forward(0.5) == doctest::Approx(0.0));
  CHECK(map.forward(1.0) == doctest::Approx(-s).epsilon(1e-13));
  CHECK(map.forward(0.25) == doctest::Approx(0.5 * s).epsilon(1e-13));
  CHECK(map.forward(0.3) == doctest::Approx(0.4 * s).epsilon(1e-13));
  CHECK(map.inverse(0.5 * s) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("tied samples share one knot at the mean score") {
  const std::vector<double> x{0.0, 1.0, 0.0, 0.0};
  const auto map = AnamorphosisMap::fit(x);
  REQUIRE(map.knot_values().size() == 2);
  CHECK(map.knot_scores()[0] == doctest::Approx(-0.3834497934586693).epsilon(1e-13));
  CHECK(map.knot_scores()[1] == doctest::Approx(1.1503493803760079).epsilon(1e-13));
  CHECK(map.sample_count() == 4);
}

TEST_CASE("tails extrapolate linearly and are clamped") {
  const std::vector<double> x{0.0, 0.5, 1.0};
  const auto map = AnamorphosisMap::fit(x);
  const double s = 0.967421566101701;
  CHECK(map.forward(1.5) == doctest::Approx(2.0 * s));
  CHECK(map.forward(100.0) == 4.0);
  CHECK(map.forward(-100.0) == -4.0);
  AnamorphosisOptions unit;
  unit.unit_interval = true;
  const auto wsr = AnamorphosisMap::fit(x, unit);
  CHECK(wsr.inverse(4.0) == 1.0);
  CHECK(wsr.inverse(-4.0) == 0.0);
  CHECK(map.inverse(2.0 * s) == doctest::Approx(1.5));
}

TEST_CASE("degenerate ensembles behave as the identity") {
  const std::vector<double> x{0.3, 0.3, 0.3};
  const auto map = AnamorphosisMap::fit(x);
  CHECK(map.degenerate());
  CHECK(map.forward(0.7) == 0.7);
  CHECK(map.inverse(-0.2) == -0.2);
  CHECK_THROWS_AS(AnamorphosisMap::fit(std::vector<double>{1.0}), DomainError);
  CHECK_THROWS_AS(AnamorphosisMap::fit(std::vector<double>{1.0, NAN}), DomainError);
}

TEST_CASE("round trip is the identity at sample points") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto x = draw(std::lognormal_distribution<double>(0.0, 1.0), 200, seed);
    // Inject ties and saturated values as in WSR ensembles.
    for (std::size_t i = 0; i < 20; ++i) x[i] = 0.0;
    for (std::size_t i = 20; i < 30; ++i) x[i] = 1.0;
    const auto map = AnamorphosisMap::fit(x);
    for (double v : x) REQUIRE(std::abs(map.inverse(map.forward(v)) - v) <= 1e-12);
  }
}

TEST_CASE("forward map is monotone") {
  const auto x = draw(std::normal_distribution<double>(0.0, 3.0), 50, 4);
  const auto map = AnamorphosisMap::fit(x);
  double prev = -INFINITY;
  for (double v = -20.0; v <= 20.0; v += 0.01) {
    const double s = map.forward(v);
    CHECK(s >= prev);
    prev = s;
  }
}

TEST_CASE("transformed samples pass a KS test against the standard normal") {
  const std::size_t m = 200;
  const double crit = ks_critical_1pct(m);
  const std::vector<std::pair<const char*, std::vector<double>>> sources{
      {"uniform", draw(std::uniform_real_distribution<double>(0.0, 1.0), m, 101)},
      {"beta(0.5,0.5)", beta_half(m, 202)},
      {"lognormal", draw(std::lognormal_distribution<double>(0.0, 1.0), m, 303)},
  };
  const std::vector<std::vector<double>> fresh{
      draw(std::uniform_real_distribution<double>(0.0, 1.0), m, 111),
      beta_half(m, 212),
      draw(std::lognormal_distribution<double>(0.0, 1.0), m, 313),
  };
  for (std::size_t k = 0; k < sources.size(); ++k) {
    CAPTURE(sources[k].first);
    const auto map = AnamorphosisMap::fit(sources[k].second);
    std::vector<double> z;
    for (double v : sources[k].second) z.push_back(map.forward(v));
    CHECK(ks_statistic(z) < crit);
    // Independent draw through the fitted map: the map carries the sampling
    // error of its own sample, so the two-sample critical value applies.
    z.clear();
    for (double v : fresh[k]) z.push_back(map.forward(v));
    CHECK(ks_statistic(z) < ks_critical_1pct(m, m));
    // The raw skewed sources do not pass.
    if (k == 2) CHECK(ks_statistic(sources[k].second) > crit);
  }
}

TEST_CASE("knot dump format") {
  const auto map = AnamorphosisMap::fit(std::vector<double>{0.0, 1.0});
  std::ostringstream out;
  write_knots(out, map, "w0");
  CHECK(out.str().find("w0,0,0,") == 0);
}
