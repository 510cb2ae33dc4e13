#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include "floodchain/error.hpp"
#include "floodchain/routing.hpp"

using namespace floodchain;
using namespace floodchain::routing;

namespace {

struct RandomTree {
  RiverNetwork network;
  MuskingumParams params;
  std::vector<std::vector<std::size_t>> upstream;  // by listing index, ascending
};

// Random tree listed in shuffled order so topological and listing order differ.
RandomTree random_tree(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  // perm[p] = listing index of the p-th node in generation order; node p > 0
  // drains into a node generated before it, so the root is the outlet.
  std::vector<std::string> ids(n), down(n);
  for (std::size_t r = 0; r < n; ++r) ids[r] = "R" + std::to_string(r);
  std::vector<std::ptrdiff_t> parent(n, -1);
  for (std::size_t p = 1; p < n; ++p) {
    std::uniform_int_distribution<std::size_t> pick(0, p - 1);
    parent[perm[p]] = static_cast<std::ptrdiff_t>(perm[pick(rng)]);
  }
  RandomTree t;
  t.upstream.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    down[r] = parent[r] < 0 ? "-" : ids[static_cast<std::size_t>(parent[r])];
    if (parent[r] >= 0) t.upstream[static_cast<std::size_t>(parent[r])].push_back(r);
  }
  t.network = RiverNetwork(ids, down);
  std::uniform_real_distribution<double> k(1800.0, 7200.0), x(0.0, 0.3);
  for (std::size_t r = 0; r < n; ++r) {
    t.params.k.push_back(k(rng));
    t.params.x.push_back(x(rng));
  }
  return t;
}

// Reach-by-reach Muskingum recursion, reaches visited by depth-first search.
std::vector<double> scalar_step(const RandomTree& t, const std::vector<double>& q, const std::vector<double>& qe0,
                                const std::vector<double>& qe1, double dt) {
  const auto n = q.size();
  std::vector<double> out(n, 0.0);
  std::vector<char> done(n, 0);
  std::function<void(std::size_t)> visit = [&](std::size_t r) {
    if (done[r]) return;
    for (auto u : t.upstream[r]) visit(u);
    const double half = 0.5 * dt, k = t.params.k[r], x = t.params.x[r];
    const double d = k * (1.0 - x) + half;
    const double c1 = (half - k * x) / d, c2 = (half + k * x) / d, c3 = (k * (1.0 - x) - half) / d;
    double in1 = 0.0, in0 = 0.0;
    for (auto u : t.upstream[r]) in1 += out[u];
    for (auto u : t.upstream[r]) in0 += q[u];
    in1 += qe1[r];
    in0 += qe0[r];
    out[r] = c1 * in1 + c2 * in0 + c3 * q[r];
    done[r] = 1;
  };
  for (std::size_t r = 0; r < n; ++r) visit(r);
  return out;
}

}  // namespace

TEST_CASE("coefficients match hand-computed values") {
  auto c = muskingum_coefficients(3600.0, 0.0, 3600.0);
  CHECK(c.c1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(c.c2 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(c.c3 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  c = muskingum_coefficients(1.0, 0.5, 1.0);
  CHECK(c.c1 == doctest::Approx(0.0));
  CHECK(c.c2 == doctest::Approx(1.0));
  CHECK(c.c3 == doctest::Approx(0.0));

  c = muskingum_coefficients(7200.0, 0.25, 3600.0);
  CHECK(c.c1 == doctest::Approx(0.0));
  CHECK(c.c2 == doctest::Approx(0.5));
  CHECK(c.c3 == doctest::Approx(0.5));
}

TEST_CASE("coefficients sum to one") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> k(100.0, 1e5), x(0.0, 0.5), dt(10.0, 1e4);
  for (int i = 0; i < 1000; ++i) {
    const auto c = muskingum_coefficients(k(rng), x(rng), dt(rng));
    CHECK(c.c1 + c.c2 + c.c3 == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("coefficient domain is enforced") {
  CHECK_THROWS_AS(muskingum_coefficients(0.0, 0.2, 60.0), DomainError);
  CHECK_THROWS_AS(muskingum_coefficients(3600.0, 0.6, 60.0), DomainError);
  CHECK_THROWS_AS(muskingum_coefficients(3600.0, -0.1, 60.0), DomainError);
  CHECK_THROWS_AS(muskingum_coefficients(3600.0, 0.2, 0.0), DomainError);
}

TEST_CASE("two-reach chain, one step from rest") {
  // k = dt = 3600 and x = 0 give c1 = c2 = c3 = 1/3.
  RiverNetwork net({"A", "B"}, {"B", "-"});
  MuskingumParams p{{3600.0, 3600.0}, {0.0, 0.0}};
  const std::vector<double> q{0.0, 0.0}, now{1.0, 0.0}, next{1.0, 0.0};
  const auto out = route_step(net, p, q, now, next, 3600.0);
  // Head: c1*1 + c2*1 + c3*0 = 2/3. Tail: c1*(2/3) + c2*0 + c3*0 = 2/9.
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("network structure checks") {
  CHECK_THROWS_AS(RiverNetwork({"A", "A"}, {"-", "-"}), DomainError);
  CHECK_THROWS_AS(RiverNetwork({"A", "B"}, {"C", "-"}), DomainError);
  CHECK_THROWS_AS(RiverNetwork({"A"}, {"A"}), DomainError);
  CHECK_THROWS_AS(RiverNetwork({"A", "B"}, {"B", "A"}), DomainError);
  RiverNetwork net({"C", "A", "B"}, {"-", "B", "C"});
  const auto order = net.topological_order();
  std::vector<std::size_t> pos(3);
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  CHECK(pos[net.index_of("A")] < pos[net.index_of("B")]);
  CHECK(pos[net.index_of("B")] < pos[net.index_of("C")]);
  CHECK(net.connects(net.index_of("C"), net.index_of("B")));
  CHECK_FALSE(net.connects(net.index_of("B"), net.index_of("C")));
  CHECK(net.outlets() == std::vector<std::size_t>{net.index_of("C")});
}

TEST_CASE("matrix routing equals the scalar recursion on random trees") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 20);
    const auto t = random_tree(rng, size(rng));
    const auto n = t.network.size();
    std::uniform_real_distribution<double> flow(0.0, 100.0);
    std::vector<double> q(n), qe0(n), qe1(n);
    for (auto& v : q) v = flow(rng);
    for (auto& v : qe0) v = flow(rng);
    const double dt = 900.0;
    for (int step = 0; step < 40; ++step) {
      for (auto& v : qe1) v = flow(rng);
      const auto matrix = route_step(t.network, t.params, q, qe0, qe1, dt);
      const auto scalar = scalar_step(t, q, qe0, qe1, dt);
      for (std::size_t r = 0; r < n; ++r) REQUIRE(matrix[r] == scalar[r]);
      q = matrix;
      qe0 = qe1;
    }
  }
}

TEST_CASE("routing conserves volume on random trees") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 20);
    const auto t = random_tree(rng, size(rng));
    const auto n = t.network.size();
    const double dt = 900.0;
    LateralInflowSeries inflow;
    std::uniform_real_distribution<double> flow(0.0, 50.0);
    const int steps = 400;
    for (int s = 0; s <= steps; ++s) {
      inflow.times.push_back(s * dt);
      std::vector<double> row(n, 0.0);
      if (s > 0 && s < 40)
        for (auto& v : row) v = flow(rng);
      inflow.values.push_back(row);
    }
    const std::vector<double> q0(n, 0.0);
    const auto routed = route_hydrograph(t.network, t.params, inflow, q0);
    const auto outlets = t.network.outlets();
    double lateral = 0.0, outflow = 0.0;
    for (int s = 0; s < steps; ++s) {
      const auto& a = inflow.values[static_cast<std::size_t>(s)];
      const auto& b = inflow.values[static_cast<std::size_t>(s) + 1];
      for (std::size_t r = 0; r < n; ++r) lateral += 0.5 * dt * (a[r] + b[r]);
      for (auto o : outlets)
        outflow += 0.5 * dt * (routed.values[static_cast<std::size_t>(s)][o] +
                               routed.values[static_cast<std::size_t>(s) + 1][o]);
    }
    const double storage = network_storage(t.network, t.params, routed.values.back(), inflow.values.back()) -
                           network_storage(t.network, t.params, q0, inflow.values.front());
    CHECK(std::abs(lateral - outflow - storage) <= 1e-6 * lateral);
  }
}

TEST_CASE("steady state is preserved") {
  RiverNetwork net({"A", "B", "C"}, {"C", "C", "-"});
  MuskingumParams p{{3600.0, 5400.0, 2700.0}, {0.1, 0.2, 0.3}};
  const std::vector<double> qe{10.0, 20.0, 5.0};
  std::vector<double> q{10.0, 20.0, 35.0};
  for (int s = 0; s < 100; ++s) q = route_step(net, p, q, qe, qe, 600.0);
  CHECK(q[2] == doctest::Approx(35.0).epsilon(1e-12));
}

TEST_CASE("configuration warnings flag dt outside [2kx, k]") {
  RiverNetwork net({"A"}, {"-"});
  MuskingumParams p{{3600.0}, {0.2}};
  CHECK(validate_configuration(net, p, 1800.0).empty());
  CHECK(validate_configuration(net, p, 600.0).size() == 1);
  CHECK(validate_configuration(net, p, 7200.0).size() == 1);
  MuskingumParams bad{{3600.0, 1.0}, {0.2, 0.2}};
  CHECK_THROWS_AS(validate_configuration(net, bad, 600.0), DomainError);
}

TEST_CASE("network file round trip and errors") {
  std::istringstream in("# reach,downstream,k,x\nA,B,3600,0.1\nB,-,5400,0.2\n");
  const auto [net, params] = read_network(in, "net.csv");
  CHECK(net.size() == 2);
  CHECK(params.k[1] == 5400.0);
  std::ostringstream out;
  write_network(out, net, params);
  std::istringstream back(out.str());
  const auto [net2, params2] = read_network(back);
  CHECK(net2.ids() == net.ids());
  CHECK(params2.x == params.x);

  std::istringstream bad("A,B,3600\n");
  try {
    read_network(bad, "bad.csv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 1);
    CHECK(e.source() == "bad.csv");
  }
}
