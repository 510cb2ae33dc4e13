#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "floodchain/error.hpp"
#include "floodchain/metrics.hpp"

using namespace floodchain;
using namespace floodchain::metrics;

TEST_CASE("rmse of a known series") {
  const std::vector<double> sim{1.0, 2.0, 3.0};
  const std::vector<double> ref{2.0, 2.0, 1.0};
  CHECK(rmse(sim, ref) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(sim, sim) == 0.0);
  CHECK_THROWS_AS(rmse(sim, std::vector<double>{1.0}), DomainError);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST_CASE("contingency labels a 2x2 map with every outcome") {
  // row-major, south row first: (0,0) hit, (1,0) miss, (0,1) false alarm, (1,1) correct negative
  const std::vector<std::uint8_t> sim{1, 0, 1, 0};
  const std::vector<std::uint8_t> ref{1, 1, 0, 0};
  const auto map = contingency(sim, ref, 2, 2);
  CHECK(map.hits == 1);
  CHECK(map.misses == 1);
  CHECK(map.false_alarms == 1);
  CHECK(map.correct_negatives == 1);
  CHECK(map.evaluated() == 4);
  CHECK(map.labels == std::vector<Label>{Label::hit, Label::miss, Label::false_alarm, Label::correct_negative});
  CHECK(*csi(map) == doctest::Approx(100.0 / 3.0));

  std::ostringstream out;
  write_contingency(out, map);
  CHECK(out.str() == "FN\nHM\n");
}

TEST_CASE("csi counts 3 hits, 1 miss and 1 false alarm as 60 percent") {
  const std::vector<std::uint8_t> sim{1, 1, 1, 0, 1, 0};
  const std::vector<std::uint8_t> ref{1, 1, 1, 1, 0, 0};
  const auto map = contingency(sim, ref, 3, 2);
  CHECK(*csi(map) == doctest::Approx(60.0).epsilon(1e-15));
}

TEST_CASE("masked cells are excluded from the counts") {
  const std::vector<std::uint8_t> sim{1, 1, 0, 0};
  const std::vector<std::uint8_t> ref{0, 1, 1, 0};
  const std::vector<std::uint8_t> mask{0, 1, 1, 1};
  const auto map = contingency(sim, ref, 2, 2, mask);
  CHECK(map.labels[0] == Label::excluded);
  CHECK(map.evaluated() == 3);
  CHECK(map.false_alarms == 0);
  CHECK(*csi(map) == doctest::Approx(50.0));
}

TEST_CASE("csi is undefined when both maps are dry") {
  const std::vector<std::uint8_t> dry(6, 0);
  const auto map = contingency(dry, dry, 3, 2);
  CHECK_FALSE(csi(map).has_value());
}

TEST_CASE("contingency rejects mismatched maps") {
  const std::vector<std::uint8_t> a(4, 0);
  const std::vector<std::uint8_t> b(3, 0);
  CHECK_THROWS_AS(contingency(a, b, 2, 2), DomainError);
  CHECK_THROWS_AS(contingency(a, a, 0, 2), DomainError);
  CHECK_THROWS_AS(contingency(a, a, 2, 2, b), DomainError);
}

TEST_CASE("contingency text round trips") {
  const std::vector<std::uint8_t> sim{1, 0, 1, 1, 0, 0};
  const std::vector<std::uint8_t> ref{1, 1, 0, 1, 0, 1};
  const std::vector<std::uint8_t> mask{1, 1, 1, 0, 1, 1};
  const auto map = contingency(sim, ref, 3, 2, mask);
  std::stringstream io;
  write_contingency(io, map);
  const auto back = read_contingency(io, "map.txt");
  CHECK(back.nx == 3);
  CHECK(back.ny == 2);
  CHECK(back.labels == map.labels);
  CHECK(back.hits == map.hits);
  CHECK(back.misses == map.misses);
  CHECK(back.false_alarms == map.false_alarms);
  CHECK(back.correct_negatives == map.correct_negatives);
}

TEST_CASE("contingency reader reports the offending line") {
  std::istringstream ragged("HM\nHMF\n");
  try {
    read_contingency(ragged, "x.txt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad("HX\n");
  CHECK_THROWS_AS(read_contingency(bad), FormatError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_contingency(empty), FormatError);
}

namespace {

MetricsReport report(const std::string& name, double r0, std::optional<double> c0) {
  MetricsReport r;
  r.experiment = name;
  r.stations = {"up", "down"};
  r.rmse = {r0, 2.0 * r0};
  r.dates = {32400.0, 43200.0};
  r.csi = {c0, std::nullopt};
  return r;
}

}  // namespace

TEST_CASE("summary csv keeps input order and writes NA") {
  const std::vector<MetricsReport> reports{report("OL-observed", 0.125, 50.0), report("IDA-observed", 0.1, 62.5)};
  const auto table = summarize(reports);
  std::ostringstream out;
  write_summary_csv(out, table);
  CHECK(out.str() ==
        "experiment,rmse_up,rmse_down,csi_32400,csi_43200\n"
        "OL-observed,0.125,0.25,50,NA\n"
        "IDA-observed,0.1,0.2,62.5,NA\n");
}

TEST_CASE("summary text rounds and aligns") {
  const std::vector<MetricsReport> reports{report("OL", 0.12345, 50.0)};
  std::ostringstream out;
  write_summary_text(out, summarize(reports));
  const auto text = out.str();
  CHECK(text.find("0.123") != std::string::npos);
  CHECK(text.find("0.247") != std::string::npos);
  CHECK(text.find("50.00") != std::string::npos);
  CHECK(text.find("n/a") != std::string::npos);
  std::istringstream lines(text);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header.size() == row.size());
}

TEST_CASE("summarize rejects inconsistent reports") {
  auto a = report("a", 0.1, 1.0);
  auto b = report("b", 0.1, 1.0);
  b.dates = {1.0, 2.0};
  CHECK_THROWS_AS(summarize(std::vector<MetricsReport>{a, b}), DomainError);
  auto c = report("c", 0.1, 1.0);
  c.rmse.pop_back();
  CHECK_THROWS_AS(summarize(std::vector<MetricsReport>{a, c}), DomainError);
  CHECK_THROWS_AS(summarize(std::vector<MetricsReport>{}), DomainError);
}
