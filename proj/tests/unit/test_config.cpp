#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>

#include "floodchain/config.hpp"
#include "floodchain/error.hpp"

using namespace floodchain;
using namespace floodchain::config;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.yaml");
}

int error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    CHECK(e.source() == "test.yaml");
    return e.line();
  }
  FAIL("expected FormatError");
  return -1;
}

}  // namespace

TEST_CASE("an empty document yields the defaults") {
  const auto cfg = parse("");
  const ExperimentConfig defaults;
  CHECK(cfg.experiment == Experiment::IGDA);
  CHECK(cfg.forcing == ForcingSource::hydrologic);
  CHECK(cfg.scenario.nx == defaults.scenario.nx);
  CHECK(cfg.da.members == 20);
  CHECK(cfg.window() == 10800.0);
  CHECK(cfg.extent_probability == 0.5);
  CHECK(cfg.injections.empty());
}

TEST_CASE("the shipped default config parses") {
  const auto cfg = load_config(FLOODCHAIN_CONFIG_DIR "/default.yaml");
  CHECK(cfg.experiment == Experiment::IGDA);
  CHECK(cfg.injections.size() == 3);
  CHECK(cfg.observations.wsr_times == std::vector<double>{32400.0, 43200.0, 54000.0});
  CHECK(cfg.da.spread_friction == std::vector<double>{3.0, 3.0});
  CHECK(cfg.key_lines.at("assimilation.members") > 0);
}

TEST_CASE("explicit keys override defaults") {
  const auto cfg = parse(
      "experiment: IDA\n"
      "forcing: observed\n"
      "assimilation:\n"
      "  members: 8\n"
      "  spreads:\n"
      "    mu: 0.1\n"
      "metrics:\n"
      "  extent_probability: 0.75\n");
  CHECK(cfg.experiment == Experiment::IDA);
  CHECK(cfg.forcing == ForcingSource::observed);
  CHECK(cfg.da.members == 8);
  CHECK(cfg.da.spread_mu == 0.1);
  CHECK(cfg.extent_probability == 0.75);
  CHECK(cfg.key_lines.at("assimilation.members") == 4);
}

TEST_CASE("unknown keys are reported with their line") {
  CHECK(error_line("version: 1\nscenario:\n  nx: 40\n  nxx: 3\n") == 4);
  CHECK(error_line("bogus: 1\n") == 1);
}

TEST_CASE("type mismatches and syntax errors carry a line") {
  CHECK(error_line("scenario:\n  nx: many\n") == 2);
  CHECK(error_line("scenario: [1, 2\n") > 0);
}

TEST_CASE("semantic validation names the offending key") {
  CHECK(error_line("version: 2\n") == 1);
  CHECK(error_line("experiment: IGDA\nobservations:\n  wsr_times: []\n") == 3);
  CHECK(error_line("metrics:\n  extent_probability: 0\n") == 2);
  CHECK(error_line("metrics:\n  extent_probability: 1.5\n") == 2);
  CHECK(error_line("assimilation:\n  members: 1\n") == 2);
  CHECK(error_line("experiment: IDA\nassimilation:\n  selection: wse+wsr\n") == 3);
  CHECK(error_line("truth:\n  injections:\n    - {time: 1000, subdomain: 0, depth: 0.1}\n") == 3);
}

TEST_CASE("experiment and forcing names") {
  CHECK(parse_experiment("OL") == Experiment::OL);
  CHECK(to_string(Experiment::IGDA) == "IGDA");
  CHECK(parse_forcing("hydrologic") == ForcingSource::hydrologic);
  CHECK(to_string(ForcingSource::observed) == "observed");
  CHECK_THROWS_AS(parse_experiment("EnKF"), DomainError);
  CHECK_THROWS_AS(parse_forcing("radar"), DomainError);
}

TEST_CASE("cycle settings follow the experiment") {
  const auto cfg = parse("");
  const auto ol = cycle_config(cfg, Experiment::OL);
  CHECK(ol.members == 1);
  CHECK(ol.selection == assimilation::ObservationSelection::none);
  const auto ida = cycle_config(cfg, Experiment::IDA);
  CHECK(ida.members == 20);
  CHECK(ida.selection == assimilation::ObservationSelection::wse);
  CHECK_FALSE(ida.correct_state);
  const auto igda = cycle_config(cfg, Experiment::IGDA);
  CHECK(igda.selection == assimilation::ObservationSelection::wse_wsr);
  CHECK(igda.correct_state);
  CHECK(igda.spreads.delta_h == cfg.da.spread_delta_h);
  CHECK(igda.window == cfg.window());
}

TEST_CASE("canonical form is a fixed point with a stable hash") {
  const auto cfg = load_config(FLOODCHAIN_CONFIG_DIR "/default.yaml");
  const auto text = canonical(cfg);
  const auto again = parse(text);
  CHECK(canonical(again) == text);
  CHECK(config_hash(again) == config_hash(cfg));
  CHECK(config_hash(parse("")) == config_hash(parse("")));

  auto changed = cfg;
  changed.da.seed += 1;
  CHECK(config_hash(changed) != config_hash(cfg));
}
