// floodchain: run the twin experiments from a YAML configuration.
//
//   floodchain run --config FILE [--experiment OL|IDA|IGDA] [--forcing observed|hydrologic] [--seed N] [--out DIR]
//   floodchain matrix --config FILE [--out DIR]
//   floodchain validate --config FILE
//
// FLOODCHAIN_THREADS caps the number of worker threads.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "floodchain/config.hpp"
#include "floodchain/error.hpp"
#include "floodchain/experiment.hpp"

namespace {

namespace fc = floodchain;

unsigned thread_count(unsigned configured) {
  unsigned n = configured ? configured : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FLOODCHAIN_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      spdlog::warn("ignoring FLOODCHAIN_THREADS='{}'", env);
    }
  }
  return n;
}

// Machine-readable report on stderr and, when possible, in the output directory.
int report_failure(const std::string& stage, const std::exception& e, const std::optional<std::filesystem::path>& out) {
  nlohmann::ordered_json j{{"status", "error"}, {"stage", stage}, {"message", e.what()}};
  if (const auto* fe = dynamic_cast<const fc::FormatError*>(&e)) {
    j["source"] = fe->source();
    j["line"] = fe->line();
  }
  std::cerr << j.dump() << '\n';
  if (out) {
    std::error_code ec;
    std::filesystem::create_directories(*out, ec);
    std::ofstream file(*out / "error.json");
    if (file) file << j.dump(2) << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hydrologic-hydraulic flood reanalysis twin experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::string experiment;
  std::string forcing;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log per-window assimilation details");

  auto* run = app.add_subcommand("run", "Run a single experiment");
  run->add_option("--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--experiment", experiment, "OL, IDA or IGDA")->check(CLI::IsMember({"OL", "IDA", "IGDA"}));
  run->add_option("--forcing", forcing, "observed or hydrologic")->check(CLI::IsMember({"observed", "hydrologic"}));
  run->add_option("--seed", seed, "Assimilation seed");
  run->add_option("--out", out_dir, "Output directory (default: config 'output')");

  auto* matrix = app.add_subcommand("matrix", "Run the 6-cell experiment matrix");
  matrix->add_option("--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);
  matrix->add_option("--out", out_dir, "Output directory (default: config 'output')");

  auto* validate = app.add_subcommand("validate", "Check a configuration and exit");
  validate->add_option("--config", config_path, "YAML configuration")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("floodchain"));
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  fc::config::ExperimentConfig cfg;
  try {
    cfg = fc::config::load_config(config_path);
    if (!experiment.empty()) {
      cfg.experiment = fc::config::parse_experiment(experiment);
      cfg.da.selection.clear();
    }
    if (!forcing.empty()) cfg.forcing = fc::config::parse_forcing(forcing);
    if (seed) cfg.da.seed = *seed;
    if (!out_dir.empty()) cfg.output = out_dir;
    cfg.da.threads = thread_count(cfg.da.threads);
    fc::config::validate(cfg);
  } catch (const std::exception& e) {
    return report_failure("config", e, std::nullopt);
  }

  if (*validate) {
    std::cout << "ok " << fmt::format("{:016x}", fc::config::config_hash(cfg)) << '\n';
    return 0;
  }

  const std::filesystem::path out = cfg.output;
  try {
    if (*run) {
      fc::experiment::run_experiment(cfg, out);
    } else {
      fc::metrics::SummaryTable table;
      fc::experiment::run_matrix(cfg, out, &table);
      fc::metrics::write_summary_text(std::cout, table);
    }
  } catch (const std::exception& e) {
    return report_failure(*run ? "run" : "matrix", e, out);
  }
  if (*run) {
    std::ifstream summary(out / "summary.txt");
    std::cout << summary.rdbuf();
  }
  return 0;
}
