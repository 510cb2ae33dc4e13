#pragma once

// Skill scores: station RMSE, contingency maps and the Critical Success Index.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace floodchain::metrics {

double rmse(std::span<const double> sim, std::span<const double> ref);

enum class Label : char { hit = 'H', miss = 'M', false_alarm = 'F', correct_negative = 'N', excluded = '.' };

struct ContingencyMap {
  int nx = 0;
  int ny = 0;
  std::vector<Label> labels;  // row-major, south row first
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t false_alarms = 0;
  std::size_t correct_negatives = 0;

  std::size_t evaluated() const noexcept { return hits + misses + false_alarms + correct_negatives; }
};

// Per-cell classification of two 0/1 maps. Cells with mask == 0 are labelled
// excluded and left out of the counts; an empty mask evaluates every cell.
ContingencyMap contingency(std::span<const std::uint8_t> sim_wet, std::span<const std::uint8_t> ref_wet, int nx,
                           int ny, std::span<const std::uint8_t> mask = {});

// Percent; empty when nothing is flooded in either map.
std::optional<double> csi(const ContingencyMap& map);

// ny lines of nx labels from {H, M, F, N, .}, north row first.
void write_contingency(std::ostream& out, const ContingencyMap& map);
ContingencyMap read_contingency(std::istream& in, const std::string& source = {});

struct MetricsReport {
  std::string experiment;
  std::vector<std::string> stations;
  std::vector<double> rmse;                // per station [m]
  std::vector<double> dates;               // WSR map times [s]
  std::vector<std::optional<double>> csi;  // per date [%]
};

struct SummaryTable {
  std::vector<std::string> stations;
  std::vector<double> dates;
  std::vector<MetricsReport> rows;
};

// Rows in input order. Throws DomainError if reports disagree on stations or dates.
SummaryTable summarize(std::span<const MetricsReport> reports);

// "experiment,rmse_<station>...,csi_<time>..." with NA for undefined CSI.
void write_summary_csv(std::ostream& out, const SummaryTable& table);
// Aligned columns, RMSE with 3 decimals and CSI with 2.
void write_summary_text(std::ostream& out, const SummaryTable& table);

}  // namespace floodchain::metrics
