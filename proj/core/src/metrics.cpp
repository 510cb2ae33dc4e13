#include "floodchain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "floodchain/csv.hpp"
#include "floodchain/error.hpp"

namespace floodchain::metrics {

double rmse(std::span<const double> sim, std::span<const double> ref) {
  if (sim.size() != ref.size()) throw DomainError("rmse: series lengths differ");
  if (sim.empty()) throw DomainError("rmse: empty series");
  double sum = 0.0;
  for (std::size_t k = 0; k < sim.size(); ++k) {
    const double d = sim[k] - ref[k];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(sim.size()));
}

ContingencyMap contingency(std::span<const std::uint8_t> sim_wet, std::span<const std::uint8_t> ref_wet, int nx,
                           int ny, std::span<const std::uint8_t> mask) {
  if (nx <= 0 || ny <= 0) throw DomainError("contingency: grid dimensions must be positive");
  const auto cells = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  if (sim_wet.size() != cells || ref_wet.size() != cells || (!mask.empty() && mask.size() != cells))
    throw DomainError("contingency: map dimensions differ");
  ContingencyMap map;
  map.nx = nx;
  map.ny = ny;
  map.labels.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    Label& label = map.labels[c];
    if (!mask.empty() && mask[c] == 0) {
      label = Label::excluded;
      continue;
    }
    const bool s = sim_wet[c] != 0;
    const bool r = ref_wet[c] != 0;
    if (s && r) {
      label = Label::hit;
      ++map.hits;
    } else if (r) {
      label = Label::miss;
      ++map.misses;
    } else if (s) {
      label = Label::false_alarm;
      ++map.false_alarms;
    } else {
      label = Label::correct_negative;
      ++map.correct_negatives;
    }
  }
  return map;
}

std::optional<double> csi(const ContingencyMap& map) {
  const std::size_t denom = map.hits + map.misses + map.false_alarms;
  if (denom == 0) return std::nullopt;
  return 100.0 * static_cast<double>(map.hits) / static_cast<double>(denom);
}

void write_contingency(std::ostream& out, const ContingencyMap& map) {
  for (int j = map.ny - 1; j >= 0; --j) {
    std::string line(static_cast<std::size_t>(map.nx), ' ');
    for (int i = 0; i < map.nx; ++i)
      line[static_cast<std::size_t>(i)] =
          static_cast<char>(map.labels[static_cast<std::size_t>(j) * static_cast<std::size_t>(map.nx) +
                                       static_cast<std::size_t>(i)]);
    out << line << '\n';
  }
}

ContingencyMap read_contingency(std::istream& in, const std::string& source) {
  std::vector<std::string> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!lines.empty() && line.size() != lines.front().size())
      throw FormatError("contingency rows differ in length", source, number);
    for (char c : line)
      if (std::string_view("HMFN.").find(c) == std::string_view::npos)
        throw FormatError(std::string("unknown contingency label '") + c + "'", source, number);
    lines.push_back(line);
  }
  if (lines.empty()) throw FormatError("empty contingency map", source, number);
  ContingencyMap map;
  map.nx = static_cast<int>(lines.front().size());
  map.ny = static_cast<int>(lines.size());
  map.labels.resize(static_cast<std::size_t>(map.nx) * static_cast<std::size_t>(map.ny));
  for (int j = 0; j < map.ny; ++j) {
    const auto& row = lines[static_cast<std::size_t>(map.ny - 1 - j)];
    for (int i = 0; i < map.nx; ++i) {
      const auto label = static_cast<Label>(row[static_cast<std::size_t>(i)]);
      map.labels[static_cast<std::size_t>(j) * static_cast<std::size_t>(map.nx) + static_cast<std::size_t>(i)] = label;
      switch (label) {
        case Label::hit: ++map.hits; break;
        case Label::miss: ++map.misses; break;
        case Label::false_alarm: ++map.false_alarms; break;
        case Label::correct_negative: ++map.correct_negatives; break;
        case Label::excluded: break;
      }
    }
  }
  return map;
}

SummaryTable summarize(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw DomainError("summarize: no reports");
  SummaryTable table;
  table.stations = reports.front().stations;
  table.dates = reports.front().dates;
  for (const auto& r : reports) {
    if (r.stations != table.stations || r.dates != table.dates)
      throw DomainError("summarize: experiments were evaluated on different observation sets");
    if (r.rmse.size() != r.stations.size() || r.csi.size() != r.dates.size())
      throw DomainError("summarize: report '" + r.experiment + "' is incomplete");
    table.rows.push_back(r);
  }
  return table;
}

namespace {

std::string date_label(double t) { return csv::format(t); }

}  // namespace

void write_summary_csv(std::ostream& out, const SummaryTable& table) {
  std::vector<std::string> header{"experiment"};
  for (const auto& s : table.stations) header.push_back("rmse_" + s);
  for (double d : table.dates) header.push_back("csi_" + date_label(d));
  csv::write_row(out, header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.experiment};
    for (double v : r.rmse) row.push_back(csv::format(v));
    for (const auto& c : r.csi) row.push_back(c ? csv::format(*c) : "NA");
    csv::write_row(out, row);
  }
}

void write_summary_text(std::ostream& out, const SummaryTable& table) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"experiment"};
  for (const auto& s : table.stations) header.push_back("RMSE " + s + " [m]");
  for (double d : table.dates) header.push_back("CSI t=" + date_label(d) + " [%]");
  cells.push_back(header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.experiment};
    for (double v : r.rmse) row.push_back(fmt::format("{:.3f}", v));
    for (const auto& c : r.csi) row.push_back(c ? fmt::format("{:.2f}", *c) : "n/a");
    cells.push_back(row);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == 0)
        line += fmt::format("{:<{}}", row[k], width[k]);
      else
        line += fmt::format("  {:>{}}", row[k], width[k]);
    }
    out << line << '\n';
  }
}

}  // namespace floodchain::metrics
