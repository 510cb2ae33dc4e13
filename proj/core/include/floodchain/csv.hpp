#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace floodchain::csv {

struct Row {
  int line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

// Splits on commas, trims surrounding whitespace. Blank lines and lines whose
// first non-blank character is '#' are skipped.
std::vector<Row> read(std::istream& in);
std::vector<Row> read_file(const std::filesystem::path& path);

// Shortest representation that parses back to the identical double.
std::string format(double value);

double parse_double(std::string_view text, const std::string& source = {}, int line = 0);
long long parse_int(std::string_view text, const std::string& source = {}, int line = 0);

// Joins already-formatted fields with commas and a trailing newline.
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace floodchain::csv
