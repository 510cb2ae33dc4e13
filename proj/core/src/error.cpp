#include "floodchain/error.hpp"

#include <sstream>

namespace floodchain {

namespace {

std::string format_location(const std::string& what, const std::string& source, int line) {
  if (source.empty()) return what;
  std::ostringstream os;
  os << source;
  if (line > 0) os << ':' << line;
  os << ": " << what;
  return os.str();
}

std::string format_instability(double time, int i, int j, const std::string& field) {
  std::ostringstream os;
  os << "non-finite " << field << " at t=" << time << " s in cell (" << i << ',' << j << ')';
  return os.str();
}

}  // namespace

FormatError::FormatError(const std::string& what, std::string source, int line)
    : std::runtime_error(format_location(what, source, line)), source_(std::move(source)), line_(line) {}

InstabilityError::InstabilityError(double time, int i, int j, const std::string& field)
    : std::runtime_error(format_instability(time, i, j, field)), time_(time), i_(i), j_(j) {}

}  // namespace floodchain
