#pragma once

#include <stdexcept>
#include <string>

namespace floodchain {

// Precondition violated: bad parameter values, out-of-range indices,
// inconsistent dimensions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input files / configuration.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::string source = {}, int line = 0);

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_ = 0;
};

// The explicit solver produced a non-finite value.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(double time, int i, int j, const std::string& field);

  double time() const noexcept { return time_; }
  int i() const noexcept { return i_; }
  int j() const noexcept { return j_; }

 private:
  double time_;
  int i_;
  int j_;
};

}  // namespace floodchain
