#pragma once

#include <stdexcept>
#include <string>

namespace mmpa {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (bad value, wrong port count, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A matrix needed for a conversion or solve is numerically singular.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double frequency_hz)
      : Error(what), frequency_hz_(frequency_hz) {}
  double frequency_hz() const noexcept { return frequency_hz_; }

 private:
  double frequency_hz_;
};

// An analysis ran but could not produce a result (non-convergence, resonance).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

// Text input (netlist, Touchstone, CLI range spec) is malformed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string source = {}, int line = 0)
      : Error(format(what, source, line)), source_(std::move(source)), line_(line) {}
  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& source, int line) {
    if (line <= 0) return source.empty() ? what : source + ": " + what;
    return (source.empty() ? std::string("line ") : source + ":") + std::to_string(line) + ": " + what;
  }
  std::string source_;
  int line_;
};

}  // namespace mmpa
