#pragma once

#include <stdexcept>
#include <string>

namespace sgcl {

// Every error raised by the library derives from Error; the kind maps onto the
// CLI exit-code contract (config 2, numeric 3, io 4, divergence 5).
enum class ErrorKind {
  Config,
  Shape,
  Parse,
  Range,
  Consistency,
  Numeric,
  Usage,
  Io,
  Divergence,
  EmptyStatistics,
  DegenerateProbe,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SGCL_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

SGCL_DEFINE_ERROR(ConfigError, Config)
SGCL_DEFINE_ERROR(ShapeError, Shape)
SGCL_DEFINE_ERROR(RangeError, Range)
SGCL_DEFINE_ERROR(ConsistencyError, Consistency)
SGCL_DEFINE_ERROR(UsageError, Usage)
SGCL_DEFINE_ERROR(IoError, Io)
SGCL_DEFINE_ERROR(EmptyStatisticsError, EmptyStatistics)
SGCL_DEFINE_ERROR(DegenerateProbeError, DegenerateProbe)

#undef SGCL_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, long iteration = -1)
      : Error(ErrorKind::Numeric, what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double learning_rate, long step)
      : Error(ErrorKind::Divergence, what), learning_rate_(learning_rate), step_(step) {}
  double learning_rate() const noexcept { return learning_rate_; }
  long step() const noexcept { return step_; }

 private:
  double learning_rate_;
  long step_;
};

}  // namespace sgcl
