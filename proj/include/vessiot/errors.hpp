#ifndef VESSIOT_ERRORS_HPP
#define VESSIOT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vessiot {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Expression text could not be parsed; position is within the offending string.
struct ParseError : Error {
  ParseError(const std::string& msg, int line_, int col_, std::string token_)
      : Error(msg), line(line_), col(col_), token(std::move(token_)) {}
  int line = 1;
  int col = 1;
  std::string token;
};

// Input left the rational/exp/log/power class the engine supports.
struct UnsupportedExpression : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

// Zero test sampled only singular points and cannot decide.
struct InconclusiveZeroTest : Error {
  using Error::Error;
};

struct NonlinearSystem : Error {
  using Error::Error;
};

struct InconsistentSystem : Error {
  using Error::Error;
};

struct OutsideQuadratureClass : Error {
  using Error::Error;
};

struct ChartMismatch : Error {
  using Error::Error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct CascadeDegenerates : Error {
  CascadeDegenerates(const std::string& msg, int stage_) : Error(msg), stage(stage_) {}
  int stage = 0;
};

struct StaleArtifact : Error {
  using Error::Error;
};

struct VerificationFailure : Error {
  using Error::Error;
};

}  // namespace vessiot

#endif
