#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace calitr {

enum class Errc {
  MissingFile,
  ParseError,
  MissingColumn,
  NonBinaryTreatment,
  NonFinite,
  SingleArm,
  TooFewRows,
  IndexOutOfRange,
  UnsupportedMoment,
  InvalidArgument,
  DomainViolation,
  NotConverged,
  Infeasible,
  NonPositiveWeight,
  Separation,
  RankDeficient,
  TooFewObservations,
  DegenerateCovariate,
  LengthMismatch,
  SingularG,
  DimensionTooLarge,
  DimensionMismatch,
  UnsupportedScenario,
  SchemaMismatch,
  EmptyInput,
};

// Validation errors come from bad inputs; numerical errors from solvers that
// could not produce an answer on otherwise valid inputs. The CLI maps them to
// exit codes 1 and 2.
enum class ErrorKind { Validation, Numerical };

std::string_view code_string(Errc code) noexcept;
ErrorKind kind_of(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return code_string(code_); }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  Errc code_;
};

}  // namespace calitr
