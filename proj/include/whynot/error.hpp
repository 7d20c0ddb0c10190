#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace whynot {

enum class ErrorCode {
  // nested_model
  HeterogeneousBag,
  TypeMismatch,
  InvalidType,
  InvalidNip,
  // nrab_engine
  UnknownAttribute,
  KindMismatch,
  DuplicateAttribute,
  AggregationOnNonBag,
  MalformedPlan,
  // reparam
  SchemaBroken,
  RootSchemaChanged,
  BudgetExceeded,
  // backtrace / alternatives
  UnsupportedConstraint,
  InvalidAlternative,
  TooManyAlternatives,
  // tracing
  DuplicateLabel,
  NonEquiJoin,
  // explain
  PreconditionViolated,
  // cli
  ParseError,
  SchemaViolation,
  ConfigError,
};

std::string_view error_code_name(ErrorCode code);

/// Module the code belongs to, e.g. "nrab_engine".
std::string_view error_module(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// "module.Code: message"
  std::string qualified() const;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace whynot
