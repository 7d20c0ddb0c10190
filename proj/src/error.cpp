#include "whynot/error.hpp"

namespace whynot {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::HeterogeneousBag: return "HeterogeneousBag";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::InvalidType: return "InvalidType";
    case ErrorCode::InvalidNip: return "InvalidNip";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::DuplicateAttribute: return "DuplicateAttribute";
    case ErrorCode::AggregationOnNonBag: return "AggregationOnNonBag";
    case ErrorCode::MalformedPlan: return "MalformedPlan";
    case ErrorCode::SchemaBroken: return "SchemaBroken";
    case ErrorCode::RootSchemaChanged: return "RootSchemaChanged";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::UnsupportedConstraint: return "UnsupportedConstraint";
    case ErrorCode::InvalidAlternative: return "InvalidAlternative";
    case ErrorCode::TooManyAlternatives: return "TooManyAlternatives";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::NonEquiJoin: return "NonEquiJoin";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string_view error_module(ErrorCode code) {
  switch (code) {
    case ErrorCode::HeterogeneousBag:
    case ErrorCode::TypeMismatch:
    case ErrorCode::InvalidType:
    case ErrorCode::InvalidNip:
      return "nested_model";
    case ErrorCode::UnknownAttribute:
    case ErrorCode::KindMismatch:
    case ErrorCode::DuplicateAttribute:
    case ErrorCode::AggregationOnNonBag:
    case ErrorCode::MalformedPlan:
      return "nrab_engine";
    case ErrorCode::SchemaBroken:
    case ErrorCode::RootSchemaChanged:
    case ErrorCode::BudgetExceeded:
      return "reparam";
    case ErrorCode::UnsupportedConstraint:
      return "backtrace";
    case ErrorCode::InvalidAlternative:
    case ErrorCode::TooManyAlternatives:
      return "alternatives";
    case ErrorCode::DuplicateLabel:
    case ErrorCode::NonEquiJoin:
      return "tracing";
    case ErrorCode::PreconditionViolated:
      return "explain";
    case ErrorCode::ParseError:
    case ErrorCode::SchemaViolation:
    case ErrorCode::ConfigError:
      return "cli";
  }
  return "unknown";
}

std::string Error::qualified() const {
  std::string out(error_module(code_));
  out += '.';
  out += error_code_name(code_);
  out += ": ";
  out += what();
  return out;
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace whynot
