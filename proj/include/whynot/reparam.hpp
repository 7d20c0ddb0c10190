#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "whynot/engine.hpp"
#include "whynot/nip.hpp"
#include "whynot/plan.hpp"

namespace whynot {

/// Φ = ⟨Q, D, t⟩.
struct WhyNotQuestion {
  QueryPlan plan;
  Database db;
  Nip tuple;
};

/// Checks that `tuple` fits the root type (TypeMismatch) and that no result
/// tuple matches it yet (PreconditionViolated).
void validate_question(const WhyNotQuestion& q);

/// Result tuples matching the pattern.
bool has_match(const Value& result, const Nip& tuple);

/// Constants per attribute path of an operator input.
using ActiveDomain = std::map<std::string, std::vector<Value>>;

/// Distinct values of every primitive attribute reachable through tuples.
ActiveDomain active_domain(const Value& relation, const Type& tuple_type);

/// One admissible change: the operator's parameters after the change.
struct ParamChange {
  int op_id = 0;
  OperatorParams params;
  std::string description;
};

/// Single-step admissible parameter changes of one operator. Parameter-free
/// operators yield nothing. `inputs` are the operator's input bag types.
std::vector<ParamChange> admissible_changes(const OperatorNode& node, const std::vector<TypePtr>& inputs,
                                            const ActiveDomain& domain);

/// Every parameter setting reachable by combining admissible changes (the
/// cartesian product of per-slot choices); the original setting comes first.
std::vector<OperatorParams> param_grid(const OperatorNode& node, const std::vector<TypePtr>& inputs,
                                       const ActiveDomain& domain);

/// Applies changes in order, re-validating schemas after each step.
/// Throws SchemaBroken when a reference becomes invalid and RootSchemaChanged
/// when the result type differs from the original one.
QueryPlan apply_changes(const QueryPlan& plan, const std::vector<ParamChange>& changes, const DbSchema& db);

bool is_successful(const QueryPlan& reparameterized, const Database& db, const Nip& tuple);

struct ChangedSetResult {
  std::vector<int> ops;      // Δ, sorted
  std::uint64_t d = 0;       // minimal result distance among witnesses
  QueryPlan witness;         // a successful reparameterization achieving d
};

struct OracleReport {
  std::vector<ChangedSetResult> successful;  // every Δ with at least one SR
  std::vector<ChangedSetResult> msrs;        // the minimal ones
  std::uint64_t combinations = 0;            // parameter settings visited
};

/// Exhaustive search over the admissible grids. Throws BudgetExceeded when
/// more than `budget` parameter settings would be visited.
OracleReport exact_explanations_oracle(const WhyNotQuestion& q, std::uint64_t budget);

/// Minimal elements under (Δ ⊆, d ≤).
std::vector<ChangedSetResult> minimal_results(const std::vector<ChangedSetResult>& all);

}  // namespace whynot
