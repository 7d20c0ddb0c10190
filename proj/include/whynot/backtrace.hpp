#pragma once

#include <map>
#include <string>
#include <vector>

#include "whynot/engine.hpp"
#include "whynot/json_io.hpp"
#include "whynot/nip.hpp"
#include "whynot/plan.hpp"
#include "whynot/reparam.hpp"

namespace whynot {

/// Links a source attribute of an input relation to either an attribute of
/// the why-not tuple (blue) or an operator parameter (red).
struct Association {
  std::string relation;  // accessed relation
  int table_op = 0;      // table access operator reaching the source
  std::string source;    // attribute path within the relation
  bool blue = false;
  std::string label;     // "t.city" or "sigma3.year"
  int op_id = -1;        // red only
  std::string slot;      // red only: parameter slot, e.g. "theta[0].lhs"

  friend bool operator==(const Association&, const Association&) = default;
};

struct BacktraceResult {
  /// One pattern per accessed relation; conflicting accesses fall back to all-`?`.
  std::map<std::string, Nip> nips;
  /// Pattern per table access operator.
  std::map<int, Nip> leaf_nips;
  /// Constraint on the output tuples of every operator; the root carries t.
  std::map<int, Nip> op_nips;
  std::vector<Association> assoc;
  /// Constraints that had to be relaxed (e.g. on aggregation outputs).
  std::vector<std::string> warnings;
};

/// Top-down rewrite of `tuple` (a pattern over the root's tuple type) into
/// per-operator and per-relation constraints. Selections and joins do not
/// filter the constraint; they only contribute red associations.
BacktraceResult backtrace_plan(const QueryPlan& plan, const DbSchema& db, const Nip& tuple);

/// Validates the question first (TypeMismatch / PreconditionViolated).
BacktraceResult schema_backtrace(const WhyNotQuestion& q);

/// Short operator symbol used in association labels ("sigma", "pi", "F", ...).
std::string op_symbol(OpKind kind);

/// Debug rendering: relation patterns plus one entry per source path with its
/// blue and red labels.
Json backtrace_to_json(const BacktraceResult& bt);

}  // namespace whynot
