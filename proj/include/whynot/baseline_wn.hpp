#pragma once

#include <vector>

#include "whynot/reparam.hpp"
#include "whynot/tracing.hpp"

namespace whynot {

/// Classic why-not answer: the operators at which every successor of a
/// compatible input tuple is lost.
struct PickyReport {
  std::vector<RowId> compatibles;       // base rows consistent with the backtraced NIPs
  std::vector<Value> compatible_tuples;  // their payloads
  std::vector<int> picky_ops;            // sorted operator ids
};

/// Traces the unmodified query only (no schema alternatives). A row is a
/// successor of a compatible when it descends from one through lineage, is
/// consistent with the backtraced NIP and survives in the original query. An
/// operator is picky when its inputs still hold successors and its output
/// holds none. Throws PreconditionViolated like whynot_pipeline.
PickyReport picky_operators(const WhyNotQuestion& q);

Json picky_report_to_json(const PickyReport& report, const QueryPlan& plan);

}  // namespace whynot
