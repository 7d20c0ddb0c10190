#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "whynot/backtrace.hpp"
#include "whynot/engine.hpp"
#include "whynot/json_io.hpp"
#include "whynot/plan.hpp"

namespace whynot {

/// Source attribute path → alternative paths of the same relation and type.
/// Keys apply to every relation that has the path.
using AttributeAlternatives = std::map<std::string, std::vector<std::string>>;

AttributeAlternatives alternatives_from_json(const Json& j);
Json alternatives_to_json(const AttributeAlternatives& alts);

/// Throws InvalidAlternative when a key matches no relation or an alternative
/// is missing or differently typed in a relation holding the key.
void validate_alternatives(const AttributeAlternatives& alts, const DbSchema& db);

/// Parameter slot of one operator.
using SlotKey = std::pair<int, std::string>;

struct SchemaAlternative {
  int index = 1;                                // 1 = original
  std::map<SlotKey, std::string> substitutions;  // changed reference slots only
  QueryPlan plan;                               // plan with substitutions applied
  BacktraceResult bt;                           // patterns and associations under this alternative

  /// Operators whose parameters the substitutions change.
  std::vector<int> changed_ops() const;
};

/// Image of a source attribute path of the relation read by `table_op` at the
/// input of operator `at` (exclusive); nullopt when a projection drops it.
std::optional<std::string> forward_path(const QueryPlan& plan, int table_op, int at, const std::string& path);

/// Cartesian expansion of the red-association slots (bottom-up, choices in
/// configuration order), pruned when a substituted reference is unreachable,
/// the plan no longer type-checks, or the root type changes. S_1 is always
/// first. Throws TooManyAlternatives beyond `max_sas`.
std::vector<SchemaAlternative> enumerate_sas(const BacktraceResult& bt, const AttributeAlternatives& alts,
                                             const QueryPlan& plan, const DbSchema& db, std::size_t max_sas = 16);

}  // namespace whynot
