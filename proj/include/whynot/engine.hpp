#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whynot/plan.hpp"
#include "whynot/type.hpp"
#include "whynot/value.hpp"

namespace whynot {

/// A stored nested relation: its bag type and its rows.
struct Relation {
  TypePtr type;
  Value rows;
};

using Database = std::map<std::string, Relation>;
using DbSchema = std::map<std::string, TypePtr>;
/// Output bag type of every operator, keyed by operator id.
using SchemaMap = std::map<int, TypePtr>;

DbSchema schema_of(const Database& db);

std::vector<std::string> split_path(std::string_view path);
std::string join_path(const std::vector<std::string>& segments, std::size_t from = 0);

/// Type reached by following `path` through tuple attributes. Throws
/// UnknownAttribute for missing names and KindMismatch when a non-final
/// segment is not a tuple.
TypePtr resolve_path(const Type& tuple_type, std::string_view path);
/// Non-throwing variant.
TypePtr try_resolve_path(const Type& tuple_type, std::string_view path);
/// Value at `path`; null when an intermediate value is null.
Value get_path(const Value& tuple, std::string_view path);

/// Output bag type of one operator given its input bag types.
TypePtr output_type(const OperatorNode& node, const std::vector<TypePtr>& inputs, const DbSchema& db);
SchemaMap infer_schema(const QueryPlan& plan, const DbSchema& db);

/// Result of one operator over already evaluated inputs.
Value apply_operator(const OperatorNode& node, const std::vector<Value>& inputs, const std::vector<TypePtr>& input_types,
                     const Database& db);
Value evaluate(const QueryPlan& plan, const Database& db);
/// Output of every operator.
std::map<int, Value> evaluate_all(const QueryPlan& plan, const Database& db);

/// Type-checks a predicate against a tuple type (UnknownAttribute, TypeMismatch).
void check_predicate(const Predicate& p, const Type& tuple_type);
/// Comparisons involving null are false; `not` of such a comparison is false too.
bool eval_predicate(const Predicate& p, const Value& tuple);
bool compare_values(const Value& a, CmpOp op, const Value& b);

/// Conjunction of attribute equalities between the two join sides.
struct EquiKeys {
  std::vector<std::string> left;
  std::vector<std::string> right;
};
std::optional<EquiKeys> equi_keys(const Predicate& p, const Type& left, const Type& right);

// Per-tuple building blocks shared by evaluation and tracing.

struct FlattenPiece {
  Value tuple;
  std::uint64_t multiplicity = 1;
  bool padded = false;  // produced only by outer flatten (empty/null attribute)
};

/// Outer-flatten of one tuple; for inner flatten drop the padded piece.
std::vector<FlattenPiece> flatten_tuple(const OperatorParams& params, const Type& input_tuple_type,
                                        const Value& tuple);
Value project_row(const OperatorParams& params, const Value& tuple);
Value rename_row(const OperatorParams& params, const Value& tuple);
Value tuple_nest_row(const OperatorParams& params, const Value& tuple);
/// Splits a tuple into (grouping key over the non-nested attributes, nested part).
std::pair<Value, Value> nest_split(const std::vector<std::string>& attrs, const Value& tuple);
Value aggregate_row(const OperatorParams& params, const Value& tuple);
Value aggregate_bag(AggFn fn, const Value& bag);

}  // namespace whynot
