#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "whynot/json_io.hpp"
#include "whynot/value.hpp"

namespace whynot {

enum class OpKind {
  TableAccess,
  Projection,
  Renaming,
  Selection,
  Join,
  CrossProduct,
  Union,
  Difference,
  Dedup,
  Flatten,
  TupleNest,
  RelationNest,
  Aggregation,
};

enum class JoinKind { Inner, Left, Right, Full };
enum class FlattenKind { Tuple, Inner, Outer };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class AggFn { Count, Sum, Min, Max, Avg };

std::string_view op_kind_name(OpKind kind);
std::string_view join_kind_name(JoinKind kind);
std::string_view flatten_kind_name(FlattenKind kind);
std::string_view cmp_op_name(CmpOp op);
std::string_view agg_fn_name(AggFn fn);

/// Either an attribute path (dot-separated) or a constant.
struct Operand {
  bool is_attr = false;
  std::string path;
  Value constant;

  static Operand attr(std::string path) { return {true, std::move(path), {}}; }
  static Operand constant_value(Value v) { return {false, {}, std::move(v)}; }
  friend bool operator==(const Operand&, const Operand&) = default;
};

/// Boolean combination of comparisons.
struct Predicate {
  enum class Kind { True, False, Cmp, And, Or, Not };

  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  Operand lhs;
  Operand rhs;
  std::vector<Predicate> children;

  static Predicate always() { return {}; }
  static Predicate never() {
    Predicate p;
    p.kind = Kind::False;
    return p;
  }
  static Predicate compare(Operand lhs, CmpOp op, Operand rhs);
  static Predicate conjunction(std::vector<Predicate> children);
  static Predicate disjunction(std::vector<Predicate> children);
  static Predicate negation(Predicate child);

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Comparisons of a predicate in depth-first order (the order used to name
/// parameter slots `theta[k]`).
std::vector<const Predicate*> comparisons(const Predicate& p);
std::vector<Predicate*> comparisons(Predicate& p);

/// Parameters of an operator. Only the members relevant to the operator kind
/// are meaningful; the rest keep their defaults so that equality compares
/// exactly the parameters.
struct OperatorParams {
  std::string table;                                       // table access
  std::vector<std::string> attrs;                          // projection paths / nesting attrs
  std::vector<std::pair<std::string, std::string>> renames;  // renaming: (to, from)
  Predicate theta;                                         // selection, join
  JoinKind join_kind = JoinKind::Inner;
  FlattenKind flatten_kind = FlattenKind::Inner;
  std::string attr;                                        // flatten
  std::string target;                                      // nesting, aggregation
  AggFn fn = AggFn::Count;
  std::string source;                                      // aggregation

  friend bool operator==(const OperatorParams&, const OperatorParams&) = default;
};

struct OperatorNode {
  int id = 0;
  OpKind kind = OpKind::TableAccess;
  OperatorParams params;
  std::vector<int> inputs;
};

/// Operator tree with stable identifiers.
class QueryPlan {
 public:
  QueryPlan() = default;
  /// Validates arity, unique ids, a single root and tree shape (MalformedPlan).
  explicit QueryPlan(std::vector<OperatorNode> nodes);

  const std::vector<OperatorNode>& nodes() const noexcept { return nodes_; }
  const OperatorNode& node(int id) const;
  bool contains(int id) const { return index_.count(id) != 0; }
  int root() const noexcept { return root_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Operator ids with children before parents; children in input order.
  std::vector<int> post_order() const;
  /// Operator id consuming `id`'s output, or -1 for the root.
  int parent(int id) const;

  /// Copy with one operator's parameters replaced.
  QueryPlan with_params(int id, OperatorParams params) const;
  /// Sub-plan rooted at `id`.
  QueryPlan subplan(int id) const;

 private:
  std::vector<OperatorNode> nodes_;
  std::map<int, std::size_t> index_;
  int root_ = -1;
};

/// Operators whose parameters differ between two plans of the same shape.
std::vector<int> changed_ops(const QueryPlan& a, const QueryPlan& b);
bool same_structure(const QueryPlan& a, const QueryPlan& b);

/// A parameter position holding an attribute reference.
struct AttrRef {
  std::string slot;  // e.g. "attr", "theta[0].lhs", "attrs[1]", "source", "from[0]"
  std::string path;
};

/// Attribute references held by the operator's parameters, in slot order.
std::vector<AttrRef> attribute_refs(const OperatorNode& node);
/// Parameters with the reference in `slot` replaced by `path`.
OperatorParams with_ref(const OperatorNode& node, const std::string& slot, const std::string& path);

QueryPlan plan_from_json(const Json& j);
Json plan_to_json(const QueryPlan& plan);
Predicate predicate_from_json(const Json& j);
Json predicate_to_json(const Predicate& p);

std::string to_string(const Predicate& p);
/// Short human label such as "σ3[year >= 2019]".
std::string describe(const OperatorNode& node);

}  // namespace whynot
