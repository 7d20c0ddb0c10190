#include "whynot/engine.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "whynot/error.hpp"

namespace whynot {

namespace {

enum class Truth { False, True, Unknown };

Truth eval3(const Predicate& p, const Value& t);

Value operand_value(const Operand& o, const Value& t) { return o.is_attr ? get_path(t, o.path) : o.constant; }

Truth eval3(const Predicate& p, const Value& t) {
  switch (p.kind) {
    case Predicate::Kind::True: return Truth::True;
    case Predicate::Kind::False: return Truth::False;
    case Predicate::Kind::Cmp: {
      Value a = operand_value(p.lhs, t);
      Value b = operand_value(p.rhs, t);
      if (a.is_null() || b.is_null()) return Truth::Unknown;
      return compare_values(a, p.op, b) ? Truth::True : Truth::False;
    }
    case Predicate::Kind::And: {
      Truth out = Truth::True;
      for (const auto& c : p.children) {
        Truth r = eval3(c, t);
        if (r == Truth::False) return Truth::False;
        if (r == Truth::Unknown) out = Truth::Unknown;
      }
      return out;
    }
    case Predicate::Kind::Or: {
      Truth out = Truth::False;
      for (const auto& c : p.children) {
        Truth r = eval3(c, t);
        if (r == Truth::True) return Truth::True;
        if (r == Truth::Unknown) out = Truth::Unknown;
      }
      return out;
    }
    case Predicate::Kind::Not: {
      Truth r = eval3(p.children.at(0), t);
      return r == Truth::Unknown ? r : (r == Truth::True ? Truth::False : Truth::True);
    }
  }
  return Truth::Unknown;
}

TypePtr operand_type(const Operand& o, const Type& tuple_type) {
  if (o.is_attr) return resolve_path(tuple_type, o.path);
  return type_of(o.constant);
}

const Type& element_of(const TypePtr& bag_type) {
  if (!bag_type || !bag_type->is_bag()) fail(ErrorCode::KindMismatch, "operator input is not a relation");
  return *bag_type->element();
}

std::vector<Field> fields_of(const Type& t) { return t.is_tuple() ? t.fields() : std::vector<Field>{}; }

void check_top_level(const Type& tuple_type, const std::string& name) {
  if (!tuple_type.find(name)) {
    fail(ErrorCode::UnknownAttribute, "unknown attribute '" + name + "' in " + to_string(tuple_type));
  }
}

TypePtr nest_output(const OperatorNode& node, const Type& in, bool relation) {
  const auto& p = node.params;
  if (p.attrs.empty()) fail(ErrorCode::MalformedPlan, "nesting needs at least one attribute");
  std::set<std::string> nested(p.attrs.begin(), p.attrs.end());
  if (nested.size() != p.attrs.size()) fail(ErrorCode::DuplicateAttribute, "nesting lists an attribute twice");
  std::vector<Field> kept, inner;
  for (const auto& a : p.attrs) check_top_level(in, a);
  for (const auto& f : in.fields()) (nested.count(f.name) ? inner : kept).push_back(f);
  // Nested attributes keep the order in which they are listed.
  std::sort(inner.begin(), inner.end(), [&](const Field& a, const Field& b) {
    return std::find(p.attrs.begin(), p.attrs.end(), a.name) < std::find(p.attrs.begin(), p.attrs.end(), b.name);
  });
  for (const auto& f : kept) {
    if (f.name == p.target) fail(ErrorCode::DuplicateAttribute, "nesting target '" + p.target + "' already exists");
  }
  auto inner_type = Type::tuple(inner);
  kept.push_back({p.target, relation ? Type::bag(inner_type) : inner_type});
  return Type::tuple(std::move(kept));
}

TypePtr aggregation_result_type(const OperatorParams& p, const Type& in) {
  auto source = resolve_path(in, p.source);
  if (!source->is_bag()) fail(ErrorCode::AggregationOnNonBag, "aggregation source '" + p.source + "' is not a bag");
  if (p.fn == AggFn::Count) return Type::int_();
  const auto& element = *source->element();
  if (element.is_bottom()) return p.fn == AggFn::Min || p.fn == AggFn::Max ? Type::bottom() : Type::int_();
  if (element.fields().size() != 1 || !element.fields()[0].type->is_primitive()) {
    fail(ErrorCode::AggregationOnNonBag, "aggregation source '" + p.source + "' must be a bag of unary tuples");
  }
  const auto& value_type = element.fields()[0].type;
  if (p.fn == AggFn::Min || p.fn == AggFn::Max) return value_type;
  if (value_type->kind() != TypeKind::Int && value_type->kind() != TypeKind::Date) {
    fail(ErrorCode::TypeMismatch, std::string(agg_fn_name(p.fn)) + " needs integer values");
  }
  return Type::int_();
}

std::vector<Value> key_of(const Value& t, const std::vector<std::string>& paths, bool& has_null) {
  std::vector<Value> key;
  key.reserve(paths.size());
  has_null = false;
  for (const auto& p : paths) {
    key.push_back(get_path(t, p));
    if (key.back().is_null()) has_null = true;
  }
  return key;
}

struct KeyHash {
  std::size_t operator()(const std::vector<Value>& k) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& v : k) h = h * 31 + v.hash();
    return h;
  }
};

Value join_values(const OperatorNode& node, const Value& left, const Value& right, const Type& lt, const Type& rt) {
  const auto& p = node.params;
  const bool cross = node.kind == OpKind::CrossProduct;
  const JoinKind kind = cross ? JoinKind::Inner : p.join_kind;
  const auto le = left.entries();
  const auto re = right.entries();
  BagBuilder out;
  std::vector<bool> right_matched(re.size(), false);
  std::optional<EquiKeys> keys;
  if (!cross) keys = equi_keys(p.theta, lt, rt);
  std::unordered_map<std::vector<Value>, std::vector<std::size_t>, KeyHash> index;
  if (keys) {
    for (std::size_t j = 0; j < re.size(); ++j) {
      bool has_null = false;
      auto k = key_of(re[j].value, keys->right, has_null);
      if (!has_null) index[std::move(k)].push_back(j);
    }
  }
  const Value right_pad = null_tuple(rt);
  const Value left_pad = null_tuple(lt);
  for (const auto& l : le) {
    bool matched = false;
    auto emit = [&](std::size_t j) {
      Value joined = concat_tuples(l.value, re[j].value);
      if (!cross && !keys && !eval_predicate(p.theta, joined)) return;
      matched = true;
      right_matched[j] = true;
      out.add(std::move(joined), l.multiplicity * re[j].multiplicity);
    };
    if (keys) {
      bool has_null = false;
      auto k = key_of(l.value, keys->left, has_null);
      if (!has_null) {
        auto it = index.find(k);
        if (it != index.end()) {
          for (auto j : it->second) emit(j);
        }
      }
    } else {
      for (std::size_t j = 0; j < re.size(); ++j) emit(j);
    }
    if (!matched && (kind == JoinKind::Left || kind == JoinKind::Full)) {
      out.add(concat_tuples(l.value, right_pad), l.multiplicity);
    }
  }
  if (kind == JoinKind::Right || kind == JoinKind::Full) {
    for (std::size_t j = 0; j < re.size(); ++j) {
      if (!right_matched[j]) out.add(concat_tuples(left_pad, re[j].value), re[j].multiplicity);
    }
  }
  return std::move(out).build();
}

}  // namespace

DbSchema schema_of(const Database& db) {
  DbSchema out;
  for (const auto& [name, rel] : db) out.emplace(name, rel.type);
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    out.emplace_back(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

std::string join_path(const std::vector<std::string>& segments, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < segments.size(); ++i) {
    if (i > from) out += '.';
    out += segments[i];
  }
  return out;
}

TypePtr try_resolve_path(const Type& tuple_type, std::string_view path) {
  const Type* current = &tuple_type;
  TypePtr result;
  for (const auto& segment : split_path(path)) {
    if (!current->is_tuple()) return nullptr;
    const Field* f = current->find(segment);
    if (!f) return nullptr;
    result = f->type;
    current = result.get();
  }
  return result;
}

TypePtr resolve_path(const Type& tuple_type, std::string_view path) {
  const Type* current = &tuple_type;
  TypePtr result;
  for (const auto& segment : split_path(path)) {
    if (!current->is_tuple()) {
      fail(ErrorCode::KindMismatch, "path '" + std::string(path) + "' traverses a non-tuple attribute");
    }
    const Field* f = current->find(segment);
    if (!f) fail(ErrorCode::UnknownAttribute, "unknown attribute '" + std::string(path) + "' in " + to_string(tuple_type));
    result = f->type;
    current = result.get();
  }
  return result;
}

Value get_path(const Value& tuple, std::string_view path) {
  Value current = tuple;
  for (const auto& segment : split_path(path)) {
    if (current.is_null()) return Value::null();
    const Value* next = current.get(segment);
    if (!next) fail(ErrorCode::UnknownAttribute, "tuple has no attribute '" + segment + "'");
    current = *next;
  }
  return current;
}

void check_predicate(const Predicate& p, const Type& tuple_type) {
  if (p.kind == Predicate::Kind::Cmp) {
    auto a = operand_type(p.lhs, tuple_type);
    auto b = operand_type(p.rhs, tuple_type);
    if (!a->is_primitive() && !a->is_bottom()) {
      fail(ErrorCode::TypeMismatch, "comparison operand is not primitive: " + to_string(p));
    }
    if (!comparable(*a, *b)) fail(ErrorCode::TypeMismatch, "incomparable operands in " + to_string(p));
  }
  for (const auto& c : p.children) check_predicate(c, tuple_type);
}

bool compare_values(const Value& a, CmpOp op, const Value& b) {
  int c = compare(a, b);
  switch (op) {
    case CmpOp::Eq: return c == 0;
    case CmpOp::Ne: return c != 0;
    case CmpOp::Lt: return c < 0;
    case CmpOp::Le: return c <= 0;
    case CmpOp::Gt: return c > 0;
    case CmpOp::Ge: return c >= 0;
  }
  return false;
}

bool eval_predicate(const Predicate& p, const Value& tuple) { return eval3(p, tuple) == Truth::True; }

std::optional<EquiKeys> equi_keys(const Predicate& p, const Type& left, const Type& right) {
  std::vector<const Predicate*> cmps;
  if (p.kind == Predicate::Kind::Cmp) {
    cmps.push_back(&p);
  } else if (p.kind == Predicate::Kind::And) {
    for (const auto& c : p.children) {
      if (c.kind != Predicate::Kind::Cmp) return std::nullopt;
      cmps.push_back(&c);
    }
  } else {
    return std::nullopt;
  }
  if (cmps.empty()) return std::nullopt;
  EquiKeys keys;
  for (const auto* c : cmps) {
    if (c->op != CmpOp::Eq || !c->lhs.is_attr || !c->rhs.is_attr) return std::nullopt;
    const bool l_in_left = try_resolve_path(left, c->lhs.path) != nullptr;
    const bool r_in_right = try_resolve_path(right, c->rhs.path) != nullptr;
    const bool l_in_right = try_resolve_path(right, c->lhs.path) != nullptr;
    const bool r_in_left = try_resolve_path(left, c->rhs.path) != nullptr;
    if (l_in_left && r_in_right) {
      keys.left.push_back(c->lhs.path);
      keys.right.push_back(c->rhs.path);
    } else if (l_in_right && r_in_left) {
      keys.left.push_back(c->rhs.path);
      keys.right.push_back(c->lhs.path);
    } else {
      return std::nullopt;
    }
  }
  return keys;
}

TypePtr output_type(const OperatorNode& node, const std::vector<TypePtr>& inputs, const DbSchema& db) {
  const auto& p = node.params;
  switch (node.kind) {
    case OpKind::TableAccess: {
      auto it = db.find(p.table);
      if (it == db.end()) fail(ErrorCode::UnknownAttribute, "unknown relation '" + p.table + "'");
      return it->second;
    }
    case OpKind::Projection: {
      const auto& in = element_of(inputs[0]);
      std::vector<Field> out;
      std::set<std::string> names;
      for (const auto& path : p.attrs) {
        auto name = split_path(path).back();
        if (!names.insert(name).second) {
          fail(ErrorCode::DuplicateAttribute, "projection produces attribute '" + name + "' twice");
        }
        out.push_back({name, resolve_path(in, path)});
      }
      return Type::bag(Type::tuple(std::move(out)));
    }
    case OpKind::Renaming: {
      const auto& in = element_of(inputs[0]);
      std::map<std::string, std::string> from_to;
      for (const auto& [to, from] : p.renames) {
        check_top_level(in, from);
        if (!from_to.emplace(from, to).second) fail(ErrorCode::DuplicateAttribute, "attribute renamed twice: " + from);
      }
      std::vector<Field> out;
      std::set<std::string> names;
      for (const auto& f : in.fields()) {
        auto it = from_to.find(f.name);
        std::string name = it == from_to.end() ? f.name : it->second;
        if (!names.insert(name).second) fail(ErrorCode::DuplicateAttribute, "renaming produces '" + name + "' twice");
        out.push_back({name, f.type});
      }
      return Type::bag(Type::tuple(std::move(out)));
    }
    case OpKind::Selection:
      check_predicate(p.theta, element_of(inputs[0]));
      return inputs[0];
    case OpKind::Join:
    case OpKind::CrossProduct: {
      auto joined = concat_tuple_types(inputs[0]->element(), inputs[1]->element());
      if (node.kind == OpKind::Join) check_predicate(p.theta, *joined);
      return Type::bag(joined);
    }
    case OpKind::Union:
    case OpKind::Difference: {
      auto u = unify(inputs[0], inputs[1]);
      if (!u) {
        fail(ErrorCode::KindMismatch, std::string(op_kind_name(node.kind)) + " inputs are not union-compatible: " +
                                          to_string(*inputs[0]) + " vs " + to_string(*inputs[1]));
      }
      return u;
    }
    case OpKind::Dedup:
      return inputs[0];
    case OpKind::Flatten: {
      const auto& in = element_of(inputs[0]);
      auto attr = resolve_path(in, p.attr);
      TypePtr inner;
      if (p.flatten_kind == FlattenKind::Tuple) {
        if (!attr->is_tuple()) fail(ErrorCode::KindMismatch, "tuple flatten of non-tuple attribute '" + p.attr + "'");
        inner = attr;
      } else {
        if (!attr->is_bag()) fail(ErrorCode::KindMismatch, "relation flatten of non-bag attribute '" + p.attr + "'");
        inner = attr->element()->is_tuple() ? attr->element() : Type::tuple({});
      }
      return Type::bag(concat_tuple_types(inputs[0]->element(), inner));
    }
    case OpKind::TupleNest:
      return Type::bag(nest_output(node, element_of(inputs[0]), false));
    case OpKind::RelationNest:
      return Type::bag(nest_output(node, element_of(inputs[0]), true));
    case OpKind::Aggregation: {
      const auto& in = element_of(inputs[0]);
      auto result = aggregation_result_type(p, in);
      return Type::bag(concat_tuple_types(inputs[0]->element(), Type::tuple({{p.target, result}})));
    }
  }
  fail(ErrorCode::MalformedPlan, "unsupported operator");
}

SchemaMap infer_schema(const QueryPlan& plan, const DbSchema& db) {
  SchemaMap out;
  for (int id : plan.post_order()) {
    const auto& node = plan.node(id);
    std::vector<TypePtr> inputs;
    for (int in : node.inputs) inputs.push_back(out.at(in));
    out[id] = output_type(node, inputs, db);
  }
  return out;
}

std::vector<FlattenPiece> flatten_tuple(const OperatorParams& params, const Type& input_tuple_type,
                                        const Value& tuple) {
  std::vector<FlattenPiece> out;
  auto attr_type = resolve_path(input_tuple_type, params.attr);
  Value attr = get_path(tuple, params.attr);
  if (params.flatten_kind == FlattenKind::Tuple) {
    out.push_back({concat_tuples(tuple, attr.is_null() ? null_tuple(*attr_type) : attr), 1, false});
    return out;
  }
  const Type& element = attr_type->element()->is_tuple() ? *attr_type->element() : *Type::tuple({});
  if (!attr.is_null()) {
    for (const auto& e : attr.entries()) out.push_back({concat_tuples(tuple, e.value), e.multiplicity, false});
  }
  if (out.empty()) out.push_back({concat_tuples(tuple, null_tuple(element)), 1, true});
  return out;
}

Value project_row(const OperatorParams& params, const Value& tuple) {
  std::vector<NamedValue> out;
  out.reserve(params.attrs.size());
  for (const auto& path : params.attrs) out.push_back({split_path(path).back(), get_path(tuple, path)});
  return Value::tuple(std::move(out));
}

Value rename_row(const OperatorParams& params, const Value& tuple) {
  std::vector<NamedValue> out;
  for (const auto& f : tuple.fields()) {
    std::string name = f.name;
    for (const auto& [to, from] : params.renames) {
      if (from == f.name) name = to;
    }
    out.push_back({std::move(name), f.value});
  }
  return Value::tuple(std::move(out));
}

std::pair<Value, Value> nest_split(const std::vector<std::string>& attrs, const Value& tuple) {
  std::vector<NamedValue> kept, inner;
  for (const auto& f : tuple.fields()) {
    if (std::find(attrs.begin(), attrs.end(), f.name) == attrs.end()) kept.push_back(f);
  }
  for (const auto& a : attrs) {
    const Value* v = tuple.get(a);
    if (!v) fail(ErrorCode::UnknownAttribute, "tuple has no attribute '" + a + "'");
    inner.push_back({a, *v});
  }
  return {Value::tuple(std::move(kept)), Value::tuple(std::move(inner))};
}

Value tuple_nest_row(const OperatorParams& params, const Value& tuple) {
  auto [kept, inner] = nest_split(params.attrs, tuple);
  return concat_tuples(kept, Value::tuple({{params.target, inner}}));
}

Value aggregate_bag(AggFn fn, const Value& bag) {
  if (bag.is_null()) return fn == AggFn::Count || fn == AggFn::Sum ? Value::integer(0) : Value::null();
  if (!bag.is_bag()) fail(ErrorCode::AggregationOnNonBag, "aggregation over a non-bag value");
  if (fn == AggFn::Count) return Value::integer(static_cast<std::int64_t>(bag.cardinality()));
  std::int64_t sum = 0;
  std::uint64_t n = 0;
  Value best;
  for (const auto& e : bag.entries()) {
    const auto fields = e.value.fields();
    if (fields.empty()) continue;
    const Value& x = fields[0].value;
    if (x.is_null()) continue;
    if (fn == AggFn::Sum || fn == AggFn::Avg) {
      sum += x.as_int() * static_cast<std::int64_t>(e.multiplicity);
      n += e.multiplicity;
    } else if (best.is_null() || (fn == AggFn::Min ? compare(x, best) < 0 : compare(x, best) > 0)) {
      best = x;
    }
  }
  switch (fn) {
    case AggFn::Sum: return Value::integer(sum);
    case AggFn::Avg: return n == 0 ? Value::null() : Value::integer(sum / static_cast<std::int64_t>(n));
    default: return best;
  }
}

Value aggregate_row(const OperatorParams& params, const Value& tuple) {
  return concat_tuples(tuple, Value::tuple({{params.target, aggregate_bag(params.fn, get_path(tuple, params.source))}}));
}

Value apply_operator(const OperatorNode& node, const std::vector<Value>& inputs, const std::vector<TypePtr>& input_types,
                     const Database& db) {
  const auto& p = node.params;
  auto map_rows = [&](auto&& f) {
    BagBuilder out;
    for (const auto& e : inputs[0].entries()) out.add(f(e.value), e.multiplicity);
    return std::move(out).build();
  };
  switch (node.kind) {
    case OpKind::TableAccess: {
      auto it = db.find(p.table);
      if (it == db.end()) fail(ErrorCode::UnknownAttribute, "unknown relation '" + p.table + "'");
      return it->second.rows;
    }
    case OpKind::Projection:
      return map_rows([&](const Value& t) { return project_row(p, t); });
    case OpKind::Renaming:
      return map_rows([&](const Value& t) { return rename_row(p, t); });
    case OpKind::Selection: {
      BagBuilder out;
      for (const auto& e : inputs[0].entries()) {
        if (eval_predicate(p.theta, e.value)) out.add(e.value, e.multiplicity);
      }
      return std::move(out).build();
    }
    case OpKind::Join:
    case OpKind::CrossProduct:
      return join_values(node, inputs[0], inputs[1], *input_types[0]->element(), *input_types[1]->element());
    case OpKind::Union: {
      BagBuilder out;
      out.add_all(inputs[0]);
      out.add_all(inputs[1]);
      return std::move(out).build();
    }
    case OpKind::Difference: {
      BagBuilder out;
      for (const auto& e : inputs[0].entries()) {
        auto other = inputs[1].multiplicity(e.value);
        if (e.multiplicity > other) out.add(e.value, e.multiplicity - other);
      }
      return std::move(out).build();
    }
    case OpKind::Dedup: {
      BagBuilder out;
      for (const auto& e : inputs[0].entries()) out.add(e.value, 1);
      return std::move(out).build();
    }
    case OpKind::Flatten: {
      BagBuilder out;
      const auto& in_type = *input_types[0]->element();
      for (const auto& e : inputs[0].entries()) {
        for (auto& piece : flatten_tuple(p, in_type, e.value)) {
          if (piece.padded && p.flatten_kind == FlattenKind::Inner) continue;
          out.add(std::move(piece.tuple), e.multiplicity * piece.multiplicity);
        }
      }
      return std::move(out).build();
    }
    case OpKind::TupleNest:
      return map_rows([&](const Value& t) { return tuple_nest_row(p, t); });
    case OpKind::RelationNest: {
      std::map<Value, BagBuilder> groups;
      for (const auto& e : inputs[0].entries()) {
        auto [key, inner] = nest_split(p.attrs, e.value);
        groups[std::move(key)].add(std::move(inner), e.multiplicity);
      }
      BagBuilder out;
      for (auto& [key, members] : groups) {
        out.add(concat_tuples(key, Value::tuple({{p.target, std::move(members).build()}})), 1);
      }
      return std::move(out).build();
    }
    case OpKind::Aggregation:
      return map_rows([&](const Value& t) { return aggregate_row(p, t); });
  }
  fail(ErrorCode::MalformedPlan, "unsupported operator");
}

std::map<int, Value> evaluate_all(const QueryPlan& plan, const Database& db) {
  auto schema = infer_schema(plan, schema_of(db));
  std::map<int, Value> out;
  for (int id : plan.post_order()) {
    const auto& node = plan.node(id);
    std::vector<Value> inputs;
    std::vector<TypePtr> types;
    for (int in : node.inputs) {
      inputs.push_back(out.at(in));
      types.push_back(schema.at(in));
    }
    out[id] = apply_operator(node, inputs, types, db);
  }
  return out;
}

Value evaluate(const QueryPlan& plan, const Database& db) { return evaluate_all(plan, db).at(plan.root()); }

}  // namespace whynot
