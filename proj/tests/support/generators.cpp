#include "generators.hpp"

#include <algorithm>

#include "whynot/error.hpp"

namespace whynot::gen {

namespace {

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int pick(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

template <typename T>
const T& pick_of(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(pick(rng, static_cast<int>(v.size())))];
}

OperatorNode make(int id, OpKind kind, OperatorParams params, std::vector<int> inputs) {
  OperatorNode n;
  n.id = id;
  n.kind = kind;
  n.params = std::move(params);
  n.inputs = std::move(inputs);
  return n;
}

std::vector<std::string> primitive_attrs(const Type& tuple, TypeKind kind) {
  std::vector<std::string> out;
  for (const auto& f : tuple.fields()) {
    if (f.type->kind() == kind) out.push_back(f.name);
  }
  return out;
}

}  // namespace

Value random_value(Rng& rng, const Type& type, int max_bag, double null_rate) {
  if (null_rate > 0 && type.is_primitive() && coin(rng, null_rate)) return Value::null();
  switch (type.kind()) {
    case TypeKind::Int:
    case TypeKind::Date:
      return Value::integer(pick(rng, 4));
    case TypeKind::String:
      return Value::string(std::string(1, static_cast<char>('x' + pick(rng, 3))));
    case TypeKind::Bool:
      return Value::boolean(coin(rng, 0.5));
    case TypeKind::Tuple: {
      std::vector<NamedValue> fields;
      for (const auto& f : type.fields()) fields.push_back({f.name, random_value(rng, *f.type, max_bag, null_rate)});
      return Value::tuple(std::move(fields));
    }
    case TypeKind::Bag: {
      BagBuilder b;
      const int n = pick(rng, max_bag + 1);
      for (int i = 0; i < n; ++i) b.add(random_value(rng, *type.element(), max_bag, null_rate));
      return std::move(b).build();
    }
    case TypeKind::Bottom:
      return Value::null();
  }
  return Value::null();
}

Nip generalize(Rng& rng, const Value& v) {
  if (coin(rng, 0.2)) return Nip::any();
  if (v.is_tuple()) {
    std::vector<NamedNip> fields;
    for (const auto& f : v.fields()) {
      if (coin(rng, 0.25)) continue;  // unlisted attributes are unconstrained
      fields.push_back({f.name, generalize(rng, f.value)});
    }
    return Nip::tuple(std::move(fields));
  }
  if (v.is_bag()) {
    std::vector<Nip> elements;
    bool dropped = false;
    for (const auto& e : v.entries()) {
      for (std::uint64_t i = 0; i < e.multiplicity; ++i) {
        if (coin(rng, 0.25)) {
          dropped = true;
          continue;
        }
        elements.push_back(generalize(rng, e.value));
      }
    }
    if (dropped || coin(rng, 0.3)) elements.push_back(Nip::star());
    return Nip::bag(std::move(elements));
  }
  return Nip::concrete(v);
}

Nip random_pattern(Rng& rng, const Type& type) {
  if (coin(rng, 0.2)) return Nip::any();
  if (type.is_tuple()) {
    std::vector<NamedNip> fields;
    for (const auto& f : type.fields()) {
      if (coin(rng, 0.7)) fields.push_back({f.name, random_pattern(rng, *f.type)});
    }
    return Nip::tuple(std::move(fields));
  }
  if (type.is_bag()) {
    std::vector<Nip> elements;
    const int n = pick(rng, 3);
    for (int i = 0; i < n; ++i) elements.push_back(random_pattern(rng, *type.element()));
    if (coin(rng, 0.4)) elements.push_back(Nip::star());
    return Nip::bag(std::move(elements));
  }
  return Nip::concrete(random_value(rng, type));
}

DbSchema world_schema() {
  auto item = Type::tuple({{"k", Type::int_()}, {"v", Type::int_()}});
  auto r = Type::tuple({{"a", Type::int_()}, {"b", Type::int_()}, {"s", Type::string()}, {"items", Type::bag(item)}});
  auto t = Type::tuple({{"a2", Type::int_()}, {"c", Type::int_()}});
  return {{"R", Type::bag(r)}, {"T", Type::bag(t)}};
}

Database random_world(Rng& rng, int r_rows, int t_rows) {
  Database db;
  for (const auto& [name, type] : world_schema()) {
    BagBuilder b;
    const int rows = name == "R" ? r_rows : t_rows;
    for (int i = 0; i < rows; ++i) b.add(random_value(rng, *type->element(), 2));
    db.emplace(name, Relation{type, std::move(b).build()});
  }
  return db;
}

AttributeAlternatives world_alternatives() {
  return {{"a", {"b"}}, {"b", {"a"}}, {"items.k", {"items.v"}}, {"items.v", {"items.k"}}};
}

QueryPlan random_plan(Rng& rng) {
  const auto schema = world_schema();
  for (;;) {
    std::vector<OperatorNode> nodes;
    int next = 1;
    OperatorParams table;
    table.table = "R";
    nodes.push_back(make(next++, OpKind::TableAccess, table, {}));
    int top = 1;
    auto current = [&] { return infer_schema(QueryPlan(nodes), schema).at(top)->element(); };

    if (coin(rng, 0.5)) {
      OperatorParams p;
      p.attr = "items";
      p.flatten_kind = coin(rng, 0.7) ? FlattenKind::Inner : FlattenKind::Outer;
      nodes.push_back(make(next, OpKind::Flatten, p, {top}));
      top = next++;
    }
    if (coin(rng, 0.25)) {
      OperatorParams t;
      t.table = "T";
      const int t_id = next++;
      nodes.push_back(make(t_id, OpKind::TableAccess, t, {}));
      OperatorParams p;
      p.join_kind = coin(rng, 0.7) ? JoinKind::Inner : JoinKind::Left;
      p.theta = Predicate::compare(Operand::attr(coin(rng, 0.5) ? "a" : "b"), CmpOp::Eq, Operand::attr("a2"));
      nodes.push_back(make(next, OpKind::Join, p, {top, t_id}));
      top = next++;
    }
    if (coin(rng, 0.8)) {
      const auto ints = primitive_attrs(*current(), TypeKind::Int);
      static const std::vector<CmpOp> ops{CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
      OperatorParams p;
      p.theta = Predicate::compare(Operand::attr(pick_of(rng, ints)), pick_of(rng, ops),
                                   Operand::constant_value(Value::integer(pick(rng, 4))));
      nodes.push_back(make(next, OpKind::Selection, p, {top}));
      top = next++;
    }
    bool has_items = current()->find("items") != nullptr;
    if (coin(rng, 0.6)) {
      OperatorParams p;
      for (const auto& name : current()->names()) {
        if (coin(rng, 0.6)) p.attrs.push_back(name);
      }
      if (p.attrs.empty()) p.attrs.push_back(current()->names().front());
      nodes.push_back(make(next, OpKind::Projection, p, {top}));
      top = next++;
      has_items = current()->find("items") != nullptr;
    }
    const int ending = pick(rng, 3);
    const auto names = current()->names();
    if (ending == 1 && names.size() >= 2) {
      OperatorParams p;
      for (std::size_t i = 1; i < names.size(); ++i) p.attrs.push_back(names[i]);
      p.target = "g";
      nodes.push_back(make(next, OpKind::RelationNest, p, {top}));
      top = next++;
    } else if (ending == 2 && has_items) {
      OperatorParams p;
      p.fn = AggFn::Count;
      p.source = "items";
      p.target = "n";
      nodes.push_back(make(next, OpKind::Aggregation, p, {top}));
      top = next++;
    }
    try {
      QueryPlan plan(nodes);
      infer_schema(plan, schema);
      return plan;
    } catch (const Error&) {
      continue;  // e.g. a projection dropping the join attribute; draw again
    }
  }
}

std::optional<WhyNotQuestion> random_question(Rng& rng, int tries) {
  for (int attempt = 0; attempt < tries; ++attempt) {
    WhyNotQuestion q;
    q.db = random_world(rng);
    q.plan = random_plan(rng);
    const auto db_schema = schema_of(q.db);
    const auto types = infer_schema(q.plan, db_schema);
    const Value original = evaluate(q.plan, q.db);

    // Reparameterize one or two operators at random.
    QueryPlan changed = q.plan;
    const int rounds = 1 + pick(rng, 2);
    for (int r = 0; r < rounds; ++r) {
      const auto& node = pick_of(rng, q.plan.nodes());
      std::vector<TypePtr> inputs;
      for (int in : node.inputs) inputs.push_back(types.at(in));
      ActiveDomain domain;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        auto d = active_domain(evaluate(q.plan.subplan(node.inputs[i]), q.db), *inputs[i]->element());
        domain.insert(d.begin(), d.end());
      }
      const auto grid = param_grid(node, inputs, domain);
      if (grid.size() < 2) continue;
      const auto& params = grid[static_cast<std::size_t>(1 + pick(rng, static_cast<int>(grid.size()) - 1))];
      try {
        QueryPlan candidate = changed.with_params(node.id, params);
        auto t = infer_schema(candidate, db_schema);
        if (!type_equal(*t.at(candidate.root()), *types.at(q.plan.root()))) continue;
        changed = std::move(candidate);
      } catch (const Error&) {
        continue;
      }
    }
    const Value relaxed = evaluate(changed, q.db);
    std::vector<Value> fresh;
    for (const auto& e : relaxed.entries()) {
      if (original.multiplicity(e.value) == 0) fresh.push_back(e.value);
    }
    if (fresh.empty()) continue;
    const Value target = pick_of(rng, fresh);
    for (int g = 0; g < 5; ++g) {
      q.tuple = g < 4 ? generalize(rng, target) : Nip::concrete(target);
      if (q.tuple.is_any()) continue;
      if (!has_match(original, q.tuple)) return q;
    }
  }
  return std::nullopt;
}

}  // namespace whynot::gen
