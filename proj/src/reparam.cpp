#include "whynot/reparam.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "whynot/error.hpp"

namespace whynot {

namespace {

using Mutator = std::function<void(OperatorParams&)>;

/// One independently choosable parameter position; choice 0 keeps the original.
struct Dimension {
  std::string slot;
  std::vector<Mutator> choices;
  std::vector<std::string> labels;
};

void collect_paths(const Type& t, const std::string& prefix, std::vector<std::pair<std::string, TypePtr>>& out) {
  for (const auto& f : t.fields()) {
    std::string path = prefix.empty() ? f.name : prefix + "." + f.name;
    out.emplace_back(path, f.type);
    if (f.type->is_tuple()) collect_paths(*f.type, path, out);
  }
}

std::vector<std::pair<std::string, TypePtr>> tuple_paths(const Type& t) {
  std::vector<std::pair<std::string, TypePtr>> out;
  if (t.is_tuple()) collect_paths(t, "", out);
  return out;
}

/// Paths of the same type as `original` (ints and dates interchangeable when
/// `comparable_only`), original first.
std::vector<std::string> same_typed(const Type& tuple_type, const std::string& original, bool comparable_only) {
  std::vector<std::string> out{original};
  auto t = try_resolve_path(tuple_type, original);
  if (!t) return out;
  for (const auto& [path, type] : tuple_paths(tuple_type)) {
    if (path == original) continue;
    bool ok = comparable_only ? (type->is_primitive() && t->is_primitive() && comparable(*type, *t))
                              : type_equal(*type, *t);
    if (ok) out.push_back(path);
  }
  return out;
}

std::vector<Value> constant_grid(const Value& original, const std::vector<std::string>& attrs, const ActiveDomain& domain) {
  std::set<Value> values{original};
  for (const auto& a : attrs) {
    auto it = domain.find(a);
    if (it == domain.end()) continue;
    values.insert(it->second.begin(), it->second.end());
  }
  std::vector<Value> sorted;
  for (const auto& v : values) {
    if (!v.is_null()) sorted.push_back(v);
  }
  if (sorted.empty()) return {original};
  // Boundary-adjacent values so that every prefix/suffix of the ordered domain
  // can be selected with the six comparison operators.
  const Value& lo = sorted.front();
  const Value& hi = sorted.back();
  if (lo.kind() == ValueKind::Int) {
    values.insert(Value::integer(lo.as_int() - 1));
    values.insert(Value::integer(hi.as_int() + 1));
  } else if (lo.kind() == ValueKind::String) {
    values.insert(Value::string(""));
    values.insert(Value::string(hi.as_string() + "~"));
  } else if (lo.kind() == ValueKind::Bool) {
    values.insert(Value::boolean(false));
    values.insert(Value::boolean(true));
  }
  std::vector<Value> out{original};
  for (const auto& v : values) {
    if (!(v == original) && v.kind() == original.kind()) out.push_back(v);
  }
  return out;
}

int side_of(const std::string& path, const std::vector<TypePtr>& inputs) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (try_resolve_path(*inputs[i]->element(), path)) return static_cast<int>(i);
  }
  return -1;
}

void add_attr_dimension(std::vector<Dimension>& dims, const std::string& slot, const std::vector<std::string>& candidates,
                        std::function<void(OperatorParams&, const std::string&)> set) {
  if (candidates.size() < 2) return;
  Dimension d;
  d.slot = slot;
  for (const auto& c : candidates) {
    d.choices.push_back([set, c](OperatorParams& p) { set(p, c); });
    d.labels.push_back(c);
  }
  dims.push_back(std::move(d));
}

std::vector<Dimension> dimensions(const OperatorNode& node, const std::vector<TypePtr>& inputs,
                                  const ActiveDomain& domain) {
  std::vector<Dimension> dims;
  const auto& p = node.params;
  switch (node.kind) {
    case OpKind::Selection:
    case OpKind::Join: {
      const bool join = node.kind == OpKind::Join;
      if (join) {
        Dimension d;
        d.slot = "kind";
        for (auto k : {JoinKind::Inner, JoinKind::Left, JoinKind::Right, JoinKind::Full}) {
          if (k == p.join_kind) continue;
          d.choices.push_back([k](OperatorParams& q) { q.join_kind = k; });
          d.labels.push_back(std::string(join_kind_name(k)));
        }
        d.choices.insert(d.choices.begin(), [](OperatorParams&) {});
        d.labels.insert(d.labels.begin(), std::string(join_kind_name(p.join_kind)));
        dims.push_back(std::move(d));
      }
      auto cmps = comparisons(p.theta);
      for (std::size_t k = 0; k < cmps.size(); ++k) {
        const Predicate& c = *cmps[k];
        const std::string base = "theta[" + std::to_string(k) + "]";
        auto candidates_for = [&](const Operand& o) -> std::vector<std::string> {
          if (!o.is_attr) return {};
          if (!join) return same_typed(*inputs[0]->element(), o.path, true);
          int side = side_of(o.path, inputs);
          if (side < 0) return {o.path};
          return same_typed(*inputs[static_cast<std::size_t>(side)]->element(), o.path, true);
        };
        auto lhs_candidates = candidates_for(c.lhs);
        auto rhs_candidates = candidates_for(c.rhs);
        add_attr_dimension(dims, base + ".lhs", lhs_candidates, [k](OperatorParams& q, const std::string& path) {
          comparisons(q.theta)[k]->lhs = Operand::attr(path);
        });
        add_attr_dimension(dims, base + ".rhs", rhs_candidates, [k](OperatorParams& q, const std::string& path) {
          comparisons(q.theta)[k]->rhs = Operand::attr(path);
        });
        if (!join) {  // joins are restricted to equality conditions
          Dimension d;
          d.slot = base + ".op";
          d.choices.push_back([](OperatorParams&) {});
          d.labels.push_back(std::string(cmp_op_name(c.op)));
          for (auto op : {CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge}) {
            if (op == c.op) continue;
            d.choices.push_back([k, op](OperatorParams& q) { comparisons(q.theta)[k]->op = op; });
            d.labels.push_back(std::string(cmp_op_name(op)));
          }
          dims.push_back(std::move(d));
        }
        auto add_constant = [&](const Operand& constant, const std::vector<std::string>& attrs, bool lhs_side) {
          if (constant.is_attr) return;
          auto grid = constant_grid(constant.constant, attrs, domain);
          if (grid.size() < 2) return;
          Dimension d;
          d.slot = base + (lhs_side ? ".lhs" : ".rhs");
          for (const auto& v : grid) {
            d.choices.push_back([k, v, lhs_side](OperatorParams& q) {
              auto* cmp = comparisons(q.theta)[k];
              (lhs_side ? cmp->lhs : cmp->rhs) = Operand::constant_value(v);
            });
            d.labels.push_back(to_string(v));
          }
          dims.push_back(std::move(d));
        };
        add_constant(c.rhs, lhs_candidates, false);
        add_constant(c.lhs, rhs_candidates, true);
      }
      break;
    }
    case OpKind::Projection:
      for (std::size_t k = 0; k < p.attrs.size(); ++k) {
        add_attr_dimension(dims, "attrs[" + std::to_string(k) + "]",
                           same_typed(*inputs[0]->element(), p.attrs[k], false),
                           [k](OperatorParams& q, const std::string& path) { q.attrs[k] = path; });
      }
      break;
    case OpKind::TupleNest:
    case OpKind::RelationNest: {
      const auto& in = *inputs[0]->element();
      for (std::size_t k = 0; k < p.attrs.size(); ++k) {
        std::vector<std::string> candidates{p.attrs[k]};
        auto t = try_resolve_path(in, p.attrs[k]);
        for (const auto& f : in.fields()) {
          if (f.name != p.attrs[k] && t && type_equal(*f.type, *t)) candidates.push_back(f.name);
        }
        add_attr_dimension(dims, "attrs[" + std::to_string(k) + "]", candidates,
                           [k](OperatorParams& q, const std::string& name) { q.attrs[k] = name; });
      }
      break;
    }
    case OpKind::Renaming: {
      const auto& in = *inputs[0]->element();
      for (std::size_t k = 0; k < p.renames.size(); ++k) {
        std::vector<std::string> candidates{p.renames[k].second};
        auto t = try_resolve_path(in, p.renames[k].second);
        for (const auto& f : in.fields()) {
          if (f.name != p.renames[k].second && t && type_equal(*f.type, *t)) candidates.push_back(f.name);
        }
        add_attr_dimension(dims, "from[" + std::to_string(k) + "]", candidates,
                           [k](OperatorParams& q, const std::string& name) { q.renames[k].second = name; });
      }
      break;
    }
    case OpKind::Flatten: {
      if (p.flatten_kind != FlattenKind::Tuple) {
        Dimension d;
        d.slot = "kind";
        FlattenKind other = p.flatten_kind == FlattenKind::Inner ? FlattenKind::Outer : FlattenKind::Inner;
        d.choices = {[](OperatorParams&) {}, [other](OperatorParams& q) { q.flatten_kind = other; }};
        d.labels = {std::string(flatten_kind_name(p.flatten_kind)), std::string(flatten_kind_name(other))};
        dims.push_back(std::move(d));
      }
      add_attr_dimension(dims, "attr", same_typed(*inputs[0]->element(), p.attr, false),
                         [](OperatorParams& q, const std::string& path) { q.attr = path; });
      break;
    }
    case OpKind::Aggregation: {
      Dimension d;
      d.slot = "fn";
      d.choices.push_back([](OperatorParams&) {});
      d.labels.push_back(std::string(agg_fn_name(p.fn)));
      for (auto fn : {AggFn::Count, AggFn::Sum, AggFn::Min, AggFn::Max, AggFn::Avg}) {
        if (fn == p.fn) continue;
        d.choices.push_back([fn](OperatorParams& q) { q.fn = fn; });
        d.labels.push_back(std::string(agg_fn_name(fn)));
      }
      dims.push_back(std::move(d));
      add_attr_dimension(dims, "source", same_typed(*inputs[0]->element(), p.source, false),
                         [](OperatorParams& q, const std::string& path) { q.source = path; });
      break;
    }
    default:
      break;
  }
  return dims;
}

void collect_domain(const Value& v, const Type& t, const std::string& prefix, std::map<std::string, std::set<Value>>& out) {
  for (const auto& f : t.fields()) {
    std::string path = prefix.empty() ? f.name : prefix + "." + f.name;
    const Value* x = v.is_tuple() ? v.get(f.name) : nullptr;
    if (!x) continue;
    if (f.type->is_primitive()) {
      if (!x->is_null()) out[path].insert(*x);
    } else if (f.type->is_tuple() && x->is_tuple()) {
      collect_domain(*x, *f.type, path, out);
    }
  }
}

}  // namespace

void validate_question(const WhyNotQuestion& q) {
  validate_top_level(q.tuple);
  auto schema = infer_schema(q.plan, schema_of(q.db));
  const auto& root = schema.at(q.plan.root());
  if (!nip_conforms(q.tuple, *root->element())) {
    fail(ErrorCode::TypeMismatch, "why-not tuple " + to_string(q.tuple) + " does not fit " + to_string(*root));
  }
  if (has_match(evaluate(q.plan, q.db), q.tuple)) {
    fail(ErrorCode::PreconditionViolated, "the query result already contains a tuple matching " + to_string(q.tuple));
  }
}

bool has_match(const Value& result, const Nip& tuple) {
  for (const auto& e : result.entries()) {
    if (matches_nip(e.value, tuple)) return true;
  }
  return false;
}

ActiveDomain active_domain(const Value& relation, const Type& tuple_type) {
  std::map<std::string, std::set<Value>> sets;
  for (const auto& e : relation.entries()) collect_domain(e.value, tuple_type, "", sets);
  ActiveDomain out;
  for (auto& [path, values] : sets) out[path] = std::vector<Value>(values.begin(), values.end());
  return out;
}

std::vector<ParamChange> admissible_changes(const OperatorNode& node, const std::vector<TypePtr>& inputs,
                                            const ActiveDomain& domain) {
  std::vector<ParamChange> out;
  for (const auto& d : dimensions(node, inputs, domain)) {
    for (std::size_t i = 1; i < d.choices.size(); ++i) {
      OperatorParams p = node.params;
      d.choices[i](p);
      if (p == node.params) continue;
      out.push_back({node.id, std::move(p), describe(node) + ": " + d.slot + " := " + d.labels[i]});
    }
  }
  return out;
}

std::vector<OperatorParams> param_grid(const OperatorNode& node, const std::vector<TypePtr>& inputs,
                                       const ActiveDomain& domain) {
  auto dims = dimensions(node, inputs, domain);
  std::vector<OperatorParams> out{node.params};
  for (const auto& d : dims) {
    std::vector<OperatorParams> next;
    next.reserve(out.size() * d.choices.size());
    for (const auto& p : out) {
      for (const auto& choice : d.choices) {
        OperatorParams q = p;
        choice(q);
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  // Drop duplicates while keeping the original first.
  std::vector<OperatorParams> unique;
  for (auto& p : out) {
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(std::move(p));
  }
  return unique;
}

QueryPlan apply_changes(const QueryPlan& plan, const std::vector<ParamChange>& changes, const DbSchema& db) {
  const auto original_root = infer_schema(plan, db).at(plan.root());
  QueryPlan current = plan;
  for (const auto& c : changes) {
    current = current.with_params(c.op_id, c.params);
    try {
      infer_schema(current, db);
    } catch (const Error& e) {
      fail(ErrorCode::SchemaBroken, "change '" + c.description + "' breaks the plan: " + e.what());
    }
  }
  const auto root = infer_schema(current, db).at(current.root());
  if (!type_equal(*root, *original_root)) {
    fail(ErrorCode::RootSchemaChanged, "result type changes from " + to_string(*original_root) + " to " + to_string(*root));
  }
  return current;
}

bool is_successful(const QueryPlan& reparameterized, const Database& db, const Nip& tuple) {
  return has_match(evaluate(reparameterized, db), tuple);
}

std::vector<ChangedSetResult> minimal_results(const std::vector<ChangedSetResult>& all) {
  std::vector<ChangedSetResult> out;
  for (const auto& r : all) {
    bool dominated = false;
    for (const auto& s : all) {
      if (&s == &r) continue;
      const bool subset = std::includes(r.ops.begin(), r.ops.end(), s.ops.begin(), s.ops.end());
      if (subset && s.d <= r.d && (s.ops != r.ops || s.d < r.d)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(r);
  }
  return out;
}

OracleReport exact_explanations_oracle(const WhyNotQuestion& q, std::uint64_t budget) {
  validate_question(q);
  const auto db_schema = schema_of(q.db);
  const auto original_schema = infer_schema(q.plan, db_schema);
  const auto& original_root = original_schema.at(q.plan.root());
  const Value original = evaluate(q.plan, q.db);
  const auto order = q.plan.post_order();

  OracleReport report;
  std::map<std::vector<int>, ChangedSetResult> best;
  std::map<int, OperatorParams> chosen;
  std::map<int, TypePtr> types;
  std::map<int, Value> values;

  std::function<void(std::size_t)> search = [&](std::size_t pos) {
    if (pos == order.size()) {
      const int root = q.plan.root();
      if (!type_equal(*types.at(root), *original_root)) return;
      if (!has_match(values.at(root), q.tuple)) return;
      QueryPlan plan = q.plan;
      for (const auto& [id, params] : chosen) plan = plan.with_params(id, params);
      auto delta = changed_ops(q.plan, plan);
      if (delta.empty()) return;
      auto d = result_distance(original, values.at(root));
      auto it = best.find(delta);
      if (it == best.end() || d < it->second.d) best[delta] = ChangedSetResult{delta, d, plan};
      return;
    }
    const int id = order[pos];
    const auto& node = q.plan.node(id);
    std::vector<TypePtr> in_types;
    std::vector<Value> in_values;
    ActiveDomain domain;
    for (int in : node.inputs) {
      in_types.push_back(types.at(in));
      in_values.push_back(values.at(in));
      for (auto& [path, vs] : active_domain(values.at(in), *types.at(in)->element())) {
        auto& slot = domain[path];
        slot.insert(slot.end(), vs.begin(), vs.end());
      }
    }
    for (const auto& params : param_grid(node, in_types, domain)) {
      if (++report.combinations > budget) {
        fail(ErrorCode::BudgetExceeded, "oracle budget of " + std::to_string(budget) + " parameter settings exceeded");
      }
      OperatorNode candidate = node;
      candidate.params = params;
      try {
        types[id] = output_type(candidate, in_types, db_schema);
        values[id] = apply_operator(candidate, in_values, in_types, q.db);
      } catch (const Error&) {
        continue;
      }
      chosen[id] = params;
      search(pos + 1);
    }
    chosen.erase(id);
    types.erase(id);
    values.erase(id);
  };
  search(0);

  for (auto& [delta, r] : best) report.successful.push_back(std::move(r));
  std::sort(report.successful.begin(), report.successful.end(), [](const auto& a, const auto& b) {
    return a.ops.size() != b.ops.size() ? a.ops.size() < b.ops.size() : a.ops < b.ops;
  });
  report.msrs = minimal_results(report.successful);
  return report;
}

}  // namespace whynot
