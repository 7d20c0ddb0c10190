#include "whynot/backtrace.hpp"

#include <algorithm>
#include <set>

#include "whynot/error.hpp"

namespace whynot {

namespace {

/// Constraint over one operator's output tuples: top-level attribute → pattern.
/// Attributes without an entry are unconstrained.
using Fields = std::vector<NamedNip>;

Fields fields_of(const Nip& p) {
  if (p.is_tuple()) return p.fields();
  if (p.is_concrete() && p.value().is_tuple()) {
    Fields out;
    for (const auto& f : p.value().fields()) out.push_back({f.name, Nip::concrete(f.value)});
    return out;
  }
  return {};
}

const Nip* find_field(const Fields& fs, const std::string& name) {
  for (const auto& f : fs) {
    if (f.name == name) return &f.pattern;
  }
  return nullptr;
}

bool constrains(const Nip& p) { return !p.is_any(); }

/// Combines two constraints on the same attribute, preferring the more
/// informative one; tuple constraints are merged attribute-wise.
Nip merge(const Nip& a, const Nip& b);

Fields merge_fields(Fields a, const Fields& b) {
  for (const auto& f : b) {
    auto it = std::find_if(a.begin(), a.end(), [&](const NamedNip& x) { return x.name == f.name; });
    if (it == a.end()) {
      a.push_back(f);
    } else {
      it->pattern = merge(it->pattern, f.pattern);
    }
  }
  return a;
}

Nip merge(const Nip& a, const Nip& b) {
  if (!constrains(a)) return b;
  if (!constrains(b)) return a;
  if ((a.is_tuple() || (a.is_concrete() && a.value().is_tuple())) &&
      (b.is_tuple() || (b.is_concrete() && b.value().is_tuple()))) {
    return Nip::tuple(merge_fields(fields_of(a), fields_of(b)));
  }
  return a;
}

void put(Fields& fs, const std::vector<std::string>& path, std::size_t at, const Nip& p) {
  auto it = std::find_if(fs.begin(), fs.end(), [&](const NamedNip& x) { return x.name == path[at]; });
  Nip value = p;
  if (at + 1 < path.size()) {
    Fields inner = it == fs.end() ? Fields{} : fields_of(it->pattern);
    put(inner, path, at + 1, p);
    value = Nip::tuple(std::move(inner));
  }
  if (it == fs.end()) {
    fs.push_back({path[at], value});
  } else {
    it->pattern = at + 1 < path.size() ? value : merge(it->pattern, value);
  }
}

void put_path(Fields& fs, const std::string& path, const Nip& p) {
  if (!constrains(p)) return;
  put(fs, split_path(path), 0, p);
}

Nip complete(const Fields& fs, const Type& tuple_type);

/// Spells out unconstrained attributes of nested tuple patterns as `?`.
Nip complete_nested(const Nip& p, const Type& type) {
  if (p.is_tuple() && type.is_tuple()) return complete(p.fields(), type);
  if (p.is_bag() && type.is_bag() && type.element()->is_tuple()) {
    std::vector<Nip> elements;
    for (const auto& e : p.elements()) elements.push_back(complete_nested(e, *type.element()));
    return Nip::bag(std::move(elements));
  }
  return p;
}

/// Full tuple pattern over `tuple_type`, unconstrained attributes as `?`.
Nip complete(const Fields& fs, const Type& tuple_type) {
  std::vector<NamedNip> out;
  for (const auto& f : tuple_type.fields()) {
    const Nip* p = find_field(fs, f.name);
    out.push_back({f.name, p ? complete_nested(*p, *f.type) : Nip::any()});
  }
  return Nip::tuple(std::move(out));
}

/// Element patterns of a bag constraint (concrete bags expand to their tuples).
std::vector<Nip> bag_elements(const Nip& p) {
  if (p.is_bag()) return p.elements();
  std::vector<Nip> out;
  if (p.is_concrete() && p.value().is_bag()) {
    for (const auto& e : p.value().entries()) {
      for (std::uint64_t k = 0; k < e.multiplicity; ++k) out.push_back(Nip::concrete(e.value));
    }
  }
  return out;
}

struct PendingRef {
  std::string path;  // at the current operator's output (or input, once rewritten)
  bool blue = false;
  std::string label;
  int op_id = -1;
  std::string slot;
};

class Backtracer {
 public:
  Backtracer(const QueryPlan& plan, const DbSchema& db) : plan_(plan), db_(db), schema_(infer_schema(plan, db)) {}

  BacktraceResult run(const Nip& tuple) {
    std::vector<PendingRef> refs;
    const auto& root_type = *schema_.at(plan_.root())->element();
    for (const auto& f : root_type.fields()) refs.push_back({f.name, true, "t." + f.name, -1, {}});
    visit(plan_.root(), fields_of(tuple), std::move(refs));
    finish();
    return std::move(result_);
  }

 private:
  const Type& out_type(int id) const { return *schema_.at(id)->element(); }

  /// Child index and input-level path for an output-level path.
  std::vector<std::pair<std::size_t, std::string>> rewrite_down(const OperatorNode& node, const std::string& path) {
    const auto& p = node.params;
    auto segs = split_path(path);
    const std::string& head = segs.front();
    const std::string rest = join_path(segs, 1);
    auto with_rest = [&](const std::string& base) { return rest.empty() ? base : base + "." + rest; };
    switch (node.kind) {
      case OpKind::TableAccess:
      case OpKind::Selection:
      case OpKind::Dedup:
      case OpKind::Difference:
        return {{0, path}};
      case OpKind::Union:
        return {{0, path}, {1, path}};
      case OpKind::Projection:
        for (const auto& a : p.attrs) {
          if (split_path(a).back() == head) return {{0, with_rest(a)}};
        }
        return {};
      case OpKind::Renaming:
        for (const auto& [to, from] : p.renames) {
          if (to == head) return {{0, with_rest(from)}};
        }
        return {{0, path}};
      case OpKind::Join:
      case OpKind::CrossProduct:
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          if (out_type(node.inputs[i]).find(head)) return {{i, path}};
        }
        return {};
      case OpKind::Flatten: {
        const auto& in = out_type(node.inputs[0]);
        if (in.find(head)) return {{0, path}};
        return {{0, p.attr + "." + path}};
      }
      case OpKind::TupleNest:
      case OpKind::RelationNest: {
        if (head != p.target) return {{0, path}};
        if (!rest.empty()) return {{0, rest}};
        std::vector<std::pair<std::size_t, std::string>> out;
        for (const auto& a : p.attrs) out.push_back({0, a});
        return out;
      }
      case OpKind::Aggregation:
        if (head == p.target) return {{0, p.source}};
        return {{0, path}};
    }
    return {};
  }

  /// Constraint on the operator's input(s) given the constraint on its output.
  std::vector<Fields> push_down(const OperatorNode& node, const Fields& out) {
    const auto& p = node.params;
    std::vector<Fields> in(node.inputs.size());
    switch (node.kind) {
      case OpKind::TableAccess:
        break;
      case OpKind::Selection:
      case OpKind::Dedup:
        in[0] = out;
        break;
      case OpKind::Union:
        in[0] = out;
        in[1] = out;
        break;
      case OpKind::Difference:
        in[0] = out;  // the right input stays unconstrained
        break;
      case OpKind::Projection:
        for (const auto& a : p.attrs) {
          if (const Nip* c = find_field(out, split_path(a).back())) put_path(in[0], a, *c);
        }
        break;
      case OpKind::Renaming:
        for (const auto& f : out) {
          std::string from = f.name;
          for (const auto& [to, src] : p.renames) {
            if (to == f.name) from = src;
          }
          put_path(in[0], from, f.pattern);
        }
        break;
      case OpKind::Join:
      case OpKind::CrossProduct:
        for (const auto& f : out) {
          for (std::size_t i = 0; i < node.inputs.size(); ++i) {
            if (out_type(node.inputs[i]).find(f.name)) {
              put_path(in[i], f.name, f.pattern);
              break;
            }
          }
        }
        break;
      case OpKind::Flatten: {
        const auto& input = out_type(node.inputs[0]);
        Fields element;
        for (const auto& f : out) {
          if (input.find(f.name)) {
            put_path(in[0], f.name, f.pattern);
          } else if (constrains(f.pattern)) {
            element.push_back(f);
          }
        }
        // An outer flatten pads empty bags with nulls, so constraints that a
        // null satisfies do not require any bag element.
        const bool padding_fits =
            p.flatten_kind == FlattenKind::Outer && std::all_of(element.begin(), element.end(), [](const NamedNip& f) {
              return f.pattern.is_any() || (f.pattern.is_concrete() && f.pattern.value().is_null());
            });
        if (!element.empty() && !padding_fits) {
          Nip pushed = p.flatten_kind == FlattenKind::Tuple
                           ? Nip::tuple(element)
                           : Nip::bag({Nip::tuple(element), Nip::star()});
          // A constraint on the flattened attribute itself wins only if it is
          // more specific than "anything".
          auto segs = split_path(p.attr);
          Fields probe = in[0];
          const Nip* existing = nullptr;
          for (std::size_t k = 0; k < segs.size(); ++k) {
            existing = find_field(probe, segs[k]);
            if (!existing) break;
            if (k + 1 < segs.size()) probe = fields_of(*existing);
          }
          if (!existing || !constrains(*existing)) put_path(in[0], p.attr, pushed);
        }
        break;
      }
      case OpKind::TupleNest:
      case OpKind::RelationNest:
        for (const auto& f : out) {
          if (f.name != p.target) {
            put_path(in[0], f.name, f.pattern);
            continue;
          }
          Fields member;
          if (node.kind == OpKind::TupleNest) {
            member = fields_of(f.pattern);
          } else {
            // Every member must match when the collection pattern has a single
            // distinct element shape and no placeholders; otherwise any tuple
            // sharing the group key may contribute.
            auto elements = bag_elements(f.pattern);
            bool exact = !elements.empty();
            for (const auto& e : elements) {
              if (e.is_star() || e.is_any() || !(e == elements.front())) exact = false;
            }
            if (exact) member = fields_of(elements.front());
          }
          for (const auto& m : member) put_path(in[0], m.name, m.pattern);
        }
        break;
      case OpKind::Aggregation:
        for (const auto& f : out) {
          if (f.name == p.target) {
            if (constrains(f.pattern)) {
              result_.warnings.push_back("constraint " + to_string(f.pattern) + " on aggregation output '" + f.name +
                                         "' of " + describe(node) + " relaxed to ?");
            }
            continue;
          }
          put_path(in[0], f.name, f.pattern);
        }
        break;
    }
    return in;
  }

  void visit(int id, const Fields& out, std::vector<PendingRef> refs) {
    const auto& node = plan_.node(id);
    result_.op_nips[id] = complete(out, out_type(id));
    if (node.kind == OpKind::TableAccess) {
      result_.leaf_nips[id] = result_.op_nips[id];
      for (auto& r : refs) {
        result_.assoc.push_back({node.params.table, id, r.path, r.blue, r.label, r.op_id, r.slot});
      }
      return;
    }
    std::vector<std::vector<PendingRef>> per_child(node.inputs.size());
    for (const auto& r : refs) {
      for (auto& [child, path] : rewrite_down(node, r.path)) {
        PendingRef moved = r;
        moved.path = path;
        per_child[child].push_back(std::move(moved));
      }
    }
    // Parameter references live at input level; nesting targets are output names.
    for (const auto& ref : attribute_refs(node)) {
      std::string label = op_symbol(node.kind) + std::to_string(id) + "." + split_path(ref.path).back();
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        if (try_resolve_path(out_type(node.inputs[i]), ref.path)) {
          per_child[i].push_back({ref.path, false, label, id, ref.slot});
          if (node.kind != OpKind::Union && node.kind != OpKind::Difference) break;
        }
      }
    }
    if (node.kind == OpKind::TupleNest || node.kind == OpKind::RelationNest) {
      std::string label = op_symbol(node.kind) + std::to_string(id) + "." + node.params.target;
      for (auto& [child, path] : rewrite_down(node, node.params.target)) {
        per_child[child].push_back({path, false, label, id, "target"});
      }
    }
    auto inputs = push_down(node, out);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) visit(node.inputs[i], inputs[i], std::move(per_child[i]));
  }

  void finish() {
    std::map<std::string, std::vector<int>> by_relation;
    for (const auto& [id, nip] : result_.leaf_nips) by_relation[plan_.node(id).params.table].push_back(id);
    for (const auto& [relation, ids] : by_relation) {
      const Nip& first = result_.leaf_nips.at(ids.front());
      bool same = std::all_of(ids.begin(), ids.end(), [&](int id) { return result_.leaf_nips.at(id) == first; });
      result_.nips.emplace(relation, same ? first : all_any_tuple(*db_.at(relation)->element()));
    }
  }

  const QueryPlan& plan_;
  const DbSchema& db_;
  SchemaMap schema_;
  BacktraceResult result_;
};

}  // namespace

std::string op_symbol(OpKind kind) {
  switch (kind) {
    case OpKind::TableAccess: return "R";
    case OpKind::Projection: return "pi";
    case OpKind::Renaming: return "rho";
    case OpKind::Selection: return "sigma";
    case OpKind::Join: return "join";
    case OpKind::CrossProduct: return "cross";
    case OpKind::Union: return "union";
    case OpKind::Difference: return "diff";
    case OpKind::Dedup: return "delta";
    case OpKind::Flatten: return "F";
    case OpKind::TupleNest: return "NT";
    case OpKind::RelationNest: return "N";
    case OpKind::Aggregation: return "gamma";
  }
  return "op";
}

BacktraceResult backtrace_plan(const QueryPlan& plan, const DbSchema& db, const Nip& tuple) {
  return Backtracer(plan, db).run(tuple);
}

BacktraceResult schema_backtrace(const WhyNotQuestion& q) {
  validate_question(q);
  return backtrace_plan(q.plan, schema_of(q.db), q.tuple);
}

Json backtrace_to_json(const BacktraceResult& bt) {
  Json out;
  out["nips"] = Json::object();
  for (const auto& [relation, nip] : bt.nips) out["nips"][relation] = nip_to_json(nip);
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<std::string>, std::vector<std::string>>> by_source;
  for (const auto& a : bt.assoc) {
    auto& entry = by_source[{a.relation, a.source}];
    (a.blue ? entry.first : entry.second).push_back(a.label);
  }
  out["assoc"] = Json::array();
  for (const auto& [key, labels] : by_source) {
    out["assoc"].push_back({{"relation", key.first}, {"src", key.second}, {"blue", labels.first}, {"red", labels.second}});
  }
  out["warnings"] = bt.warnings;
  return out;
}

}  // namespace whynot
