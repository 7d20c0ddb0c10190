#include "whynot/alternatives.hpp"

#include <algorithm>
#include <functional>

#include "whynot/error.hpp"

namespace whynot {

namespace {

/// Like try_resolve_path, but steps into the element type of bag attributes,
/// so "address2.city" names the city of each address2 element.
TypePtr resolve_through_bags(const Type& tuple_type, const std::string& path) {
  const Type* current = &tuple_type;
  TypePtr result;
  for (const auto& segment : split_path(path)) {
    if (current->is_bag()) current = current->element().get();
    if (!current->is_tuple()) return nullptr;
    const Field* f = current->find(segment);
    if (!f) return nullptr;
    result = f->type;
    current = result.get();
  }
  return result;
}

bool has_prefix(const std::string& path, const std::string& prefix) {
  return path.size() > prefix.size() && path.compare(0, prefix.size(), prefix) == 0 && path[prefix.size()] == '.';
}

/// Image of an input-level path at the operator's output.
std::optional<std::string> forward_step(const OperatorNode& node, const std::string& path) {
  const auto& p = node.params;
  auto segs = split_path(path);
  const std::string rest = join_path(segs, 1);
  switch (node.kind) {
    case OpKind::Projection:
      for (const auto& a : p.attrs) {
        const std::string name = split_path(a).back();
        if (path == a) return name;
        if (has_prefix(path, a)) return name + path.substr(a.size());
      }
      return std::nullopt;
    case OpKind::Renaming:
      for (const auto& [to, from] : p.renames) {
        if (segs.front() == from) return rest.empty() ? to : to + "." + rest;
      }
      return path;
    case OpKind::Flatten:
      if (has_prefix(path, p.attr)) return path.substr(p.attr.size() + 1);
      return path;
    case OpKind::TupleNest:
    case OpKind::RelationNest:
      if (std::find(p.attrs.begin(), p.attrs.end(), segs.front()) != p.attrs.end()) return p.target + "." + path;
      return path;
    default:
      return path;
  }
}

struct Slot {
  int op_id;
  std::string slot;
  int table_op;
  std::vector<std::string> choices;  // source paths, original first
};

}  // namespace

AttributeAlternatives alternatives_from_json(const Json& j) {
  AttributeAlternatives out;
  if (j.is_null()) return out;
  if (!j.is_object()) fail(ErrorCode::ConfigError, "alternatives must be an object of path -> [paths]");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) fail(ErrorCode::ConfigError, "alternatives of '" + key + "' must be an array");
    auto& list = out[key];
    for (const auto& v : value) {
      if (!v.is_string()) fail(ErrorCode::ConfigError, "alternative of '" + key + "' must be a string");
      list.push_back(v.get<std::string>());
    }
  }
  return out;
}

Json alternatives_to_json(const AttributeAlternatives& alts) {
  Json out = Json::object();
  for (const auto& [key, list] : alts) out[key] = list;
  return out;
}

void validate_alternatives(const AttributeAlternatives& alts, const DbSchema& db) {
  for (const auto& [key, list] : alts) {
    bool found = false;
    for (const auto& [relation, type] : db) {
      auto source = resolve_through_bags(*type->element(), key);
      if (!source) continue;
      found = true;
      for (const auto& alt : list) {
        auto t = resolve_through_bags(*type->element(), alt);
        if (!t) fail(ErrorCode::InvalidAlternative, "alternative '" + alt + "' of '" + key + "' not in " + relation);
        if (!type_equal(*t, *source)) {
          fail(ErrorCode::InvalidAlternative, "alternative '" + alt + "' has type " + to_string(*t) + ", '" + key +
                                                  "' has " + to_string(*source));
        }
      }
    }
    if (!found) fail(ErrorCode::InvalidAlternative, "no relation has attribute '" + key + "'");
  }
}

std::vector<int> SchemaAlternative::changed_ops() const {
  std::vector<int> ops;
  for (const auto& [key, path] : substitutions) ops.push_back(key.first);
  std::sort(ops.begin(), ops.end());
  ops.erase(std::unique(ops.begin(), ops.end()), ops.end());
  return ops;
}

std::optional<std::string> forward_path(const QueryPlan& plan, int table_op, int at, const std::string& path) {
  std::string current = path;
  int id = table_op;
  while (id != at) {
    // The table access itself passes paths unchanged.
    if (id != table_op) {
      auto next = forward_step(plan.node(id), current);
      if (!next) return std::nullopt;
      current = *next;
    }
    id = plan.parent(id);
    if (id < 0) return std::nullopt;
  }
  return current;
}

std::vector<SchemaAlternative> enumerate_sas(const BacktraceResult& bt, const AttributeAlternatives& alts,
                                             const QueryPlan& plan, const DbSchema& db, std::size_t max_sas) {
  const Nip& tuple = bt.op_nips.at(plan.root());
  const auto original_root = infer_schema(plan, db).at(plan.root());

  std::vector<SchemaAlternative> out;
  SchemaAlternative first;
  first.index = 1;
  first.plan = plan;
  first.bt = bt;
  out.push_back(std::move(first));

  // Reference slots reached by exactly one source; nesting targets are names,
  // not references, and are never substituted.
  std::map<SlotKey, std::vector<const Association*>> by_slot;
  for (const auto& a : bt.assoc) {
    if (!a.blue && a.slot != "target") by_slot[{a.op_id, a.slot}].push_back(&a);
  }
  std::vector<Slot> slots;
  for (int id : plan.post_order()) {
    for (const auto& ref : attribute_refs(plan.node(id))) {
      auto it = by_slot.find({id, ref.slot});
      if (it == by_slot.end() || it->second.size() != 1) continue;
      const Association& a = *it->second.front();
      Slot s{id, ref.slot, a.table_op, {a.source}};
      auto alt = alts.find(a.source);
      if (alt != alts.end()) {
        for (const auto& x : alt->second) {
          if (std::find(s.choices.begin(), s.choices.end(), x) == s.choices.end()) s.choices.push_back(x);
        }
      }
      if (s.choices.size() > 1) slots.push_back(std::move(s));
    }
  }

  std::map<SlotKey, std::string> chosen;
  std::function<void(std::size_t, const QueryPlan&)> expand = [&](std::size_t k, const QueryPlan& current) {
    if (k == slots.size()) {
      // Projections and nestings whose attribute list is only permuted behave
      // exactly like the original operator: undo such substitutions.
      QueryPlan normalized = current;
      auto subs = chosen;
      for (const auto& node : current.nodes()) {
        if (node.kind != OpKind::Projection && node.kind != OpKind::TupleNest && node.kind != OpKind::RelationNest) {
          continue;
        }
        const auto& before = plan.node(node.id).params;
        if (node.params.attrs == before.attrs) continue;
        auto a = node.params.attrs, b = before.attrs;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) continue;
        normalized = normalized.with_params(node.id, before);
        std::erase_if(subs, [&](const auto& entry) { return entry.first.first == node.id; });
      }
      if (subs.empty()) return;  // the original plan is S_1
      try {
        const auto root = infer_schema(current, db).at(current.root());
        if (!type_equal(*root, *original_root)) return;
      } catch (const Error&) {
        return;
      }
      for (const auto& sa : out) {
        if (sa.substitutions == subs) return;
      }
      if (out.size() >= max_sas) {
        fail(ErrorCode::TooManyAlternatives,
             "more than " + std::to_string(max_sas) + " schema alternatives; raise --max-sas or trim alternatives");
      }
      SchemaAlternative sa;
      sa.index = static_cast<int>(out.size()) + 1;
      sa.substitutions = std::move(subs);
      sa.plan = normalized;
      sa.bt = backtrace_plan(normalized, db, tuple);
      out.push_back(std::move(sa));
      return;
    }
    const Slot& s = slots[k];
    const auto& node = current.node(s.op_id);
    std::string original;
    for (const auto& ref : attribute_refs(node)) {
      if (ref.slot == s.slot) original = ref.path;
    }
    // A slot naming a derived attribute (e.g. an aggregation output) is not
    // the image of its source and keeps its reference under every choice.
    if (forward_path(plan, s.table_op, s.op_id, s.choices.front()) != original) {
      expand(k + 1, current);
      return;
    }
    for (const auto& source : s.choices) {
      auto image = forward_path(current, s.table_op, s.op_id, source);
      if (!image) continue;
      if (*image == original) {
        expand(k + 1, current);
        continue;
      }
      QueryPlan next = current.with_params(s.op_id, with_ref(node, s.slot, *image));
      chosen[{s.op_id, s.slot}] = *image;
      expand(k + 1, next);
      chosen.erase({s.op_id, s.slot});
    }
  };
  expand(0, plan);
  return out;
}

}  // namespace whynot
