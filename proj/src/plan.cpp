#include "whynot/plan.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "whynot/error.hpp"

namespace whynot {

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  fail(ErrorCode::MalformedPlan, std::string("unknown ") + what + " '" + s + "'");
}

constexpr std::pair<OpKind, std::string_view> kOpKinds[] = {
    {OpKind::TableAccess, "table"},    {OpKind::Projection, "projection"},
    {OpKind::Renaming, "renaming"},    {OpKind::Selection, "selection"},
    {OpKind::Join, "join"},            {OpKind::CrossProduct, "cross"},
    {OpKind::Union, "union"},          {OpKind::Difference, "difference"},
    {OpKind::Dedup, "dedup"},          {OpKind::Flatten, "flatten"},
    {OpKind::TupleNest, "tuple_nest"}, {OpKind::RelationNest, "relation_nest"},
    {OpKind::Aggregation, "aggregation"},
};
constexpr std::pair<JoinKind, std::string_view> kJoinKinds[] = {
    {JoinKind::Inner, "inner"}, {JoinKind::Left, "left"}, {JoinKind::Right, "right"}, {JoinKind::Full, "full"}};
constexpr std::pair<FlattenKind, std::string_view> kFlattenKinds[] = {
    {FlattenKind::Tuple, "tuple"}, {FlattenKind::Inner, "inner"}, {FlattenKind::Outer, "outer"}};
constexpr std::pair<CmpOp, std::string_view> kCmpOps[] = {
    {CmpOp::Eq, "="}, {CmpOp::Ne, "!="}, {CmpOp::Lt, "<"}, {CmpOp::Le, "<="}, {CmpOp::Gt, ">"}, {CmpOp::Ge, ">="}};
constexpr std::pair<AggFn, std::string_view> kAggFns[] = {
    {AggFn::Count, "count"}, {AggFn::Sum, "sum"}, {AggFn::Min, "min"}, {AggFn::Max, "max"}, {AggFn::Avg, "avg"}};

template <typename E, std::size_t N>
std::string_view enum_name(E e, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return "?";
}

std::size_t arity(OpKind kind) {
  switch (kind) {
    case OpKind::TableAccess: return 0;
    case OpKind::Join:
    case OpKind::CrossProduct:
    case OpKind::Union:
    case OpKind::Difference: return 2;
    default: return 1;
  }
}

void collect(const Predicate& p, std::vector<const Predicate*>& out) {
  if (p.kind == Predicate::Kind::Cmp) out.push_back(&p);
  for (const auto& c : p.children) collect(c, out);
}

void collect(Predicate& p, std::vector<Predicate*>& out) {
  if (p.kind == Predicate::Kind::Cmp) out.push_back(&p);
  for (auto& c : p.children) collect(c, out);
}

Operand operand_from_json(const Json& j) {
  if (j.is_string()) return Operand::attr(j.get<std::string>());
  if (j.is_object() && j.contains("attr")) return Operand::attr(j.at("attr").get<std::string>());
  if (j.is_object() && j.contains("const")) return Operand::constant_value(value_from_json(j.at("const")));
  if (j.is_number_integer() || j.is_boolean() || j.is_null()) return Operand::constant_value(value_from_json(j));
  fail(ErrorCode::MalformedPlan, "malformed operand: " + j.dump());
}

Json operand_to_json(const Operand& o) {
  if (o.is_attr) return o.path;
  return Json{{"const", value_to_json(o.constant)}};
}

std::string operand_string(const Operand& o) { return o.is_attr ? o.path : to_string(o.constant); }

// Slot names: "theta[k].lhs" / "theta[k].rhs".
bool parse_theta_slot(const std::string& slot, std::size_t& k, bool& lhs) {
  if (slot.rfind("theta[", 0) != 0) return false;
  auto close = slot.find(']');
  if (close == std::string::npos) return false;
  k = std::stoul(slot.substr(6, close - 6));
  auto side = slot.substr(close + 1);
  if (side == ".lhs") {
    lhs = true;
    return true;
  }
  if (side == ".rhs") {
    lhs = false;
    return true;
  }
  return false;
}

bool parse_indexed_slot(const std::string& slot, const std::string& prefix, std::size_t& k) {
  if (slot.rfind(prefix + "[", 0) != 0 || slot.back() != ']') return false;
  k = std::stoul(slot.substr(prefix.size() + 1, slot.size() - prefix.size() - 2));
  return true;
}

}  // namespace

std::string_view op_kind_name(OpKind kind) { return enum_name(kind, kOpKinds); }
std::string_view join_kind_name(JoinKind kind) { return enum_name(kind, kJoinKinds); }
std::string_view flatten_kind_name(FlattenKind kind) { return enum_name(kind, kFlattenKinds); }
std::string_view cmp_op_name(CmpOp op) { return enum_name(op, kCmpOps); }
std::string_view agg_fn_name(AggFn fn) { return enum_name(fn, kAggFns); }

Predicate Predicate::compare(Operand lhs, CmpOp op, Operand rhs) {
  Predicate p;
  p.kind = Kind::Cmp;
  p.op = op;
  p.lhs = std::move(lhs);
  p.rhs = std::move(rhs);
  return p;
}

Predicate Predicate::conjunction(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::And;
  p.children = std::move(children);
  return p;
}

Predicate Predicate::disjunction(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::Or;
  p.children = std::move(children);
  return p;
}

Predicate Predicate::negation(Predicate child) {
  Predicate p;
  p.kind = Kind::Not;
  p.children.push_back(std::move(child));
  return p;
}

std::vector<const Predicate*> comparisons(const Predicate& p) {
  std::vector<const Predicate*> out;
  collect(p, out);
  return out;
}

std::vector<Predicate*> comparisons(Predicate& p) {
  std::vector<Predicate*> out;
  collect(p, out);
  return out;
}

QueryPlan::QueryPlan(std::vector<OperatorNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) fail(ErrorCode::MalformedPlan, "plan has no operators");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].id, i).second) {
      fail(ErrorCode::MalformedPlan, "duplicate operator id " + std::to_string(nodes_[i].id));
    }
  }
  std::map<int, int> consumers;
  for (const auto& n : nodes_) {
    if (n.inputs.size() != arity(n.kind)) {
      fail(ErrorCode::MalformedPlan, "operator " + std::to_string(n.id) + " (" + std::string(op_kind_name(n.kind)) +
                                         ") expects " + std::to_string(arity(n.kind)) + " inputs");
    }
    for (int in : n.inputs) {
      if (!index_.count(in)) fail(ErrorCode::MalformedPlan, "unknown input " + std::to_string(in));
      if (++consumers[in] > 1) {
        fail(ErrorCode::MalformedPlan, "operator " + std::to_string(in) + " feeds more than one operator");
      }
    }
  }
  std::vector<int> roots;
  for (const auto& n : nodes_) {
    if (!consumers.count(n.id)) roots.push_back(n.id);
  }
  if (roots.size() != 1) fail(ErrorCode::MalformedPlan, "plan must have exactly one root");
  root_ = roots.front();
  if (post_order().size() != nodes_.size()) fail(ErrorCode::MalformedPlan, "plan is not a tree");
}

const OperatorNode& QueryPlan::node(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::MalformedPlan, "no operator with id " + std::to_string(id));
  return nodes_[it->second];
}

std::vector<int> QueryPlan::post_order() const {
  std::vector<int> out;
  std::set<int> seen;
  std::function<void(int)> visit = [&](int id) {
    if (!seen.insert(id).second) fail(ErrorCode::MalformedPlan, "cycle through operator " + std::to_string(id));
    for (int in : node(id).inputs) visit(in);
    out.push_back(id);
  };
  visit(root_);
  return out;
}

int QueryPlan::parent(int id) const {
  for (const auto& n : nodes_) {
    if (std::find(n.inputs.begin(), n.inputs.end(), id) != n.inputs.end()) return n.id;
  }
  return -1;
}

QueryPlan QueryPlan::with_params(int id, OperatorParams params) const {
  QueryPlan copy = *this;
  copy.nodes_[copy.index_.at(id)].params = std::move(params);
  (void)node(id);
  return copy;
}

QueryPlan QueryPlan::subplan(int id) const {
  std::vector<OperatorNode> nodes;
  std::function<void(int)> visit = [&](int n) {
    for (int in : node(n).inputs) visit(in);
    nodes.push_back(node(n));
  };
  visit(id);
  return QueryPlan(std::move(nodes));
}

bool same_structure(const QueryPlan& a, const QueryPlan& b) {
  if (a.size() != b.size() || a.root() != b.root()) return false;
  for (const auto& n : a.nodes()) {
    if (!b.contains(n.id)) return false;
    const auto& m = b.node(n.id);
    if (m.kind != n.kind || m.inputs != n.inputs) return false;
  }
  return true;
}

std::vector<int> changed_ops(const QueryPlan& a, const QueryPlan& b) {
  if (!same_structure(a, b)) fail(ErrorCode::MalformedPlan, "plans differ in structure");
  std::vector<int> out;
  for (int id : a.post_order()) {
    if (!(a.node(id).params == b.node(id).params)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AttrRef> attribute_refs(const OperatorNode& node) {
  std::vector<AttrRef> out;
  const auto& p = node.params;
  switch (node.kind) {
    case OpKind::Projection:
      for (std::size_t k = 0; k < p.attrs.size(); ++k) out.push_back({"attrs[" + std::to_string(k) + "]", p.attrs[k]});
      break;
    case OpKind::TupleNest:
    case OpKind::RelationNest:
      for (std::size_t k = 0; k < p.attrs.size(); ++k) out.push_back({"attrs[" + std::to_string(k) + "]", p.attrs[k]});
      break;
    case OpKind::Renaming:
      for (std::size_t k = 0; k < p.renames.size(); ++k) {
        out.push_back({"from[" + std::to_string(k) + "]", p.renames[k].second});
      }
      break;
    case OpKind::Selection:
    case OpKind::Join: {
      auto cmps = comparisons(p.theta);
      for (std::size_t k = 0; k < cmps.size(); ++k) {
        const auto base = "theta[" + std::to_string(k) + "]";
        if (cmps[k]->lhs.is_attr) out.push_back({base + ".lhs", cmps[k]->lhs.path});
        if (cmps[k]->rhs.is_attr) out.push_back({base + ".rhs", cmps[k]->rhs.path});
      }
      break;
    }
    case OpKind::Flatten:
      out.push_back({"attr", p.attr});
      break;
    case OpKind::Aggregation:
      out.push_back({"source", p.source});
      break;
    default:
      break;
  }
  return out;
}

OperatorParams with_ref(const OperatorNode& node, const std::string& slot, const std::string& path) {
  OperatorParams p = node.params;
  std::size_t k = 0;
  bool lhs = false;
  if (slot == "attr" && node.kind == OpKind::Flatten) {
    p.attr = path;
  } else if (slot == "source" && node.kind == OpKind::Aggregation) {
    p.source = path;
  } else if (parse_indexed_slot(slot, "attrs", k) && k < p.attrs.size()) {
    p.attrs[k] = path;
  } else if (parse_indexed_slot(slot, "from", k) && k < p.renames.size()) {
    p.renames[k].second = path;
  } else if (parse_theta_slot(slot, k, lhs)) {
    auto cmps = comparisons(p.theta);
    if (k >= cmps.size()) fail(ErrorCode::MalformedPlan, "no comparison " + slot);
    (lhs ? cmps[k]->lhs : cmps[k]->rhs) = Operand::attr(path);
  } else {
    fail(ErrorCode::MalformedPlan, "operator " + std::to_string(node.id) + " has no slot '" + slot + "'");
  }
  return p;
}

Predicate predicate_from_json(const Json& j) {
  if (j.is_boolean()) return j.get<bool>() ? Predicate::always() : Predicate::never();
  if (!j.is_object()) fail(ErrorCode::MalformedPlan, "malformed predicate: " + j.dump());
  if (j.contains("cmp")) {
    CmpOp op = parse_enum(j.at("cmp").get<std::string>(), kCmpOps, "comparison");
    return Predicate::compare(operand_from_json(j.at("lhs")), op, operand_from_json(j.at("rhs")));
  }
  auto list = [&](const char* key) {
    std::vector<Predicate> out;
    for (const auto& c : j.at(key)) out.push_back(predicate_from_json(c));
    return out;
  };
  if (j.contains("and")) return Predicate::conjunction(list("and"));
  if (j.contains("or")) return Predicate::disjunction(list("or"));
  if (j.contains("not")) return Predicate::negation(predicate_from_json(j.at("not")));
  fail(ErrorCode::MalformedPlan, "malformed predicate: " + j.dump());
}

Json predicate_to_json(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::True: return true;
    case Predicate::Kind::False: return false;
    case Predicate::Kind::Cmp:
      return Json{{"cmp", std::string(cmp_op_name(p.op))}, {"lhs", operand_to_json(p.lhs)}, {"rhs", operand_to_json(p.rhs)}};
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      Json list = Json::array();
      for (const auto& c : p.children) list.push_back(predicate_to_json(c));
      return Json{{p.kind == Predicate::Kind::And ? "and" : "or", list}};
    }
    case Predicate::Kind::Not:
      return Json{{"not", predicate_to_json(p.children.at(0))}};
  }
  return true;
}

QueryPlan plan_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::MalformedPlan, "plan must be an array of operators");
  std::vector<OperatorNode> nodes;
  try {
    for (const auto& jn : j) {
      OperatorNode n;
      n.id = jn.at("id").get<int>();
      n.kind = parse_enum(jn.at("kind").get<std::string>(), kOpKinds, "operator kind");
      if (jn.contains("inputs")) n.inputs = jn.at("inputs").get<std::vector<int>>();
      const Json params = jn.value("params", Json::object());
      auto& p = n.params;
      switch (n.kind) {
        case OpKind::TableAccess:
          p.table = params.at("name").get<std::string>();
          break;
        case OpKind::Projection:
          p.attrs = params.at("attrs").get<std::vector<std::string>>();
          break;
        case OpKind::Renaming:
          for (const auto& pair : params.at("pairs")) {
            p.renames.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
          }
          break;
        case OpKind::Selection:
          p.theta = predicate_from_json(params.at("theta"));
          break;
        case OpKind::Join:
          p.join_kind = parse_enum(params.value("kind", std::string("inner")), kJoinKinds, "join kind");
          p.theta = predicate_from_json(params.at("theta"));
          break;
        case OpKind::Flatten:
          p.flatten_kind = parse_enum(params.value("kind", std::string("inner")), kFlattenKinds, "flatten kind");
          p.attr = params.at("attr").get<std::string>();
          break;
        case OpKind::TupleNest:
        case OpKind::RelationNest:
          p.attrs = params.at("attrs").get<std::vector<std::string>>();
          p.target = params.at("target").get<std::string>();
          break;
        case OpKind::Aggregation:
          p.fn = parse_enum(params.at("fn").get<std::string>(), kAggFns, "aggregation function");
          p.source = params.at("source").get<std::string>();
          p.target = params.at("target").get<std::string>();
          break;
        default:
          break;
      }
      nodes.push_back(std::move(n));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedPlan, std::string("malformed plan JSON: ") + e.what());
  }
  return QueryPlan(std::move(nodes));
}

Json plan_to_json(const QueryPlan& plan) {
  Json out = Json::array();
  for (const auto& n : plan.nodes()) {
    Json params = Json::object();
    const auto& p = n.params;
    switch (n.kind) {
      case OpKind::TableAccess: params["name"] = p.table; break;
      case OpKind::Projection: params["attrs"] = p.attrs; break;
      case OpKind::Renaming: {
        Json pairs = Json::array();
        for (const auto& [to, from] : p.renames) pairs.push_back(Json::array({to, from}));
        params["pairs"] = pairs;
        break;
      }
      case OpKind::Selection: params["theta"] = predicate_to_json(p.theta); break;
      case OpKind::Join:
        params["kind"] = std::string(join_kind_name(p.join_kind));
        params["theta"] = predicate_to_json(p.theta);
        break;
      case OpKind::Flatten:
        params["kind"] = std::string(flatten_kind_name(p.flatten_kind));
        params["attr"] = p.attr;
        break;
      case OpKind::TupleNest:
      case OpKind::RelationNest:
        params["attrs"] = p.attrs;
        params["target"] = p.target;
        break;
      case OpKind::Aggregation:
        params["fn"] = std::string(agg_fn_name(p.fn));
        params["source"] = p.source;
        params["target"] = p.target;
        break;
      default:
        break;
    }
    out.push_back(Json{{"id", n.id}, {"kind", std::string(op_kind_name(n.kind))}, {"params", params}, {"inputs", n.inputs}});
  }
  return out;
}

std::string to_string(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::True: return "true";
    case Predicate::Kind::False: return "false";
    case Predicate::Kind::Cmp:
      return operand_string(p.lhs) + " " + std::string(cmp_op_name(p.op)) + " " + operand_string(p.rhs);
    case Predicate::Kind::And:
    case Predicate::Kind::Or: {
      std::string out = "(";
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += p.kind == Predicate::Kind::And ? " and " : " or ";
        out += to_string(p.children[i]);
      }
      return out + ")";
    }
    case Predicate::Kind::Not:
      return "not " + to_string(p.children.at(0));
  }
  return "?";
}

std::string describe(const OperatorNode& node) {
  const auto& p = node.params;
  auto join = [](const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + xs[i];
    return out;
  };
  std::string head = std::string(op_kind_name(node.kind)) + std::to_string(node.id);
  switch (node.kind) {
    case OpKind::TableAccess: return head + "[" + p.table + "]";
    case OpKind::Projection: return head + "[" + join(p.attrs) + "]";
    case OpKind::Selection: return head + "[" + to_string(p.theta) + "]";
    case OpKind::Join: return head + "[" + std::string(join_kind_name(p.join_kind)) + ": " + to_string(p.theta) + "]";
    case OpKind::Flatten: return head + "[" + std::string(flatten_kind_name(p.flatten_kind)) + " " + p.attr + "]";
    case OpKind::TupleNest:
    case OpKind::RelationNest: return head + "[" + join(p.attrs) + " -> " + p.target + "]";
    case OpKind::Aggregation:
      return head + "[" + std::string(agg_fn_name(p.fn)) + "(" + p.source + ") -> " + p.target + "]";
    default: return head;
  }
}

}  // namespace whynot
