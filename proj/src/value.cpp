#include "whynot/value.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "whynot/error.hpp"

namespace whynot {

namespace detail {

struct TupleRep {
  std::vector<NamedValue> fields;
  std::vector<std::uint32_t> by_name;  // indices of fields sorted by name
  std::size_t hash = 0;
};

struct BagRep {
  std::vector<BagEntry> entries;
  std::uint64_t cardinality = 0;
  std::size_t hash = 0;
};

}  // namespace detail

namespace {

inline std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

Value Value::boolean(bool b) {
  Value v;
  v.rep_ = b;
  return v;
}

Value Value::integer(std::int64_t i) {
  Value v;
  v.rep_ = i;
  return v;
}

Value Value::string(std::string s) {
  Value v;
  v.rep_ = std::make_shared<const std::string>(std::move(s));
  return v;
}

Value Value::tuple(std::vector<NamedValue> fields) {
  auto rep = std::make_shared<detail::TupleRep>();
  rep->fields = std::move(fields);
  rep->by_name.resize(rep->fields.size());
  std::iota(rep->by_name.begin(), rep->by_name.end(), 0U);
  const auto& fs = rep->fields;
  std::sort(rep->by_name.begin(), rep->by_name.end(),
            [&](std::uint32_t a, std::uint32_t b) { return fs[a].name < fs[b].name; });
  for (std::size_t i = 1; i < rep->by_name.size(); ++i) {
    if (fs[rep->by_name[i]].name == fs[rep->by_name[i - 1]].name) {
      fail(ErrorCode::InvalidType, "duplicate attribute '" + fs[rep->by_name[i]].name + "' in tuple");
    }
  }
  std::size_t h = 0x7475706c;
  for (auto i : rep->by_name) {
    h = mix(h, std::hash<std::string>{}(fs[i].name));
    h = mix(h, fs[i].value.hash());
  }
  rep->hash = h;
  Value v;
  v.rep_ = std::shared_ptr<const detail::TupleRep>(std::move(rep));
  return v;
}

Value Value::bag(std::vector<BagEntry> entries) {
  BagBuilder b;
  for (auto& e : entries) b.add(std::move(e.value), e.multiplicity);
  return std::move(b).build();
}

Value Value::empty_bag() { return BagBuilder{}.build(); }

ValueKind Value::kind() const noexcept {
  switch (rep_.index()) {
    case 0: return ValueKind::Null;
    case 1: return ValueKind::Bool;
    case 2: return ValueKind::Int;
    case 3: return ValueKind::String;
    case 4: return ValueKind::Tuple;
    default: return ValueKind::Bag;
  }
}

bool Value::as_bool() const {
  if (auto* b = std::get_if<bool>(&rep_)) return *b;
  fail(ErrorCode::TypeMismatch, "value is not a bool: " + to_string(*this));
}

std::int64_t Value::as_int() const {
  if (auto* i = std::get_if<std::int64_t>(&rep_)) return *i;
  fail(ErrorCode::TypeMismatch, "value is not an int: " + to_string(*this));
}

const std::string& Value::as_string() const {
  if (auto* s = std::get_if<std::shared_ptr<const std::string>>(&rep_)) return **s;
  fail(ErrorCode::TypeMismatch, "value is not a string: " + to_string(*this));
}

std::span<const NamedValue> Value::fields() const {
  if (auto* t = std::get_if<std::shared_ptr<const detail::TupleRep>>(&rep_)) return (*t)->fields;
  fail(ErrorCode::TypeMismatch, "value is not a tuple: " + to_string(*this));
}

const Value* Value::get(std::string_view name) const {
  auto* t = std::get_if<std::shared_ptr<const detail::TupleRep>>(&rep_);
  if (!t) return nullptr;
  for (const auto& f : (*t)->fields) {
    if (f.name == name) return &f.value;
  }
  return nullptr;
}

std::size_t Value::arity() const { return fields().size(); }

std::span<const BagEntry> Value::entries() const {
  if (auto* b = std::get_if<std::shared_ptr<const detail::BagRep>>(&rep_)) return (*b)->entries;
  fail(ErrorCode::TypeMismatch, "value is not a bag: " + to_string(*this));
}

std::uint64_t Value::cardinality() const {
  if (auto* b = std::get_if<std::shared_ptr<const detail::BagRep>>(&rep_)) return (*b)->cardinality;
  fail(ErrorCode::TypeMismatch, "value is not a bag: " + to_string(*this));
}

std::uint64_t Value::multiplicity(const Value& element) const {
  auto es = entries();
  auto it = std::lower_bound(es.begin(), es.end(), element,
                             [](const BagEntry& e, const Value& v) { return compare(e.value, v) < 0; });
  if (it != es.end() && it->value == element) return it->multiplicity;
  return 0;
}

std::size_t Value::hash() const {
  switch (rep_.index()) {
    case 0: return 0x6e756c6c;
    case 1: return std::get<bool>(rep_) ? 0x74 : 0x66;
    case 2: return mix(0x696e74, std::hash<std::int64_t>{}(std::get<std::int64_t>(rep_)));
    case 3: return mix(0x737472, std::hash<std::string>{}(as_string()));
    case 4: return std::get<std::shared_ptr<const detail::TupleRep>>(rep_)->hash;
    default: return std::get<std::shared_ptr<const detail::BagRep>>(rep_)->hash;
  }
}

int compare(const Value& a, const Value& b) {
  auto ka = static_cast<int>(a.kind());
  auto kb = static_cast<int>(b.kind());
  if (ka != kb) return ka < kb ? -1 : 1;
  switch (a.kind()) {
    case ValueKind::Null:
      return 0;
    case ValueKind::Bool: {
      bool x = a.as_bool(), y = b.as_bool();
      return x == y ? 0 : (x ? 1 : -1);
    }
    case ValueKind::Int: {
      auto x = a.as_int(), y = b.as_int();
      return x == y ? 0 : (x < y ? -1 : 1);
    }
    case ValueKind::String: {
      int c = a.as_string().compare(b.as_string());
      return c == 0 ? 0 : (c < 0 ? -1 : 1);
    }
    case ValueKind::Tuple: {
      const auto& ta = *std::get<std::shared_ptr<const detail::TupleRep>>(a.rep_);
      const auto& tb = *std::get<std::shared_ptr<const detail::TupleRep>>(b.rep_);
      std::size_t n = std::min(ta.fields.size(), tb.fields.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& x = ta.fields[ta.by_name[i]];
        const auto& y = tb.fields[tb.by_name[i]];
        int c = x.name.compare(y.name);
        if (c != 0) return c < 0 ? -1 : 1;
        c = compare(x.value, y.value);
        if (c != 0) return c;
      }
      if (ta.fields.size() == tb.fields.size()) return 0;
      return ta.fields.size() < tb.fields.size() ? -1 : 1;
    }
    case ValueKind::Bag: {
      auto ea = a.entries();
      auto eb = b.entries();
      std::size_t n = std::min(ea.size(), eb.size());
      for (std::size_t i = 0; i < n; ++i) {
        int c = compare(ea[i].value, eb[i].value);
        if (c != 0) return c;
        if (ea[i].multiplicity != eb[i].multiplicity) {
          return ea[i].multiplicity < eb[i].multiplicity ? -1 : 1;
        }
      }
      if (ea.size() == eb.size()) return 0;
      return ea.size() < eb.size() ? -1 : 1;
    }
  }
  return 0;
}

bool operator==(const Value& a, const Value& b) {
  if (a.rep_.index() != b.rep_.index()) return false;
  if (a.rep_ == b.rep_) return true;  // same shared payload or equal scalars
  if (a.is_tuple() || a.is_bag()) {
    if (a.hash() != b.hash()) return false;
  }
  return compare(a, b) == 0;
}

bool operator<(const Value& a, const Value& b) { return compare(a, b) < 0; }

void BagBuilder::add(Value v, std::uint64_t multiplicity) {
  if (multiplicity == 0) return;
  entries_.push_back({std::move(v), multiplicity});
}

void BagBuilder::add_all(const Value& bag) {
  for (const auto& e : bag.entries()) add(e.value, e.multiplicity);
}

Value BagBuilder::build() && {
  std::sort(entries_.begin(), entries_.end(),
            [](const BagEntry& x, const BagEntry& y) { return compare(x.value, y.value) < 0; });
  auto rep = std::make_shared<detail::BagRep>();
  for (auto& e : entries_) {
    if (!rep->entries.empty() && rep->entries.back().value == e.value) {
      rep->entries.back().multiplicity += e.multiplicity;
    } else {
      rep->entries.push_back(std::move(e));
    }
  }
  std::size_t h = 0x626167;
  for (const auto& e : rep->entries) {
    rep->cardinality += e.multiplicity;
    h = mix(h, e.value.hash());
    h = mix(h, std::hash<std::uint64_t>{}(e.multiplicity));
  }
  rep->hash = h;
  entries_.clear();
  Value v;
  v.rep_ = std::shared_ptr<const detail::BagRep>(std::move(rep));
  return v;
}

TypePtr type_of(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return Type::bottom();
    case ValueKind::Bool: return Type::boolean();
    case ValueKind::Int: return Type::int_();
    case ValueKind::String: return Type::string();
    case ValueKind::Tuple: {
      std::vector<Field> fields;
      for (const auto& f : v.fields()) fields.push_back({f.name, type_of(f.value)});
      return Type::tuple(std::move(fields));
    }
    case ValueKind::Bag: {
      TypePtr element = Type::bottom();
      for (const auto& e : v.entries()) {
        auto t = type_of(e.value);
        if (!t->is_tuple() && !t->is_bottom()) {
          fail(ErrorCode::HeterogeneousBag, "bag element is not a tuple: " + to_string(e.value));
        }
        auto u = unify(element, t);
        if (!u) {
          fail(ErrorCode::HeterogeneousBag, "bag elements have incompatible types " +
                                                to_string(*element) + " and " + to_string(*t));
        }
        element = u;
      }
      return Type::bag(element);
    }
  }
  return Type::bottom();
}

bool conforms(const Value& v, const Type& t) {
  if (v.is_null() || t.is_bottom()) return true;
  switch (t.kind()) {
    case TypeKind::Int:
    case TypeKind::Date:
      return v.kind() == ValueKind::Int;
    case TypeKind::String:
      return v.kind() == ValueKind::String;
    case TypeKind::Bool:
      return v.kind() == ValueKind::Bool;
    case TypeKind::Tuple: {
      if (!v.is_tuple() || v.arity() != t.fields().size()) return false;
      for (const auto& f : t.fields()) {
        const Value* x = v.get(f.name);
        if (!x || !conforms(*x, *f.type)) return false;
      }
      return true;
    }
    case TypeKind::Bag: {
      if (!v.is_bag()) return false;
      for (const auto& e : v.entries()) {
        if (e.value.is_null() || !conforms(e.value, *t.element())) return false;
      }
      return true;
    }
    case TypeKind::Bottom:
      return true;
  }
  return false;
}

std::uint64_t result_distance(const Value& r1, const Value& r2) {
  if (!r1.is_bag() || !r2.is_bag()) {
    fail(ErrorCode::TypeMismatch, "result_distance expects two bags");
  }
  auto a = r1.entries();
  auto b = r2.entries();
  std::uint64_t d = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int c = i == a.size() ? 1 : j == b.size() ? -1 : compare(a[i].value, b[j].value);
    if (c < 0) {
      d += a[i++].multiplicity;
    } else if (c > 0) {
      d += b[j++].multiplicity;
    } else {
      auto x = a[i++].multiplicity, y = b[j++].multiplicity;
      d += x > y ? x - y : y - x;
    }
  }
  return d;
}

Value project_tuple(const Value& tuple, std::span<const std::string> names) {
  std::vector<NamedValue> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    const Value* v = tuple.get(n);
    if (!v) fail(ErrorCode::UnknownAttribute, "tuple has no attribute '" + n + "'");
    out.push_back({n, *v});
  }
  return Value::tuple(std::move(out));
}

Value concat_tuples(const Value& left, const Value& right) {
  std::vector<NamedValue> out(left.fields().begin(), left.fields().end());
  for (const auto& f : right.fields()) out.push_back(f);
  return Value::tuple(std::move(out));
}

Value null_tuple(const Type& tuple_type) {
  std::vector<NamedValue> out;
  for (const auto& f : tuple_type.fields()) out.push_back({f.name, Value::null()});
  return Value::tuple(std::move(out));
}

std::string to_string(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return "null";
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::String: return "\"" + v.as_string() + "\"";
    case ValueKind::Tuple: {
      std::string out = "<";
      bool first = true;
      for (const auto& f : v.fields()) {
        if (!first) out += ", ";
        first = false;
        out += f.name + ": " + to_string(f.value);
      }
      return out + ">";
    }
    case ValueKind::Bag: {
      std::string out = "{";
      bool first = true;
      for (const auto& e : v.entries()) {
        if (!first) out += ", ";
        first = false;
        out += to_string(e.value);
        if (e.multiplicity != 1) out += "^" + std::to_string(e.multiplicity);
      }
      return out + "}";
    }
  }
  return "?";
}

}  // namespace whynot
