#include "whynot/type.hpp"

#include <algorithm>
#include <unordered_set>

#include "whynot/error.hpp"

namespace whynot {

TypePtr Type::bottom() {
  static const TypePtr t(new Type(TypeKind::Bottom));
  return t;
}
TypePtr Type::int_() {
  static const TypePtr t(new Type(TypeKind::Int));
  return t;
}
TypePtr Type::string() {
  static const TypePtr t(new Type(TypeKind::String));
  return t;
}
TypePtr Type::boolean() {
  static const TypePtr t(new Type(TypeKind::Bool));
  return t;
}
TypePtr Type::date() {
  static const TypePtr t(new Type(TypeKind::Date));
  return t;
}

TypePtr Type::primitive(TypeKind kind) {
  switch (kind) {
    case TypeKind::Int: return int_();
    case TypeKind::String: return string();
    case TypeKind::Bool: return boolean();
    case TypeKind::Date: return date();
    case TypeKind::Bottom: return bottom();
    default: fail(ErrorCode::InvalidType, "not a primitive kind: " + std::string(kind_name(kind)));
  }
}

TypePtr Type::tuple(std::vector<Field> fields) {
  std::unordered_set<std::string_view> seen;
  for (const auto& f : fields) {
    if (!f.type) fail(ErrorCode::InvalidType, "attribute '" + f.name + "' has no type");
    if (!seen.insert(f.name).second) {
      fail(ErrorCode::InvalidType, "duplicate attribute name '" + f.name + "' in tuple type");
    }
  }
  auto* t = new Type(TypeKind::Tuple);
  t->fields_ = std::move(fields);
  return TypePtr(t);
}

TypePtr Type::bag(TypePtr element) {
  if (!element || !(element->is_tuple() || element->is_bottom())) {
    fail(ErrorCode::InvalidType, "bag element type must be a tuple type");
  }
  auto* t = new Type(TypeKind::Bag);
  t->element_ = std::move(element);
  return TypePtr(t);
}

const Field* Type::find(std::string_view name) const {
  for (const auto& f : fields_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::optional<std::size_t> Type::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Type::names() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.name);
  return out;
}

bool type_equal(const Type& a, const Type& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TypeKind::Tuple: {
      if (a.fields().size() != b.fields().size()) return false;
      for (const auto& f : a.fields()) {
        const Field* g = b.find(f.name);
        if (!g || !type_equal(*f.type, *g->type)) return false;
      }
      return true;
    }
    case TypeKind::Bag:
      return type_equal(*a.element(), *b.element());
    default:
      return true;
  }
}

bool type_compatible(const Type& a, const Type& b) {
  if (a.is_bottom() || b.is_bottom()) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case TypeKind::Tuple: {
      if (a.fields().size() != b.fields().size()) return false;
      for (const auto& f : a.fields()) {
        const Field* g = b.find(f.name);
        if (!g || !type_compatible(*f.type, *g->type)) return false;
      }
      return true;
    }
    case TypeKind::Bag:
      return type_compatible(*a.element(), *b.element());
    default:
      return true;
  }
}

TypePtr unify(const TypePtr& a, const TypePtr& b) {
  if (a->is_bottom()) return b;
  if (b->is_bottom()) return a;
  if (a->kind() != b->kind()) return nullptr;
  switch (a->kind()) {
    case TypeKind::Tuple: {
      if (a->fields().size() != b->fields().size()) return nullptr;
      std::vector<Field> fields;
      for (const auto& f : a->fields()) {
        const Field* g = b->find(f.name);
        if (!g) return nullptr;
        auto u = unify(f.type, g->type);
        if (!u) return nullptr;
        fields.push_back({f.name, u});
      }
      return Type::tuple(std::move(fields));
    }
    case TypeKind::Bag: {
      auto u = unify(a->element(), b->element());
      return u ? Type::bag(u) : nullptr;
    }
    default:
      return a;
  }
}

bool comparable(const Type& a, const Type& b) {
  if (a.is_bottom() || b.is_bottom()) return true;
  auto integral = [](TypeKind k) { return k == TypeKind::Int || k == TypeKind::Date; };
  if (integral(a.kind()) && integral(b.kind())) return true;
  return a.is_primitive() && a.kind() == b.kind();
}

std::string_view kind_name(TypeKind kind) {
  switch (kind) {
    case TypeKind::Bottom: return "bottom";
    case TypeKind::Int: return "int";
    case TypeKind::String: return "string";
    case TypeKind::Bool: return "bool";
    case TypeKind::Date: return "date";
    case TypeKind::Tuple: return "tuple";
    case TypeKind::Bag: return "bag";
  }
  return "?";
}

std::string to_string(const Type& type) {
  switch (type.kind()) {
    case TypeKind::Tuple: {
      std::string out = "<";
      bool first = true;
      for (const auto& f : type.fields()) {
        if (!first) out += ", ";
        first = false;
        out += f.name;
        out += ": ";
        out += to_string(*f.type);
      }
      return out + ">";
    }
    case TypeKind::Bag:
      return "{" + to_string(*type.element()) + "}";
    default:
      return std::string(kind_name(type.kind()));
  }
}

TypePtr concat_tuple_types(const TypePtr& left, const TypePtr& right) {
  std::vector<Field> fields = left->fields();
  for (const auto& f : right->fields()) {
    if (left->find(f.name)) {
      fail(ErrorCode::DuplicateAttribute, "attribute '" + f.name + "' already exists");
    }
    fields.push_back(f);
  }
  return Type::tuple(std::move(fields));
}

}  // namespace whynot
