#include "whynot/json_io.hpp"

#include "whynot/error.hpp"

namespace whynot {

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& what) {
  fail(ErrorCode::SchemaViolation, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

std::string child_path(const std::string& path, const std::string& name) {
  return path.empty() ? name : path + "." + name;
}

Value read_typed(const Json& j, const Type& type, const std::string& path) {
  if (j.is_null()) return Value::null();
  switch (type.kind()) {
    case TypeKind::Bottom:
      return value_from_json(j);
    case TypeKind::Int:
    case TypeKind::Date:
      if (!j.is_number_integer()) violation(path, "expected integer, got " + j.dump());
      return Value::integer(j.get<std::int64_t>());
    case TypeKind::String:
      if (!j.is_string()) violation(path, "expected string, got " + j.dump());
      return Value::string(j.get<std::string>());
    case TypeKind::Bool:
      if (!j.is_boolean()) violation(path, "expected bool, got " + j.dump());
      return Value::boolean(j.get<bool>());
    case TypeKind::Tuple: {
      if (!j.is_object()) violation(path, "expected object, got " + j.dump());
      for (const auto& [key, _] : j.items()) {
        if (!type.find(key)) violation(child_path(path, key), "unknown attribute");
      }
      std::vector<NamedValue> fields;
      for (const auto& f : type.fields()) {
        auto it = j.find(f.name);
        if (it == j.end()) violation(child_path(path, f.name), "missing attribute");
        fields.push_back({f.name, read_typed(*it, *f.type, child_path(path, f.name))});
      }
      return Value::tuple(std::move(fields));
    }
    case TypeKind::Bag: {
      if (!j.is_array()) violation(path, "expected array, got " + j.dump());
      BagBuilder b;
      for (std::size_t i = 0; i < j.size(); ++i) {
        b.add(read_typed(j[i], *type.element(), path + "[" + std::to_string(i) + "]"));
      }
      return std::move(b).build();
    }
  }
  violation(path, "unsupported type");
}

}  // namespace

TypePtr type_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "int") return Type::int_();
    if (s == "string") return Type::string();
    if (s == "bool") return Type::boolean();
    if (s == "date") return Type::date();
    fail(ErrorCode::SchemaViolation, "unknown primitive type '" + s + "'");
  }
  if (j.is_object()) {
    std::vector<Field> fields;
    for (const auto& [key, value] : j.items()) fields.push_back({key, type_from_json(value)});
    return Type::tuple(std::move(fields));
  }
  if (j.is_array() && j.size() == 1) {
    auto element = type_from_json(j[0]);
    if (!element->is_tuple()) fail(ErrorCode::SchemaViolation, "bag element type must be an object");
    return Type::bag(element);
  }
  fail(ErrorCode::SchemaViolation, "malformed type: " + j.dump());
}

Json type_to_json(const Type& type) {
  switch (type.kind()) {
    case TypeKind::Tuple: {
      Json out = Json::object();
      for (const auto& f : type.fields()) out[f.name] = type_to_json(*f.type);
      return out;
    }
    case TypeKind::Bag:
      return Json::array({type_to_json(*type.element())});
    default:
      return std::string(kind_name(type.kind()));
  }
}

Value value_from_json(const Json& j, const Type& type) { return read_typed(j, type, ""); }

Value value_from_json(const Json& j) {
  if (j.is_null()) return Value::null();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_string()) return Value::string(j.get<std::string>());
  if (j.is_object()) {
    std::vector<NamedValue> fields;
    for (const auto& [key, value] : j.items()) fields.push_back({key, value_from_json(value)});
    return Value::tuple(std::move(fields));
  }
  if (j.is_array()) {
    BagBuilder b;
    for (const auto& e : j) b.add(value_from_json(e));
    return std::move(b).build();
  }
  fail(ErrorCode::SchemaViolation, "unsupported JSON value: " + j.dump());
}

Json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Null: return nullptr;
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::Int: return v.as_int();
    case ValueKind::String: return v.as_string();
    case ValueKind::Tuple: {
      Json out = Json::object();
      for (const auto& f : v.fields()) out[f.name] = value_to_json(f.value);
      return out;
    }
    case ValueKind::Bag: {
      Json out = Json::array();
      for (const auto& e : v.entries()) {
        auto element = value_to_json(e.value);
        for (std::uint64_t i = 0; i < e.multiplicity; ++i) out.push_back(element);
      }
      return out;
    }
  }
  return nullptr;
}

Nip nip_from_json(const Json& j, const Type* type) {
  if (j.is_object()) {
    if (j.contains("$any")) return Nip::any();
    if (j.contains("$star")) return Nip::star();
    if (type && !type->is_tuple() && !type->is_bottom()) {
      fail(ErrorCode::SchemaViolation, "tuple pattern where " + to_string(*type) + " is expected");
    }
    std::vector<NamedNip> fields;
    for (const auto& [key, value] : j.items()) {
      const Type* ft = nullptr;
      if (type && type->is_tuple()) {
        const Field* f = type->find(key);
        if (!f) fail(ErrorCode::SchemaViolation, "pattern attribute '" + key + "' not in " + to_string(*type));
        ft = f->type.get();
      }
      fields.push_back({key, nip_from_json(value, ft)});
    }
    return Nip::tuple(std::move(fields));
  }
  if (j.is_array()) {
    if (type && !type->is_bag() && !type->is_bottom()) {
      fail(ErrorCode::SchemaViolation, "bag pattern where " + to_string(*type) + " is expected");
    }
    const Type* et = type && type->is_bag() ? type->element().get() : nullptr;
    std::vector<Nip> elements;
    for (const auto& e : j) elements.push_back(nip_from_json(e, et));
    return Nip::bag(std::move(elements));
  }
  return Nip::concrete(type ? value_from_json(j, *type) : value_from_json(j));
}

Json nip_to_json(const Nip& p) {
  switch (p.kind()) {
    case Nip::Kind::Any: return Json{{"$any", true}};
    case Nip::Kind::Star: return Json{{"$star", true}};
    case Nip::Kind::Concrete: return value_to_json(p.value());
    case Nip::Kind::Tuple: {
      Json out = Json::object();
      for (const auto& f : p.fields()) out[f.name] = nip_to_json(f.pattern);
      return out;
    }
    case Nip::Kind::Bag: {
      Json out = Json::array();
      for (const auto& e : p.elements()) out.push_back(nip_to_json(e));
      return out;
    }
  }
  return nullptr;
}

}  // namespace whynot
