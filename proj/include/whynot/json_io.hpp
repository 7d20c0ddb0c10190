#pragma once

#include <json.hpp>

#include "whynot/nip.hpp"
#include "whynot/type.hpp"
#include "whynot/value.hpp"

namespace whynot {

using Json = nlohmann::ordered_json;

/// Types: "int" | "string" | "bool" | "date"; objects are tuple types
/// (attribute order preserved); a one-element array `[T]` is a bag of T.
TypePtr type_from_json(const Json& j);
Json type_to_json(const Type& type);

/// Reads a value checked against `type`. Throws SchemaViolation naming the
/// offending path.
Value value_from_json(const Json& j, const Type& type);
/// Reads a value without a schema (ints, strings, bools, null, objects as
/// tuples, arrays as bags).
Value value_from_json(const Json& j);
/// Bags become arrays with duplicates repeated, in canonical order.
Json value_to_json(const Value& v);

/// Patterns: `{"$any": true}` is `?`, `{"$star": true}` is `*`, objects are
/// tuple patterns, arrays bag patterns, everything else a concrete value.
/// When `type` is given, constants are checked against it.
Nip nip_from_json(const Json& j, const Type* type = nullptr);
Json nip_to_json(const Nip& p);

}  // namespace whynot
