#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "whynot/type.hpp"

namespace whynot {

class Value;

struct NamedValue;
struct BagEntry;

namespace detail {
struct TupleRep;
struct BagRep;
}  // namespace detail

enum class ValueKind { Null, Bool, Int, String, Tuple, Bag };

/// Immutable nested instance. Tuples and bags share their payload, so copies
/// are cheap. Bags are kept canonical: entries sorted by value, duplicates
/// merged into a multiplicity.
class Value {
 public:
  Value() = default;  // null
  static Value null() { return Value(); }
  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value string(std::string s);
  static Value tuple(std::vector<NamedValue> fields);
  static Value bag(std::vector<BagEntry> entries);
  static Value empty_bag();

  ValueKind kind() const noexcept;
  bool is_null() const noexcept { return kind() == ValueKind::Null; }
  bool is_tuple() const noexcept { return kind() == ValueKind::Tuple; }
  bool is_bag() const noexcept { return kind() == ValueKind::Bag; }
  bool is_primitive() const noexcept {
    auto k = kind();
    return k == ValueKind::Bool || k == ValueKind::Int || k == ValueKind::String;
  }

  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_string() const;

  // Tuple access.
  std::span<const NamedValue> fields() const;
  const Value* get(std::string_view name) const;
  std::size_t arity() const;

  // Bag access.
  std::span<const BagEntry> entries() const;
  /// Total number of tuples counting multiplicities.
  std::uint64_t cardinality() const;
  std::uint64_t multiplicity(const Value& element) const;
  bool empty() const { return cardinality() == 0; }

  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }
  friend bool operator<(const Value& a, const Value& b);

  std::size_t hash() const;

  friend int compare(const Value& a, const Value& b);

 private:
  friend class BagBuilder;
  using Rep = std::variant<std::monostate, bool, std::int64_t, std::shared_ptr<const std::string>,
                           std::shared_ptr<const detail::TupleRep>,
                           std::shared_ptr<const detail::BagRep>>;
  Rep rep_;
};

struct NamedValue {
  std::string name;
  Value value;
};

struct BagEntry {
  Value value;
  std::uint64_t multiplicity = 1;
};

/// Three-way total order: null < bool < int < string < tuple < bag. Tuples
/// compare by their (name, value) pairs sorted by name.
int compare(const Value& a, const Value& b);

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

/// Accumulates tuples into a canonical bag.
class BagBuilder {
 public:
  void add(Value v, std::uint64_t multiplicity = 1);
  void add_all(const Value& bag);
  bool empty() const { return entries_.empty(); }
  Value build() &&;

 private:
  std::vector<BagEntry> entries_;
};

/// Minimal type per the nested typing rules. Null yields bottom; empty bags
/// yield Bag(bottom). Throws HeterogeneousBag when bag elements disagree.
TypePtr type_of(const Value& v);

/// Whether v is a valid instance of t (null conforms to any type).
bool conforms(const Value& v, const Type& t);

/// Size of the symmetric bag difference of top-level tuples, counting
/// multiplicities. Throws TypeMismatch unless both values are bags.
std::uint64_t result_distance(const Value& r1, const Value& r2);

/// Tuple restricted to the named attributes, in the given order.
Value project_tuple(const Value& tuple, std::span<const std::string> names);

/// Concatenation of two tuples.
Value concat_tuples(const Value& left, const Value& right);

/// Tuple whose attributes are all null.
Value null_tuple(const Type& tuple_type);

std::string to_string(const Value& v);

}  // namespace whynot
