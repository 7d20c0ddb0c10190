#pragma once

#include <memory>
#include <string>
#include <vector>

#include "whynot/value.hpp"

namespace whynot {

class Nip;

struct NamedNip;

/// Nested instance with placeholders: a pattern over nested values where
/// `?` stands for any single instance and `*` (bag elements only) for zero
/// or more tuples.
class Nip {
 public:
  enum class Kind { Any, Star, Concrete, Tuple, Bag };

  Nip() = default;  // `?`
  static Nip any() { return Nip(); }
  static Nip star();
  static Nip concrete(Value v);
  /// Attributes not listed are unconstrained. Star fields are rejected.
  static Nip tuple(std::vector<NamedNip> fields);
  /// Elements must be tuple patterns, concrete tuples, `?`, or `*` (at most one).
  static Nip bag(std::vector<Nip> elements);

  Kind kind() const noexcept { return kind_; }
  bool is_any() const noexcept { return kind_ == Kind::Any; }
  bool is_star() const noexcept { return kind_ == Kind::Star; }
  bool is_concrete() const noexcept { return kind_ == Kind::Concrete; }
  bool is_tuple() const noexcept { return kind_ == Kind::Tuple; }
  bool is_bag() const noexcept { return kind_ == Kind::Bag; }

  const Value& value() const;
  const std::vector<NamedNip>& fields() const;
  const std::vector<Nip>& elements() const;
  const Nip* field(std::string_view name) const;

  /// True when the pattern contains no placeholder at any depth.
  bool is_ground() const;
  /// Value equivalent of a ground pattern.
  Value to_value() const;

  friend bool operator==(const Nip& a, const Nip& b);
  friend bool operator!=(const Nip& a, const Nip& b) { return !(a == b); }

 private:
  Kind kind_ = Kind::Any;
  Value value_;
  std::shared_ptr<const std::vector<NamedNip>> fields_;
  std::shared_ptr<const std::vector<Nip>> elements_;
};

struct NamedNip {
  std::string name;
  Nip pattern;
};

/// Throws InvalidNip when `p` is `*` (only valid as a bag element).
void validate_top_level(const Nip& p);

/// Instance matching. Bag patterns require an assignment of every tuple
/// occurrence to a pattern element such that each non-star element receives
/// exactly its multiplicity; `*` absorbs any remainder. Throws TypeMismatch
/// when the shapes cannot be compared (e.g. tuple pattern against an int).
bool matches_nip(const Value& v, const Nip& p);

/// Whether the pattern can describe instances of `type` (placeholders fit
/// anywhere, constants must conform, pattern attributes must exist).
bool nip_conforms(const Nip& p, const Type& type);

/// Pattern from a value with no placeholders.
inline Nip ground(const Value& v) { return Nip::concrete(v); }

/// Tuple pattern with every listed attribute set to `?`.
Nip all_any_tuple(const Type& tuple_type);

std::string to_string(const Nip& p);

}  // namespace whynot
