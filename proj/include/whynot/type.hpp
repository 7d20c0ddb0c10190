#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace whynot {

enum class TypeKind { Bottom, Int, String, Bool, Date, Tuple, Bag };

class Type;
using TypePtr = std::shared_ptr<const Type>;

struct Field {
  std::string name;
  TypePtr type;
};

/// Nested type: primitive, tuple of named attributes, or bag of tuples.
/// Bottom is the type of null; it unifies with any other type.
class Type {
 public:
  static TypePtr bottom();
  static TypePtr int_();
  static TypePtr string();
  static TypePtr boolean();
  static TypePtr date();
  static TypePtr primitive(TypeKind kind);
  /// Throws InvalidType on duplicate attribute names.
  static TypePtr tuple(std::vector<Field> fields);
  /// Element must be a tuple type (or bottom, for an empty bag of unknown type).
  static TypePtr bag(TypePtr element);

  TypeKind kind() const noexcept { return kind_; }
  bool is_primitive() const noexcept {
    return kind_ != TypeKind::Tuple && kind_ != TypeKind::Bag && kind_ != TypeKind::Bottom;
  }
  bool is_tuple() const noexcept { return kind_ == TypeKind::Tuple; }
  bool is_bag() const noexcept { return kind_ == TypeKind::Bag; }
  bool is_bottom() const noexcept { return kind_ == TypeKind::Bottom; }

  const std::vector<Field>& fields() const noexcept { return fields_; }
  const TypePtr& element() const noexcept { return element_; }

  const Field* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  explicit Type(TypeKind kind) : kind_(kind) {}

  TypeKind kind_;
  std::vector<Field> fields_;
  TypePtr element_;
};

/// Structural equality; attribute order is ignored, bottom equals only bottom.
bool type_equal(const Type& a, const Type& b);
inline bool type_equal(const TypePtr& a, const TypePtr& b) { return type_equal(*a, *b); }

/// Like type_equal but bottom is compatible with anything.
bool type_compatible(const Type& a, const Type& b);

/// Least common type of two compatible types; nullptr if incompatible.
TypePtr unify(const TypePtr& a, const TypePtr& b);

/// Int and date are both integer-valued and may be compared with each other.
bool comparable(const Type& a, const Type& b);

std::string to_string(const Type& type);
std::string_view kind_name(TypeKind kind);

/// Concatenation of two tuple types; throws DuplicateAttribute on clashes.
TypePtr concat_tuple_types(const TypePtr& left, const TypePtr& right);

}  // namespace whynot
