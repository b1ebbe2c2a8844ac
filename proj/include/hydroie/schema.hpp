#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hydroie/util.hpp"

namespace hydroie {

enum class Category { Basic, Flow, Elevation, Capacity, Storage, Environment };

inline constexpr std::array<Category, 6> kAllCategories = {Category::Basic,    Category::Flow,
                                                          Category::Elevation, Category::Capacity,
                                                          Category::Storage,  Category::Environment};

enum class ValueKind { FreeText, NumericQuantity };

std::string_view to_string(Category c);
std::string_view category_title(Category c);  // "Basic Information", ...
Category parse_category(std::string_view s);  // throws ConfigError
std::string_view to_string(ValueKind k);
ValueKind parse_value_kind(std::string_view s);

struct FieldSpec {
  std::string name;
  Category category = Category::Basic;
  std::string description;
  ValueKind value_kind = ValueKind::FreeText;
  std::optional<std::string> canonical_unit;

  bool operator==(const FieldSpec&) const = default;
};

class Schema {
 public:
  Schema() = default;
  // Throws ConfigError on duplicate names or an empty field list.
  explicit Schema(std::vector<FieldSpec> fields);

  const std::vector<FieldSpec>& fields() const { return fields_; }
  std::size_t size() const { return fields_.size(); }
  const FieldSpec* find(std::string_view name) const;
  const FieldSpec& at(std::string_view name) const;  // throws ConfigError
  std::vector<std::string> names() const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<FieldSpec> fields_;
};

// The 17 hydropower licensing fields in six categories.
const Schema& builtin_schema();

// Members of `category` in schema order.
std::vector<FieldSpec> fields_in_category(const Schema& schema, Category category);
std::vector<FieldSpec> fields_in_category(const Schema& schema, std::string_view category);

// Manifest: JSON array of {name, category, description, value_kind, unit}.
json schema_to_json(const Schema& schema);
Schema schema_from_json(const json& j);

}  // namespace hydroie
