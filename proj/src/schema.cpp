#include "hydroie/schema.hpp"

#include <set>

namespace hydroie {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Basic: return "Basic";
    case Category::Flow: return "Flow";
    case Category::Elevation: return "Elevation";
    case Category::Capacity: return "Capacity";
    case Category::Storage: return "Storage";
    case Category::Environment: return "Environment";
  }
  return "?";
}

std::string_view category_title(Category c) {
  switch (c) {
    case Category::Basic: return "Basic Information";
    case Category::Flow: return "Flow Information";
    case Category::Elevation: return "Elevation Information";
    case Category::Capacity: return "Capacity Information";
    case Category::Storage: return "Storage Information";
    case Category::Environment: return "Environmental Information";
  }
  return "?";
}

Category parse_category(std::string_view s) {
  for (auto c : kAllCategories) {
    if (iequals(s, to_string(c))) return c;
  }
  throw ConfigError("unknown category: " + std::string(s));
}

std::string_view to_string(ValueKind k) {
  return k == ValueKind::FreeText ? "free_text" : "numeric_quantity";
}

ValueKind parse_value_kind(std::string_view s) {
  if (s == "free_text") return ValueKind::FreeText;
  if (s == "numeric_quantity") return ValueKind::NumericQuantity;
  throw ConfigError("unknown value_kind: " + std::string(s));
}

Schema::Schema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw ConfigError("schema has no fields");
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw ConfigError("schema field with empty name");
    if (!seen.insert(f.name).second) throw ConfigError("duplicate field name: " + f.name);
  }
}

const FieldSpec* Schema::find(std::string_view name) const {
  for (const auto& f : fields_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FieldSpec& Schema::at(std::string_view name) const {
  if (const auto* f = find(name)) return *f;
  throw ConfigError("unknown field: " + std::string(name));
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (const auto& f : fields_) out.push_back(f.name);
  return out;
}

const Schema& builtin_schema() {
  static const Schema schema = [] {
    using C = Category;
    using K = ValueKind;
    auto text = [](std::string name, C c, std::string desc) {
      return FieldSpec{std::move(name), c, std::move(desc), K::FreeText, std::nullopt};
    };
    auto num = [](std::string name, C c, std::string desc, std::string unit) {
      return FieldSpec{std::move(name), c, std::move(desc), K::NumericQuantity, std::move(unit)};
    };
    return Schema({
        text("Dam_Name", C::Basic, "The official name of the dam, structure, or project."),
        text("Location", C::Basic, "The general location of the project, including city, state, and river."),
        text("County", C::Basic, "The name(s) of the county or counties in which the project is located."),
        text("Primary_Purpose", C::Basic,
             "The principal function of the project, such as hydropower generation, flood control, irrigation, or "
             "recreation."),
        num("Minimum_Flow", C::Flow,
            "The mandated minimum flow rate (typically in cubic feet per second, cfs) that must be maintained.",
            "cfs"),
        num("Annual_Flow_Peak", C::Flow, "The maximum flow recorded over the course of a year (cfs).", "cfs"),
        num("Annual_Flow_Mean", C::Flow, "The mean annual flow rate (cfs).", "cfs"),
        num("Spillway_Maximum_Discharge_Flow", C::Flow, "The maximum discharge capacity of the spillway (cfs).",
            "cfs"),
        num("Maximum_Pool_Elevation", C::Elevation,
            "The highest allowable elevation of the pool or reservoir (in feet).", "ft"),
        num("Normal_Maximum_Operating_Pool_Level", C::Elevation,
            "The normal upper operating level under standard conditions (feet).", "ft"),
        num("Maximum_Operating_Pool_Level", C::Elevation,
            "The highest elevation at which the project may operate (feet).", "ft"),
        num("Minimum_Pool_Elevation", C::Elevation, "The lowest allowable pool elevation (feet).", "ft"),
        num("Power_Head", C::Elevation, "The effective vertical drop (head) driving the turbines (feet).", "ft"),
        num("Power_Capacity", C::Capacity,
            "The total installed generating capacity of the facility (in megawatts, MW).", "MW"),
        num("Energy_Output", C::Capacity,
            "The annual energy output or generation (in megawatt-hours, MWh).", "MWh"),
        num("Usable_Storage_Volume", C::Storage,
            "The volume of reservoir storage that is actively used for power generation or other operational "
            "purposes (acre-feet).",
            "acre-feet"),
        text("Stream_Temperature", C::Environment,
             "Information related to stream temperature targets, thresholds, or control strategies."),
    });
  }();
  return schema;
}

std::vector<FieldSpec> fields_in_category(const Schema& schema, Category category) {
  std::vector<FieldSpec> out;
  for (const auto& f : schema.fields()) {
    if (f.category == category) out.push_back(f);
  }
  return out;
}

std::vector<FieldSpec> fields_in_category(const Schema& schema, std::string_view category) {
  return fields_in_category(schema, parse_category(category));
}

json schema_to_json(const Schema& schema) {
  json arr = json::array();
  for (const auto& f : schema.fields()) {
    arr.push_back({{"name", f.name},
                   {"category", to_string(f.category)},
                   {"description", f.description},
                   {"value_kind", to_string(f.value_kind)},
                   {"unit", f.canonical_unit ? json(*f.canonical_unit) : json(nullptr)}});
  }
  return arr;
}

Schema schema_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("schema manifest must be a JSON array");
  std::vector<FieldSpec> fields;
  try {
    for (const auto& o : j) {
      FieldSpec f;
      f.name = o.at("name").get<std::string>();
      f.category = parse_category(o.at("category").get<std::string>());
      f.description = o.value("description", "");
      f.value_kind = parse_value_kind(o.value("value_kind", "free_text"));
      if (o.contains("unit") && !o.at("unit").is_null()) f.canonical_unit = o.at("unit").get<std::string>();
      fields.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed schema manifest: ") + e.what());
  }
  return Schema(std::move(fields));
}

}  // namespace hydroie
