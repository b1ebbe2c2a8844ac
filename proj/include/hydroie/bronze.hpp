#pragma once

#include <map>
#include <string>
#include <vector>

#include "hydroie/corpus.hpp"
#include "hydroie/gateway.hpp"
#include "hydroie/output_parser.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

struct BronzeAnnotation {
  std::string chunk_id;
  FieldValues values;  // every schema field exactly once
  std::string judge_model;
  std::string prompt_version;
  // field -> "transport: ..." or "parse: ..."; such fields are null.
  std::map<std::string, std::string> errors;

  bool operator==(const BronzeAnnotation&) const = default;
};

struct BronzeStandard {
  std::string judge_model;
  std::string prompt_version = kPromptVersion;
  Conservatism conservatism = Conservatism::Strict;
  std::vector<BronzeAnnotation> annotations;  // corpus chunk order
  std::map<std::string, std::size_t> coverage_stats;  // field -> non-null count

  void recompute_coverage();
  const BronzeAnnotation* find(std::string_view chunk_id) const;
  std::size_t error_count() const;
};

struct BronzeOptions {
  std::size_t concurrency = 1;
  int max_tokens = kValidationMaxTokens;
  ParserOptions parser;
};

// One judge call per (chunk, field). Failures are recorded per cell and the
// cell is null; nothing is dropped silently.
BronzeStandard generate_bronze(const Corpus& corpus, const Schema& schema, Gateway& judge,
                               const std::string& judge_model, Conservatism conservatism,
                               const BronzeOptions& options = {});

struct FieldCoverage {
  std::string field;
  std::size_t positives = 0;
  double rate = 0.0;
  bool zero_positive = false;
};

struct CoverageReport {
  std::size_t chunk_count = 0;
  std::vector<FieldCoverage> fields;         // schema order
  std::map<Category, double> category_rate;  // mean of member-field rates

  std::string render() const;
};

CoverageReport bronze_coverage_report(const BronzeStandard& standard, const Schema& schema);

// bronze.json; a hand-built gold file of the same shape loads identically.
json bronze_to_json(const BronzeStandard& standard);
BronzeStandard bronze_from_json(const json& j, const Schema& schema);

}  // namespace hydroie
