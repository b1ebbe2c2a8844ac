#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hydroie/prompts.hpp"
#include "hydroie/schema.hpp"
#include "hydroie/util.hpp"

namespace hydroie {

// Model output could not be turned into the expected structure. The excerpt
// is capped at 500 bytes.
class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(const std::string& what, std::string_view text)
      : std::runtime_error(what), excerpt_(hydroie::excerpt(text)) {}
  const std::string& text_excerpt() const { return excerpt_; }

 private:
  std::string excerpt_;
};

struct ParserOptions {
  // Compared case-insensitively after trimming.
  std::set<std::string> null_tokens{"null", "none", "n/a", "na", "not specified", "not mentioned", "unknown", ""};
  // Whole-word, case-insensitive. Only consulted under stringent validation.
  std::set<std::string> qualifier_lexicon{"possibly", "likely", "approximately", "appears", "seems",
                                          "may",      "might",  "probably",      "unclear", "inferred"};
};

const ParserOptions& default_parser_options();

enum class ScanMode { FirstObject, LastObject };

// Strips code fences, then returns the first (or last) balanced top-level
// JSON object that parses. Throws ParseFailure when none exists.
json recover_json(std::string_view text, ScanMode mode = ScanMode::FirstObject);

using FieldValues = std::map<std::string, std::optional<std::string>>;

struct ExtractionRecord {
  std::string chunk_id;
  std::string model_name;
  std::string method;
  FieldValues values;  // every schema field exactly once
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  std::size_t present_count() const;
  bool operator==(const ExtractionRecord&) const = default;
};

struct Provenance {
  std::string chunk_id;
  std::string model_name;
  std::string method;
};

ExtractionRecord empty_record(const Schema& schema, const Provenance& provenance);

// Normalizes one JSON value: null tokens and empty strings become absent,
// numbers become their decimal text. Appends to `warnings` on coercions.
std::optional<std::string> normalize_json_value(const json& value, std::string_view field,
                                                std::vector<std::string>& warnings,
                                                const ParserOptions& options = default_parser_options());

// Case-insensitive with spaces and hyphens folded to underscores.
std::string fold_key(std::string_view key);

// Fills `requested` fields from `object`; unmatched keys and missing fields
// produce warnings. Fields outside `requested` are left untouched.
void merge_fields(const json& object, const Schema& schema, const std::vector<std::string>& requested,
                  ExtractionRecord& record, const ParserOptions& options = default_parser_options());

// Throws ParseFailure unless `object` is a JSON object.
ExtractionRecord parse_extraction(const json& object, const Schema& schema, const Provenance& provenance,
                                  const ParserOptions& options = default_parser_options());

enum class Presence { Yes, No, Maybe };
std::string_view to_string(Presence p);

struct PresenceMap {
  std::map<std::string, Presence> verdicts;
  std::vector<std::string> warnings;
};

// Accepts a JSON map or "Field: TOKEN" lines. Unknown tokens and missing
// fields become MAYBE with a warning.
PresenceMap parse_presence(std::string_view text, const Schema& schema);

enum class Decision { Accept, Reject };

struct Verdict {
  Decision decision = Decision::Reject;
  std::optional<std::string> rationale;
  bool qualifier_flagged = false;
};

Verdict parse_verdict(std::string_view text, Strictness strictness,
                      const ParserOptions& options = default_parser_options());

json record_to_json(const ExtractionRecord& record);
ExtractionRecord record_from_json(const json& j);

}  // namespace hydroie
