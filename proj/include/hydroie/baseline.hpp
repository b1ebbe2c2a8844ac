#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hydroie/corpus.hpp"
#include "hydroie/output_parser.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

// How a rule turns a matching sentence into a value.
enum class CaptureKind {
  NumberUnit,  // first number immediately followed by one of `units`
  NameBefore,  // capitalized words right before an anchor word ("Juneau County")
  PhraseAfter, // words following a cue phrase, up to the end of the sentence
  Literal,     // first of `phrases` found in the sentence, as written
  Sentence,    // the sentence itself
};

std::string_view to_string(CaptureKind k);

struct PatternRule {
  // Each group is any-of; every group must occur in the sentence. Phrases are
  // lowercase and matched on word boundaries.
  std::vector<std::vector<std::string>> all_of;
  std::vector<std::string> none_of;
  CaptureKind capture = CaptureKind::NumberUnit;
  std::vector<std::string> units;    // NumberUnit
  std::vector<std::string> anchors;  // NameBefore, case-sensitive
  bool include_anchor = false;       // NameBefore
  std::vector<std::string> cues;     // PhraseAfter
  std::vector<std::string> phrases;  // Literal
  std::size_t max_words = 12;        // PhraseAfter / Sentence

  bool operator==(const PatternRule&) const = default;
};

struct FieldPattern {
  std::string field_name;
  std::vector<PatternRule> rules;  // first match wins
  std::optional<std::string> unit_hint;

  bool operator==(const FieldPattern&) const = default;
};

// Rules keyed to the unit vocabulary of each field. Fields the built-in table
// does not know get a generic rule derived from the field name and unit.
std::vector<FieldPattern> default_patterns(const Schema& schema);

// Manifest: {"patterns": [{"field", "unit_hint", "rules": [...]}]}. Listed
// fields replace the base rules. Unknown fields throw ConfigError.
std::vector<FieldPattern> load_patterns(const json& manifest, const Schema& schema,
                                        std::vector<FieldPattern> base);
json patterns_to_json(const std::vector<FieldPattern>& patterns);

// Sentence boundaries: ., ! or ? followed by whitespace and an uppercase
// letter, digit or quote, except after common abbreviations.
std::vector<std::string> split_sentences(std::string_view text);

// Applies one rule to one sentence.
std::optional<std::string> apply_rule(const PatternRule& rule, std::string_view sentence);

// Deterministic rule pass over a chunk. Records are tagged with method
// single_step.
ExtractionRecord extract_baseline(const DocumentChunk& chunk, const Schema& schema,
                                  const std::vector<FieldPattern>& patterns,
                                  const std::string& model_name = "traditional");

}  // namespace hydroie
