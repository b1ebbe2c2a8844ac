#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hydroie/corpus.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

// Bumped whenever any template text changes; recorded in bronze files.
inline constexpr const char* kPromptVersion = "v1";

enum class PromptTag {
  SingleStep,
  TwoStepPresence,
  TwoStepExtract,
  Categorical,
  ChainOfThought,
  ValidateLenient,
  ValidateModerate,
  ValidateStringent,
  BronzeJudge,
};

enum class ExpectedOutput { JsonAllFields, PresenceMap, JsonSubset, JsonCategory, Verdict, SingleField };

enum class Strictness { Lenient, Moderate, Stringent };

// Bronze judge conservatism. Balanced relaxes formatting, never evidence.
enum class Conservatism { Strict, Balanced };

std::string_view to_string(PromptTag t);
PromptTag parse_prompt_tag(std::string_view s);
std::string_view to_string(ExpectedOutput e);
std::string_view to_string(Strictness s);
Strictness parse_strictness(std::string_view s);
std::string_view to_string(Conservatism c);
Conservatism parse_conservatism(std::string_view s);
PromptTag validation_tag(Strictness s);

enum class Role { System, User };
std::string_view to_string(Role r);

struct Message {
  Role role = Role::User;
  std::string text;

  bool operator==(const Message&) const = default;
};

struct PromptBundle {
  std::vector<Message> messages;
  PromptTag method_tag = PromptTag::SingleStep;
  ExpectedOutput expected_output = ExpectedOutput::JsonAllFields;
  std::vector<std::string> fields;  // requested fields, schema order

  // "### system" / "### user" sections, for audit dumps and golden files.
  std::string render() const;
};

PromptBundle single_step_prompt(const DocumentChunk& chunk, const Schema& schema);
PromptBundle two_step_presence_prompt(const DocumentChunk& chunk, const Schema& schema);
// `selected` may be in any order; output follows schema order. Throws
// std::invalid_argument on an empty selection or unknown names.
PromptBundle two_step_extract_prompt(const DocumentChunk& chunk, const Schema& schema,
                                     const std::vector<std::string>& selected);
// One bundle per category, Basic through Environment.
std::vector<PromptBundle> categorical_prompts(const DocumentChunk& chunk, const Schema& schema);
PromptBundle chain_of_thought_prompt(const DocumentChunk& chunk, const Schema& schema);
PromptBundle validation_prompt(const DocumentChunk& chunk, const FieldSpec& field, std::string_view extracted_value,
                               Strictness strictness);
PromptBundle bronze_judge_prompt(const DocumentChunk& chunk, const FieldSpec& field,
                                 Conservatism conservatism = Conservatism::Strict);

// The delimited document block embedded in every prompt. The end marker is
// lengthened until it cannot occur inside the chunk text.
std::string document_block(std::string_view chunk_text);

}  // namespace hydroie
