#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "hydroie/corpus.hpp"
#include "hydroie/gateway.hpp"
#include "hydroie/output_parser.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

enum class MethodId {
  SingleStep,
  TwoStep,
  Categorical,
  ChainOfThought,
  ReflectiveLenient,
  ReflectiveModerate,
  ReflectiveStringent,
};

inline constexpr std::array<MethodId, 7> kAllMethods = {
    MethodId::SingleStep,        MethodId::TwoStep,           MethodId::Categorical,
    MethodId::ChainOfThought,    MethodId::ReflectiveLenient, MethodId::ReflectiveModerate,
    MethodId::ReflectiveStringent};

std::string_view to_string(MethodId m);
MethodId parse_method(std::string_view s);  // throws ConfigError
std::string_view method_title(MethodId m);  // table column header
bool is_reflective(MethodId m);
Strictness reflective_strictness(MethodId m);  // requires is_reflective(m)

struct FieldOutcome {
  enum class Status { Kept, Rejected, Absent };
  Status status = Status::Absent;
  std::optional<std::string> value;  // the candidate, kept or rejected
  bool unparseable_verdict = false;
  bool qualifier_flagged = false;

  bool operator==(const FieldOutcome&) const = default;
};

struct ValidationOutcome {
  std::string chunk_id;
  Strictness strictness = Strictness::Moderate;
  std::map<std::string, FieldOutcome> per_field;
  std::size_t rejected_count = 0;
  std::size_t candidate_count = 0;
  std::size_t unparseable_count = 0;  // subset of rejected_count
  std::size_t qualifier_flagged_count = 0;

  // Undefined when there were no candidates.
  std::optional<double> rejection_rate() const;
  bool operator==(const ValidationOutcome&) const = default;
};

json outcome_to_json(const ValidationOutcome& o);
ValidationOutcome outcome_from_json(const json& j);

struct PipelineOptions {
  int extraction_max_tokens = kExtractionMaxTokens;
  int validation_max_tokens = kValidationMaxTokens;
  // Parse failures abort the chunk instead of degrading to absent values.
  bool strict_parse = false;
  ParserOptions parser;
};

struct PipelineContext {
  Gateway& gateway;
  const Schema& schema;
  std::string model_name;     // provenance label in records
  std::string request_model;  // model id sent to the backend
  PipelineOptions options;
};

// A chunk could not be processed; wraps transport and script failures.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& chunk_id, const std::string& what)
      : std::runtime_error("chunk " + chunk_id + ": " + what), chunk_id_(chunk_id) {}
  const std::string& chunk_id() const { return chunk_id_; }

 private:
  std::string chunk_id_;
};

ExtractionRecord run_single_step(const DocumentChunk& chunk, PipelineContext& ctx);
ExtractionRecord run_two_step(const DocumentChunk& chunk, PipelineContext& ctx);
ExtractionRecord run_categorical(const DocumentChunk& chunk, PipelineContext& ctx);
ExtractionRecord run_chain_of_thought(const DocumentChunk& chunk, PipelineContext& ctx);

// One validation call per present field. Rejected fields become absent in
// the returned record; absent fields are left alone.
std::pair<ExtractionRecord, ValidationOutcome> run_reflective(const ExtractionRecord& record,
                                                              const DocumentChunk& chunk, PipelineContext& ctx,
                                                              Strictness strictness);

struct MethodResult {
  ExtractionRecord record;
  std::optional<ValidationOutcome> outcome;
};

// reflective_* runs single-step first; the gateway cache makes the three
// reflective methods share that extraction.
MethodResult run_method(MethodId method, const DocumentChunk& chunk, PipelineContext& ctx);

}  // namespace hydroie
