#include "hydroie/pipeline.hpp"

#include "hydroie/backends.hpp"

namespace hydroie {

namespace {

// Runs one bundle through the gateway, converting transport failures into
// PipelineError and noting truncation on the record.
std::string generate(PipelineContext& ctx, const DocumentChunk& chunk, const PromptBundle& bundle, int max_tokens,
                     ExtractionRecord& record) {
  auto request = GenerationRequest::from_bundle(bundle, ctx.request_model, max_tokens);
  try {
    auto response = ctx.gateway.complete(request);
    if (response.finish_reason == FinishReason::Length) {
      record.warnings.push_back(std::string(to_string(bundle.method_tag)) +
                                ": response truncated (finish_reason=length); parsed anyway");
    } else if (response.finish_reason == FinishReason::Error) {
      record.warnings.push_back(std::string(to_string(bundle.method_tag)) + ": backend reported finish_reason=error");
    }
    return std::move(response.text);
  } catch (const TransportError& e) {
    throw PipelineError(chunk.chunk_id, e.what());
  } catch (const ScriptError& e) {
    throw PipelineError(chunk.chunk_id, e.what());
  }
}

void parse_failed(PipelineContext& ctx, const DocumentChunk& chunk, ExtractionRecord& record, std::string_view stage,
                  const ParseFailure& e) {
  if (ctx.options.strict_parse) {
    throw PipelineError(chunk.chunk_id, std::string(stage) + " parse failure: " + e.what());
  }
  record.warnings.push_back(std::string(stage) + " parse failure: " + e.what() + " [" + e.text_excerpt() + "]");
}

Provenance provenance(const DocumentChunk& chunk, const PipelineContext& ctx, MethodId method) {
  return {chunk.chunk_id, ctx.model_name, std::string(to_string(method))};
}

ExtractionRecord run_whole_schema(const DocumentChunk& chunk, PipelineContext& ctx, MethodId method,
                                  const PromptBundle& bundle, ScanMode mode) {
  auto record = empty_record(ctx.schema, provenance(chunk, ctx, method));
  const auto text = generate(ctx, chunk, bundle, ctx.options.extraction_max_tokens, record);
  try {
    const auto obj = recover_json(text, mode);
    merge_fields(obj, ctx.schema, ctx.schema.names(), record, ctx.options.parser);
  } catch (const ParseFailure& e) {
    parse_failed(ctx, chunk, record, to_string(bundle.method_tag), e);
  }
  return record;
}

}  // namespace

std::string_view to_string(MethodId m) {
  switch (m) {
    case MethodId::SingleStep: return "single_step";
    case MethodId::TwoStep: return "two_step";
    case MethodId::Categorical: return "categorical";
    case MethodId::ChainOfThought: return "chain_of_thought";
    case MethodId::ReflectiveLenient: return "reflective_lenient";
    case MethodId::ReflectiveModerate: return "reflective_moderate";
    case MethodId::ReflectiveStringent: return "reflective_stringent";
  }
  return "?";
}

MethodId parse_method(std::string_view s) {
  for (auto m : kAllMethods) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method: " + std::string(s));
}

std::string_view method_title(MethodId m) {
  switch (m) {
    case MethodId::SingleStep: return "Single-step";
    case MethodId::TwoStep: return "Two-step";
    case MethodId::Categorical: return "Categorical";
    case MethodId::ChainOfThought: return "Chain-of-Thought";
    case MethodId::ReflectiveLenient: return "Lenient";
    case MethodId::ReflectiveModerate: return "Moderate";
    case MethodId::ReflectiveStringent: return "Stringent";
  }
  return "?";
}

bool is_reflective(MethodId m) {
  return m == MethodId::ReflectiveLenient || m == MethodId::ReflectiveModerate || m == MethodId::ReflectiveStringent;
}

Strictness reflective_strictness(MethodId m) {
  switch (m) {
    case MethodId::ReflectiveLenient: return Strictness::Lenient;
    case MethodId::ReflectiveStringent: return Strictness::Stringent;
    default: return Strictness::Moderate;
  }
}

std::optional<double> ValidationOutcome::rejection_rate() const {
  if (candidate_count == 0) return std::nullopt;
  return static_cast<double>(rejected_count) / static_cast<double>(candidate_count);
}

json outcome_to_json(const ValidationOutcome& o) {
  json fields = json::object();
  for (const auto& [name, f] : o.per_field) {
    std::string status = f.status == FieldOutcome::Status::Kept       ? "kept"
                         : f.status == FieldOutcome::Status::Rejected ? "rejected"
                                                                      : "absent";
    json e = {{"status", status}, {"value", f.value ? json(*f.value) : json(nullptr)}};
    if (f.unparseable_verdict) e["unparseable_verdict"] = true;
    if (f.qualifier_flagged) e["qualifier_flagged"] = true;
    fields[name] = std::move(e);
  }
  return {{"chunk_id", o.chunk_id},
          {"strictness", to_string(o.strictness)},
          {"per_field", std::move(fields)},
          {"rejected_count", o.rejected_count},
          {"candidate_count", o.candidate_count},
          {"unparseable_count", o.unparseable_count},
          {"qualifier_flagged_count", o.qualifier_flagged_count}};
}

ValidationOutcome outcome_from_json(const json& j) {
  ValidationOutcome o;
  o.chunk_id = j.at("chunk_id").get<std::string>();
  o.strictness = parse_strictness(j.at("strictness").get<std::string>());
  for (const auto& [name, e] : j.at("per_field").items()) {
    FieldOutcome f;
    const auto status = e.at("status").get<std::string>();
    f.status = status == "kept"       ? FieldOutcome::Status::Kept
               : status == "rejected" ? FieldOutcome::Status::Rejected
                                      : FieldOutcome::Status::Absent;
    if (!e.at("value").is_null()) f.value = e.at("value").get<std::string>();
    f.unparseable_verdict = e.value("unparseable_verdict", false);
    f.qualifier_flagged = e.value("qualifier_flagged", false);
    o.per_field[name] = std::move(f);
  }
  o.rejected_count = j.at("rejected_count").get<std::size_t>();
  o.candidate_count = j.at("candidate_count").get<std::size_t>();
  o.unparseable_count = j.value("unparseable_count", std::size_t{0});
  o.qualifier_flagged_count = j.value("qualifier_flagged_count", std::size_t{0});
  return o;
}

ExtractionRecord run_single_step(const DocumentChunk& chunk, PipelineContext& ctx) {
  return run_whole_schema(chunk, ctx, MethodId::SingleStep, single_step_prompt(chunk, ctx.schema),
                          ScanMode::FirstObject);
}

ExtractionRecord run_chain_of_thought(const DocumentChunk& chunk, PipelineContext& ctx) {
  return run_whole_schema(chunk, ctx, MethodId::ChainOfThought, chain_of_thought_prompt(chunk, ctx.schema),
                          ScanMode::LastObject);
}

ExtractionRecord run_two_step(const DocumentChunk& chunk, PipelineContext& ctx) {
  auto record = empty_record(ctx.schema, provenance(chunk, ctx, MethodId::TwoStep));
  record.notes.push_back("phase 2 issued as a fresh conversation without the phase 1 transcript");
  const auto presence_text =
      generate(ctx, chunk, two_step_presence_prompt(chunk, ctx.schema), ctx.options.extraction_max_tokens, record);
  PresenceMap presence;
  try {
    presence = parse_presence(presence_text, ctx.schema);
  } catch (const ParseFailure& e) {
    parse_failed(ctx, chunk, record, "two_step_presence", e);
    return record;
  }
  record.warnings.insert(record.warnings.end(), presence.warnings.begin(), presence.warnings.end());

  std::vector<std::string> selected;
  for (const auto& f : ctx.schema.fields()) {
    if (presence.verdicts.at(f.name) != Presence::No) selected.push_back(f.name);
  }
  if (selected.empty()) return record;

  const auto bundle = two_step_extract_prompt(chunk, ctx.schema, selected);
  const auto text = generate(ctx, chunk, bundle, ctx.options.extraction_max_tokens, record);
  try {
    merge_fields(recover_json(text), ctx.schema, bundle.fields, record, ctx.options.parser);
  } catch (const ParseFailure& e) {
    parse_failed(ctx, chunk, record, "two_step_extract", e);
  }
  return record;
}

ExtractionRecord run_categorical(const DocumentChunk& chunk, PipelineContext& ctx) {
  auto record = empty_record(ctx.schema, provenance(chunk, ctx, MethodId::Categorical));
  for (const auto& bundle : categorical_prompts(chunk, ctx.schema)) {
    const auto text = generate(ctx, chunk, bundle, ctx.options.extraction_max_tokens, record);
    try {
      merge_fields(recover_json(text), ctx.schema, bundle.fields, record, ctx.options.parser);
    } catch (const ParseFailure& e) {
      const auto category = to_string(ctx.schema.at(bundle.fields.front()).category);
      parse_failed(ctx, chunk, record, "categorical " + std::string(category), e);
    }
  }
  return record;
}

std::pair<ExtractionRecord, ValidationOutcome> run_reflective(const ExtractionRecord& record,
                                                              const DocumentChunk& chunk, PipelineContext& ctx,
                                                              Strictness strictness) {
  ExtractionRecord validated = record;
  ValidationOutcome outcome;
  outcome.chunk_id = chunk.chunk_id;
  outcome.strictness = strictness;

  for (const auto& spec : ctx.schema.fields()) {
    auto it = validated.values.find(spec.name);
    FieldOutcome fo;
    if (it == validated.values.end() || !it->second) {
      outcome.per_field[spec.name] = fo;
      continue;
    }
    fo.value = it->second;
    ++outcome.candidate_count;
    const auto bundle = validation_prompt(chunk, spec, *it->second, strictness);
    const auto text = generate(ctx, chunk, bundle, ctx.options.validation_max_tokens, validated);
    bool keep = false;
    try {
      const auto verdict = parse_verdict(text, strictness, ctx.options.parser);
      keep = verdict.decision == Decision::Accept;
      fo.qualifier_flagged = verdict.qualifier_flagged;
    } catch (const ParseFailure& e) {
      if (ctx.options.strict_parse) throw PipelineError(chunk.chunk_id, std::string("verdict parse failure: ") + e.what());
      fo.unparseable_verdict = true;
      validated.warnings.push_back("unparseable verdict for " + spec.name + " counted as rejection");
    }
    if (keep) {
      fo.status = FieldOutcome::Status::Kept;
    } else {
      fo.status = FieldOutcome::Status::Rejected;
      ++outcome.rejected_count;
      if (fo.unparseable_verdict) ++outcome.unparseable_count;
      if (fo.qualifier_flagged) ++outcome.qualifier_flagged_count;
      it->second.reset();
    }
    outcome.per_field[spec.name] = fo;
  }
  return {std::move(validated), std::move(outcome)};
}

MethodResult run_method(MethodId method, const DocumentChunk& chunk, PipelineContext& ctx) {
  switch (method) {
    case MethodId::SingleStep: return {run_single_step(chunk, ctx), std::nullopt};
    case MethodId::TwoStep: return {run_two_step(chunk, ctx), std::nullopt};
    case MethodId::Categorical: return {run_categorical(chunk, ctx), std::nullopt};
    case MethodId::ChainOfThought: return {run_chain_of_thought(chunk, ctx), std::nullopt};
    case MethodId::ReflectiveLenient:
    case MethodId::ReflectiveModerate:
    case MethodId::ReflectiveStringent: {
      auto base = run_single_step(chunk, ctx);
      base.method = std::string(to_string(method));
      auto [validated, outcome] = run_reflective(base, chunk, ctx, reflective_strictness(method));
      return {std::move(validated), std::move(outcome)};
    }
  }
  throw ConfigError("unhandled method");
}

}  // namespace hydroie
