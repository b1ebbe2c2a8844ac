#include <gtest/gtest.h>

#include "hydroie/backends.hpp"
#include "hydroie/pipeline.hpp"
#include "support.hpp"

using namespace hydroie;
using namespace hydroie::testing;

namespace {

struct Harness {
  std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
  Gateway gateway;
  PipelineContext ctx;

  explicit Harness(PipelineOptions options = {})
      : gateway(backend, fast_options()), ctx{gateway, builtin_schema(), "model-a", "model-a", options} {}

  static GatewayOptions fast_options() {
    GatewayOptions o;
    o.backoff_initial = std::chrono::milliseconds(0);
    o.max_retries = 1;
    return o;
  }
};

const DocumentChunk& chunk() {
  static const auto c = make_chunk("The Smith Dam has an installed capacity of 20 MW and a minimum flow of 300 cfs.");
  return c;
}

std::string all_values_json() { return fields_json(sample_value); }

std::string presence_json(const std::function<std::string(const FieldSpec&)>& verdict) {
  json j = json::object();
  for (const auto& f : builtin_schema().fields()) j[f.name] = verdict(f);
  return j.dump();
}

}  // namespace

TEST(SingleStep, AllNullGivesAllAbsent) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) { return all_null_json(); });
  const auto rec = run_single_step(chunk(), h.ctx);
  EXPECT_EQ(rec.values.size(), 17u);
  EXPECT_EQ(rec.present_count(), 0u);
  EXPECT_EQ(rec.method, "single_step");
  EXPECT_EQ(h.backend->calls(), 1u);
}

TEST(SingleStep, PopulatedAndProseWrapped) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) {
    return "Here is the extraction:\n```json\n" + fields_json([](const FieldSpec& f) {
             return f.name == "Power_Capacity" ? "20 MW" : f.name == "Dam_Name" ? "Smith Dam" : "";
           }) + "\n```\nLet me know if you need more.";
  });
  const auto rec = run_single_step(chunk(), h.ctx);
  EXPECT_EQ(rec.present_count(), 2u);
  EXPECT_EQ(rec.values.at("Power_Capacity"), "20 MW");
  EXPECT_EQ(rec.values.at("Dam_Name"), "Smith Dam");
}

TEST(SingleStep, GarbageDegradesUnlessStrict) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) { return std::string("I cannot read this document."); });
  const auto rec = run_single_step(chunk(), h.ctx);
  EXPECT_EQ(rec.present_count(), 0u);
  ASSERT_FALSE(rec.warnings.empty());
  EXPECT_NE(rec.warnings.back().find("I cannot read"), std::string::npos);

  PipelineOptions strict;
  strict.strict_parse = true;
  Harness s(strict);
  s.backend->set_responder([](const GenerationRequest&) { return std::string("nothing"); });
  EXPECT_THROW(run_single_step(chunk(), s.ctx), PipelineError);
}

TEST(SingleStep, TruncationIsNoted) {
  Harness h;
  h.backend = std::make_shared<ScriptedBackend>(
      std::vector<ScriptRule>{{std::nullopt, "single_step", all_values_json(), FinishReason::Length}});
  Gateway g(h.backend, Harness::fast_options());
  PipelineContext ctx{g, builtin_schema(), "m", "m", {}};
  const auto rec = run_single_step(chunk(), ctx);
  EXPECT_EQ(rec.present_count(), 17u);
  EXPECT_TRUE(std::any_of(rec.warnings.begin(), rec.warnings.end(),
                          [](const std::string& w) { return w.find("truncated") != std::string::npos; }));
}

TEST(SingleStep, TransportFailureBecomesPipelineError) {
  Harness h;
  h.backend->inject_failures({503, 503});
  h.backend->set_responder([](const GenerationRequest&) { return all_null_json(); });
  try {
    run_single_step(chunk(), h.ctx);
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.chunk_id(), chunk().chunk_id);
  }
}

TEST(TwoStep, AllNoSkipsPhaseTwo) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) { return presence_json([](const FieldSpec&) { return "NO"; }); });
  const auto rec = run_two_step(chunk(), h.ctx);
  EXPECT_EQ(h.backend->calls(), 1u);
  EXPECT_EQ(rec.present_count(), 0u);
  EXPECT_EQ(rec.values.size(), 17u);
}

TEST(TwoStep, AllYesRequestsEveryField) {
  Harness h;
  std::vector<std::string> requested;
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::TwoStepPresence) return presence_json([](const FieldSpec&) { return "YES"; });
    requested = listed_fields(r);
    return all_values_json();
  });
  const auto rec = run_two_step(chunk(), h.ctx);
  EXPECT_EQ(h.backend->calls(), 2u);
  EXPECT_EQ(requested.size(), 17u);
  EXPECT_EQ(rec.present_count(), 17u);
  // Phase 2 carries no trace of the phase 1 exchange.
  const auto log = h.backend->request_log();
  EXPECT_EQ(log[1].messages.size(), log[0].messages.size());
}

TEST(TwoStep, MixedRequestsExactlyYesAndMaybe) {
  Harness h;
  const auto verdict = [](const FieldSpec& f) -> std::string {
    if (f.category == Category::Flow) return "YES";
    if (f.category == Category::Storage) return "MAYBE";
    return "NO";
  };
  std::vector<std::string> requested;
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::TwoStepPresence) return presence_json(verdict);
    requested = listed_fields(r);
    // Answers for everything, including fields that were not asked for.
    return fields_json([](const FieldSpec& f) { return f.category == Category::Storage ? "" : sample_value(f); });
  });
  const auto rec = run_two_step(chunk(), h.ctx);
  std::vector<std::string> expected;
  for (const auto& f : builtin_schema().fields()) {
    if (verdict(f) != "NO") expected.push_back(f.name);
  }
  EXPECT_EQ(requested, expected);
  for (const auto& f : builtin_schema().fields()) {
    // Maybe fields answered null count as absent; NO fields are never filled.
    EXPECT_EQ(rec.values.at(f.name).has_value(), f.category == Category::Flow) << f.name;
  }
}

TEST(Categorical, SixCallsPartitionTheSchema) {
  Harness h;
  std::vector<std::string> seen;
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    const auto fields = listed_fields(r);
    seen.insert(seen.end(), fields.begin(), fields.end());
    return fields_json(sample_value, fields);
  });
  const auto rec = run_categorical(chunk(), h.ctx);
  EXPECT_EQ(h.backend->calls(), 6u);
  EXPECT_EQ(h.backend->calls_with_tag(PromptTag::Categorical), 6u);
  EXPECT_EQ(seen, builtin_schema().names());
  EXPECT_EQ(rec.present_count(), 17u);
}

TEST(Categorical, OneFailedCategoryKeepsTheRest) {
  Harness h;
  std::size_t storage_fields = fields_in_category(builtin_schema(), Category::Storage).size();
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    const auto fields = listed_fields(r);
    if (builtin_schema().at(fields.front()).category == Category::Storage) return "the storage section is unclear";
    return fields_json(sample_value, fields);
  });
  const auto rec = run_categorical(chunk(), h.ctx);
  EXPECT_EQ(rec.values.size(), 17u);
  EXPECT_EQ(rec.present_count(), 17u - storage_fields);
  EXPECT_TRUE(std::any_of(rec.warnings.begin(), rec.warnings.end(),
                          [](const std::string& w) { return w.find("Storage") != std::string::npos; }));
}

TEST(ChainOfThought, LastObjectWins) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) {
    return std::string("Step 1: the project is the Smith Dam, e.g. {\"Dam_Name\": \"draft\"}.\n"
                       "Step 6: done.\nFinal: ") +
           fields_json([](const FieldSpec& f) { return f.name == "Dam_Name" ? "Smith Dam" : ""; });
  });
  const auto rec = run_chain_of_thought(chunk(), h.ctx);
  EXPECT_EQ(rec.values.at("Dam_Name"), "Smith Dam");
  EXPECT_EQ(rec.present_count(), 1u);
}

TEST(Reflective, AllAcceptKeepsRecord) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return all_values_json();
    return "ACCEPT";
  });
  const auto res = run_method(MethodId::ReflectiveModerate, chunk(), h.ctx);
  ASSERT_TRUE(res.outcome);
  EXPECT_EQ(res.outcome->rejected_count, 0u);
  EXPECT_EQ(res.outcome->candidate_count, 17u);
  EXPECT_EQ(res.outcome->rejection_rate(), 0.0);
  EXPECT_EQ(res.record.present_count(), 17u);
  EXPECT_EQ(h.backend->calls_with_tag(PromptTag::ValidateModerate), 17u);
}

TEST(Reflective, RejectAllOfFive) {
  Harness h;
  const std::vector<std::string> five = {"Dam_Name", "County", "Minimum_Flow", "Power_Capacity", "Power_Head"};
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return fields_json(sample_value, five);
    return "REJECT\nnot supported";
  });
  const auto res = run_method(MethodId::ReflectiveLenient, chunk(), h.ctx);
  EXPECT_EQ(res.outcome->candidate_count, 5u);
  EXPECT_EQ(res.outcome->rejected_count, 5u);
  EXPECT_EQ(res.outcome->rejection_rate(), 1.0);
  EXPECT_EQ(res.record.present_count(), 0u);
  EXPECT_EQ(res.record.values.size(), 17u);
}

TEST(Reflective, TwoOfEightRejected) {
  Harness h;
  const auto& names = builtin_schema().names();
  const std::vector<std::string> eight(names.begin(), names.begin() + 8);
  h.backend->set_responder([&](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return fields_json(sample_value, eight);
    const auto f = field_of(r);
    return f == eight[2] || f == eight[5] ? "REJECT" : "ACCEPT";
  });
  const auto res = run_method(MethodId::ReflectiveStringent, chunk(), h.ctx);
  EXPECT_EQ(res.outcome->candidate_count, 8u);
  EXPECT_EQ(res.outcome->rejected_count, 2u);
  EXPECT_DOUBLE_EQ(*res.outcome->rejection_rate(), 0.25);
  EXPECT_EQ(res.record.present_count(), 6u);
  EXPECT_FALSE(res.record.values.at(eight[2]));
  EXPECT_EQ(res.outcome->per_field.at(eight[5]).status, FieldOutcome::Status::Rejected);
  EXPECT_EQ(res.outcome->per_field.at(eight[5]).value, sample_value(builtin_schema().at(eight[5])));
  EXPECT_EQ(res.outcome->per_field.at(names.back()).status, FieldOutcome::Status::Absent);
}

TEST(Reflective, NoCandidatesMeansUndefinedRate) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest&) { return all_null_json(); });
  const auto res = run_method(MethodId::ReflectiveModerate, chunk(), h.ctx);
  EXPECT_EQ(res.outcome->candidate_count, 0u);
  EXPECT_FALSE(res.outcome->rejection_rate());
  EXPECT_EQ(h.backend->calls(), 1u);
}

TEST(Reflective, UnparseableVerdictCountsAsRejection) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return fields_json(sample_value, {"Dam_Name", "County"});
    return field_of(r) == "County" ? "Hmm, hard to say." : "ACCEPT";
  });
  const auto res = run_method(MethodId::ReflectiveModerate, chunk(), h.ctx);
  EXPECT_EQ(res.outcome->rejected_count, 1u);
  EXPECT_EQ(res.outcome->unparseable_count, 1u);
  EXPECT_TRUE(res.outcome->per_field.at("County").unparseable_verdict);
  EXPECT_FALSE(res.record.values.at("County"));
}

TEST(Reflective, StringentQualifiersReject) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return fields_json(sample_value, {"Dam_Name"});
    return "ACCEPT, although the name is probably abbreviated";
  });
  const auto stringent = run_method(MethodId::ReflectiveStringent, chunk(), h.ctx);
  EXPECT_EQ(stringent.outcome->rejected_count, 1u);
  EXPECT_EQ(stringent.outcome->qualifier_flagged_count, 1u);
  const auto moderate = run_method(MethodId::ReflectiveModerate, chunk(), h.ctx);
  EXPECT_EQ(moderate.outcome->rejected_count, 0u);
}

TEST(Reflective, ThreeStrictnessesShareOneExtraction) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return fields_json(sample_value, {"Dam_Name", "County", "Location"});
    return "ACCEPT";
  });
  run_method(MethodId::SingleStep, chunk(), h.ctx);
  for (auto m : {MethodId::ReflectiveLenient, MethodId::ReflectiveModerate, MethodId::ReflectiveStringent}) {
    run_method(m, chunk(), h.ctx);
  }
  EXPECT_EQ(h.backend->calls_with_tag(PromptTag::SingleStep), 1u);
  EXPECT_EQ(h.backend->calls(), 1u + 3u * 3u);
}

TEST(Reflective, OutcomeJsonRoundTrip) {
  Harness h;
  h.backend->set_responder([](const GenerationRequest& r) -> std::optional<std::string> {
    if (r.method_tag == PromptTag::SingleStep) return all_values_json();
    return field_of(r).size() % 2 ? "REJECT" : field_of(r).size() % 3 ? "ACCEPT" : "?";
  });
  const auto res = run_method(MethodId::ReflectiveStringent, chunk(), h.ctx);
  EXPECT_EQ(outcome_from_json(json::parse(outcome_to_json(*res.outcome).dump())), *res.outcome);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("few_shot"), ConfigError);
  EXPECT_EQ(method_title(MethodId::ChainOfThought), "Chain-of-Thought");
}

TEST(Methods, TotalUnderInjectedFaults) {
  // Every method returns 17 fields whatever mix of junk the model emits.
  static const char* replies[] = {"", "{", "null", "[]", "{\"Dam_Name\": {\"nested\": 1}}", "ACCEPT", "YES",
                                  "{\"Dam_Name\": \"X\", \"Bogus\": 3}", "```json\n{}\n```"};
  for (std::size_t seed = 0; seed < 9; ++seed) {
    for (auto m : kAllMethods) {
      Harness h;
      std::size_t n = seed;
      h.backend->set_responder([&](const GenerationRequest&) { return std::string(replies[n++ % 9]); });
      const auto res = run_method(m, chunk(), h.ctx);
      ASSERT_EQ(res.record.values.size(), 17u) << to_string(m) << " seed " << seed;
      ASSERT_EQ(res.record.method, to_string(m));
    }
  }
}
