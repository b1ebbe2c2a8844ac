#include <gtest/gtest.h>

#include <random>

#include "hydroie/output_parser.hpp"
#include "support.hpp"

using namespace hydroie;

namespace {

const Provenance kProv{"doc#0", "model-a", "single_step"};

bool has_warning(const std::vector<std::string>& w, std::string_view needle) {
  return std::any_of(w.begin(), w.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

// Random JSON object with nested values and awkward strings.
json random_object(std::mt19937& rng, int depth = 0) {
  static const char* strings[] = {"plain", "with } brace", "with { brace", "quote \" inside", "back\\slash",
                                  "ünïcödé", "", "```"};
  json obj = json::object();
  const int n = 1 + static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) {
    const auto key = "k" + std::to_string(rng() % 100);
    switch (rng() % (depth < 2 ? 5 : 4)) {
      case 0: obj[key] = strings[rng() % 8]; break;
      case 1: obj[key] = static_cast<int>(rng() % 10000); break;
      case 2: obj[key] = nullptr; break;
      case 3: obj[key] = json::array({1, "x}", nullptr}); break;
      default: obj[key] = random_object(rng, depth + 1); break;
    }
  }
  return obj;
}

}  // namespace

TEST(RecoverJson, StripsFences) {
  EXPECT_EQ(recover_json("```json\n{\"a\":1}\n```"), json::parse(R"({"a":1})"));
  EXPECT_EQ(recover_json("```\n{\"a\":2}\n```"), json::parse(R"({"a":2})"));
}

TEST(RecoverJson, IgnoresSurroundingProse) {
  EXPECT_EQ(recover_json("Sure! {\"a\": {\"b\": 2}} hope that helps"), json::parse(R"({"a":{"b":2}})"));
  EXPECT_EQ(recover_json("text {\"s\": \"a } in a string\"} more"), json::parse(R"({"s":"a } in a string"})"));
}

TEST(RecoverJson, FirstAndLastObjects) {
  const std::string text = R"(Step 1 gives {"Dam_Name": "draft"}. Final answer: {"Dam_Name": "Final Dam"})";
  EXPECT_EQ(recover_json(text, ScanMode::FirstObject).at("Dam_Name"), "draft");
  EXPECT_EQ(recover_json(text, ScanMode::LastObject).at("Dam_Name"), "Final Dam");
}

TEST(RecoverJson, SkipsBalancedButInvalidCandidates) {
  EXPECT_EQ(recover_json("{not json} then {\"ok\": true}"), json::parse(R"({"ok":true})"));
}

TEST(RecoverJson, FailsWithExcerpt) {
  try {
    recover_json("no json here");
    FAIL();
  } catch (const ParseFailure& e) {
    EXPECT_EQ(e.text_excerpt(), "no json here");
  }
  try {
    recover_json(std::string(2000, 'x'));
    FAIL();
  } catch (const ParseFailure& e) {
    EXPECT_LE(e.text_excerpt().size(), 500u);
  }
  EXPECT_THROW(recover_json("{\"a\": 1"), ParseFailure);
  EXPECT_THROW(recover_json(""), ParseFailure);
}

TEST(RecoverJson, PropertyRecoversEmbeddedObject) {
  std::mt19937 rng(42);
  static const char* prose[] = {"", "Here you go: ", "Answer:\n", "Note: brace } stray. ", "` "};
  for (int i = 0; i < 500; ++i) {
    const auto obj = random_object(rng);
    const std::string text = std::string(prose[rng() % 5]) + obj.dump(rng() % 2 ? 2 : -1) + "\nThanks.";
    ASSERT_EQ(recover_json(text, ScanMode::FirstObject), obj) << text;
    ASSERT_EQ(recover_json("x " + text, ScanMode::LastObject), obj) << text;
  }
}

TEST(RecoverJson, FuzzNeverCrashes) {
  std::mt19937 rng(7);
  const std::string alphabet = "{}[]\"\\:,abc 01\n`";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const auto len = rng() % 64;
    for (std::size_t k = 0; k < len; ++k) {
      s.push_back(rng() % 4 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()]);
    }
    try {
      const auto j = recover_json(s, rng() % 2 ? ScanMode::FirstObject : ScanMode::LastObject);
      ASSERT_TRUE(j.is_object());
    } catch (const ParseFailure&) {
    }
  }
}

TEST(ParseExtraction, FillsEverySchemaField) {
  const auto rec = parse_extraction(json::parse(R"({"Dam_Name": "Smith Dam", "Minimum_Flow": null})"),
                                    builtin_schema(), kProv);
  EXPECT_EQ(rec.values.size(), 17u);
  EXPECT_EQ(rec.present_count(), 1u);
  EXPECT_EQ(rec.values.at("Dam_Name"), "Smith Dam");
  EXPECT_TRUE(has_warning(rec.warnings, "missing"));
  EXPECT_EQ(rec.chunk_id, "doc#0");
  EXPECT_EQ(rec.model_name, "model-a");
}

TEST(ParseExtraction, FoldsKeys) {
  const auto rec = parse_extraction(json::parse(R"({"dam name": "X", "power-capacity": "5 MW"})"), builtin_schema(), kProv);
  EXPECT_EQ(rec.values.at("Dam_Name"), "X");
  EXPECT_EQ(rec.values.at("Power_Capacity"), "5 MW");
  EXPECT_TRUE(has_warning(rec.warnings, "dam name"));
  EXPECT_EQ(fold_key("Dam Name"), fold_key("dam_name"));
  EXPECT_EQ(fold_key("Power-Capacity"), "power_capacity");
}

TEST(ParseExtraction, NullTokens) {
  for (const char* token : {"N/A", "null", "None", "na", "Not specified", "NOT MENTIONED", "unknown", "", "  "}) {
    json j = {{"Power_Capacity", token}};
    const auto rec = parse_extraction(j, builtin_schema(), kProv);
    EXPECT_FALSE(rec.values.at("Power_Capacity").has_value()) << token;
  }
  const auto rec = parse_extraction(json::parse(R"({"Power_Capacity": "N/A"})"), builtin_schema(), kProv);
  EXPECT_TRUE(has_warning(rec.warnings, "Power_Capacity"));
}

TEST(ParseExtraction, NumbersAndOtherShapes) {
  const auto rec = parse_extraction(
      json::parse(R"({"Power_Capacity": 20, "Power_Head": 12.5, "County": ["Juneau", "Adams"], "Extra": 1})"),
      builtin_schema(), kProv);
  EXPECT_EQ(rec.values.at("Power_Capacity"), "20");
  EXPECT_EQ(rec.values.at("Power_Head"), "12.5");
  EXPECT_EQ(rec.values.at("County"), "Juneau; Adams");
  EXPECT_TRUE(has_warning(rec.warnings, "Extra"));
  EXPECT_THROW(parse_extraction(json::array(), builtin_schema(), kProv), ParseFailure);
}

TEST(ParseExtraction, TotalityOverArbitraryObjects) {
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    auto obj = random_object(rng);
    if (rng() % 2) obj["Dam_Name"] = "Dam " + std::to_string(i);
    const auto rec = parse_extraction(obj, builtin_schema(), kProv);
    ASSERT_EQ(rec.values.size(), 17u);
    for (const auto& [k, v] : rec.values) {
      ASSERT_TRUE(builtin_schema().find(k));
      if (v) ASSERT_FALSE(trim(*v).empty());
    }
  }
}

TEST(ParseExtraction, RecordJsonRoundTrip) {
  auto rec = parse_extraction(json::parse(R"({"Dam_Name": "Smith Dam", "dam name": "dup"})"), builtin_schema(), kProv);
  rec.notes.push_back("a note");
  EXPECT_EQ(record_from_json(json::parse(dump_pretty(record_to_json(rec)))), rec);
}

TEST(ParsePresence, JsonAndLines) {
  json all = json::object();
  for (const auto& f : builtin_schema().fields()) all[f.name] = "YES";
  const auto p = parse_presence(all.dump(), builtin_schema());
  EXPECT_EQ(p.verdicts.size(), 17u);
  EXPECT_TRUE(std::all_of(p.verdicts.begin(), p.verdicts.end(), [](const auto& kv) { return kv.second == Presence::Yes; }));
  EXPECT_TRUE(p.warnings.empty());

  const auto mixed = parse_presence(R"({"Dam_Name":"yes","County":"No","Location":"perhaps"})", builtin_schema());
  EXPECT_EQ(mixed.verdicts.at("Dam_Name"), Presence::Yes);
  EXPECT_EQ(mixed.verdicts.at("County"), Presence::No);
  EXPECT_EQ(mixed.verdicts.at("Location"), Presence::Maybe);
  EXPECT_EQ(mixed.verdicts.at("Power_Head"), Presence::Maybe);
  EXPECT_TRUE(has_warning(mixed.warnings, "perhaps"));

  const auto lines = parse_presence("Dam_Name: NO\nCounty: yes\n- Power Head: maybe", builtin_schema());
  EXPECT_EQ(lines.verdicts.at("Dam_Name"), Presence::No);
  EXPECT_EQ(lines.verdicts.at("County"), Presence::Yes);
  EXPECT_EQ(lines.verdicts.at("Power_Head"), Presence::Maybe);

  EXPECT_THROW(parse_presence("I cannot help with that.", builtin_schema()), ParseFailure);
}

TEST(ParseVerdict, FirstDecisiveLine) {
  EXPECT_EQ(parse_verdict("ACCEPT — exact match found", Strictness::Moderate).decision, Decision::Accept);
  EXPECT_EQ(parse_verdict("REJECT", Strictness::Lenient).decision, Decision::Reject);
  EXPECT_EQ(parse_verdict("Verdict:\naccepted\nREJECT later", Strictness::Moderate).decision, Decision::Accept);
  const auto v = parse_verdict("REJECT\nthe number was rounded", Strictness::Stringent);
  EXPECT_EQ(v.rationale, "the number was rounded");
  EXPECT_THROW(parse_verdict("I am not sure.", Strictness::Moderate), ParseFailure);
  EXPECT_THROW(parse_verdict("UNACCEPTABLE", Strictness::Moderate), ParseFailure);
}

TEST(ParseVerdict, StringentQualifierOverride) {
  const auto s = parse_verdict("ACCEPT, though possibly the value is inferred", Strictness::Stringent);
  EXPECT_EQ(s.decision, Decision::Reject);
  EXPECT_TRUE(s.qualifier_flagged);
  const auto m = parse_verdict("ACCEPT, though possibly the value is inferred", Strictness::Moderate);
  EXPECT_EQ(m.decision, Decision::Accept);
  EXPECT_FALSE(m.qualifier_flagged);
  // Whole words only: "mayor" is not "may".
  EXPECT_EQ(parse_verdict("ACCEPT\nthe mayor signed it", Strictness::Stringent).decision, Decision::Accept);
  ParserOptions extra;
  extra.qualifier_lexicon.insert("roughly");
  EXPECT_EQ(parse_verdict("ACCEPT roughly", Strictness::Stringent, extra).decision, Decision::Reject);
}
