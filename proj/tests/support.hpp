#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hydroie/backends.hpp"
#include "hydroie/corpus.hpp"
#include "hydroie/schema.hpp"
#include "hydroie/util.hpp"

namespace hydroie::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("hydroie_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// "w0 w1 ..." with mixed whitespace between words.
inline std::string synthetic_text(std::size_t words, unsigned seed = 1) {
  static const char* seps[] = {" ", "  ", "\n", "\t", " \n "};
  std::mt19937 rng(seed);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += seps[rng() % 5];
    out += "w" + std::to_string(i);
  }
  return out;
}

inline DocumentChunk make_chunk(std::string text, std::string doc_id = "doc", std::size_t index = 0) {
  DocumentChunk c;
  c.doc_id = std::move(doc_id);
  c.index = index;
  c.chunk_id = make_chunk_id(c.doc_id, index);
  c.text = std::move(text);
  c.end_word = tokenize_words(c.text).size();
  return c;
}

// JSON object mapping every builtin field to value_of(field) (null when the
// function returns an empty string).
inline std::string fields_json(const std::function<std::string(const FieldSpec&)>& value_of,
                               const std::vector<std::string>& only = {}) {
  json j = json::object();
  for (const auto& f : builtin_schema().fields()) {
    if (!only.empty() && std::find(only.begin(), only.end(), f.name) == only.end()) continue;
    const auto v = value_of(f);
    j[f.name] = v.empty() ? json(nullptr) : json(v);
  }
  return j.dump();
}

// A plausible non-null value for every field.
inline std::string sample_value(const FieldSpec& f) {
  if (f.value_kind == ValueKind::FreeText) return f.name + " text";
  const auto unit = f.canonical_unit.value_or("");
  return std::to_string(100 + f.name.size()) + (unit.empty() ? "" : " " + unit);
}

// Corpus of n single-chunk documents with distinct text.
inline Corpus small_corpus(std::size_t n, std::size_t words_each = 60) {
  std::vector<SourceDocument> docs;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "doc%02zu", i);
    docs.push_back(make_document(id, synthetic_text(words_each, static_cast<unsigned>(i + 7)) + " tail" + id));
  }
  return build_corpus(std::move(docs));
}

// Field named on a "Field: X" line (validation and judge prompts).
inline std::string field_of(const GenerationRequest& r) {
  const auto& t = r.messages.back().text;
  const auto at = t.find("\nField: ");
  if (at == std::string::npos) return {};
  const auto start = at + 8;
  return t.substr(start, t.find('\n', start) - start);
}

// Fields listed as "- X: description" lines in an extraction prompt.
inline std::vector<std::string> listed_fields(const GenerationRequest& r) {
  std::vector<std::string> out;
  const auto& t = r.messages.back().text;
  for (const auto& f : builtin_schema().fields()) {
    if (t.find("\n- " + f.name + ": ") != std::string::npos) out.push_back(f.name);
  }
  return out;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Scripted model whose answers depend only on the request text and a salt:
// fields present about a third of the time, mixed presence verdicts, and
// validation verdicts that reject roughly two in five candidates.
inline ScriptedBackend::Responder deterministic_responder(std::string salt) {
  return [salt](const GenerationRequest& r) -> std::optional<std::string> {
    const auto& text = r.messages.back().text;
    const auto roll = [&](const std::string& key, std::uint64_t mod) {
      return fnv1a(salt + "|" + key + "|" + text) % mod;
    };
    switch (r.method_tag) {
      case PromptTag::TwoStepPresence: {
        json j = json::object();
        static const char* verdicts[] = {"YES", "NO", "NO", "MAYBE"};
        for (const auto& f : builtin_schema().fields()) j[f.name] = verdicts[roll(f.name, 4)];
        return j.dump();
      }
      case PromptTag::ValidateLenient:
      case PromptTag::ValidateModerate:
      case PromptTag::ValidateStringent:
        return roll("verdict", 5) < 2 ? "REJECT\nnot found in the text" : "ACCEPT\nstated directly";
      case PromptTag::BronzeJudge: {
        json j;
        const auto f = field_of(r);
        j[f] = roll(f, 3) == 0 ? json(sample_value(builtin_schema().at(f))) : json(nullptr);
        return j.dump();
      }
      default: {
        const auto fields = listed_fields(r);
        const auto body = fields_json(
            [&](const FieldSpec& f) { return roll(f.name, 3) == 0 ? sample_value(f) : std::string(); }, fields);
        if (r.method_tag == PromptTag::ChainOfThought) return "Step 1: read.\nStep 6: done.\n" + body;
        return body;
      }
    }
  };
}

inline std::shared_ptr<ScriptedBackend> deterministic_backend(std::string salt) {
  auto b = std::make_shared<ScriptedBackend>();
  b->set_responder(deterministic_responder(std::move(salt)));
  return b;
}

// Every regular file under root, relative path -> bytes.
inline std::map<std::string, std::string> read_tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    out[std::filesystem::relative(e.path(), root).generic_string()] = read_file(e.path());
  }
  return out;
}

}  // namespace hydroie::testing
