#include "hydroie/output_parser.hpp"

#include <algorithm>
#include <cctype>

namespace hydroie {

namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || u >= 0x80;
}

// End index (inclusive) of the balanced object starting at `start`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

std::optional<json> scan_objects(std::string_view s, ScanMode mode) {
  std::optional<json> found;
  std::size_t i = 0;
  while ((i = s.find('{', i)) != std::string_view::npos) {
    const auto end = balanced_end(s, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    auto j = json::parse(s.substr(i, end - i + 1), nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      if (mode == ScanMode::FirstObject) return j;
      found = std::move(j);
      i = end + 1;
    } else {
      ++i;
    }
  }
  return found;
}

// A fence marker starts a line or follows whitespace; backticks inside a
// JSON string ("```") do not qualify.
std::size_t find_fence(std::string_view s, std::size_t from) {
  for (auto p = s.find("```", from); p != std::string_view::npos; p = s.find("```", p + 1)) {
    if (p == 0 || std::isspace(static_cast<unsigned char>(s[p - 1]))) return p;
  }
  return std::string_view::npos;
}

// Bodies of ``` fenced blocks, in order.
std::vector<std::string_view> fenced_blocks(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = find_fence(s, pos);
    if (open == std::string_view::npos) break;
    auto body = s.find('\n', open + 3);
    if (body == std::string_view::npos) break;
    ++body;
    const auto close = find_fence(s, body);
    if (close == std::string_view::npos) {
      out.push_back(s.substr(body));
      break;
    }
    out.push_back(s.substr(body, close - body));
    pos = close + 3;
  }
  return out;
}

std::vector<std::string> words_lower(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<Presence> presence_token(std::string_view raw) {
  std::string t;
  for (char c : raw) {
    if (std::isalpha(static_cast<unsigned char>(c))) t.push_back(static_cast<char>(std::tolower(c)));
  }
  if (t == "yes") return Presence::Yes;
  if (t == "no") return Presence::No;
  if (t == "maybe") return Presence::Maybe;
  return std::nullopt;
}

const FieldSpec* match_field(const Schema& schema, std::string_view key, bool& exact) {
  if (const auto* f = schema.find(key)) {
    exact = true;
    return f;
  }
  exact = false;
  const auto folded = fold_key(key);
  for (const auto& f : schema.fields()) {
    if (fold_key(f.name) == folded) return &f;
  }
  return nullptr;
}

}  // namespace

const ParserOptions& default_parser_options() {
  static const ParserOptions options;
  return options;
}

json recover_json(std::string_view text, ScanMode mode) {
  auto blocks = fenced_blocks(text);
  if (mode == ScanMode::LastObject) std::reverse(blocks.begin(), blocks.end());
  for (const auto& block : blocks) {
    if (auto j = scan_objects(block, mode)) return *j;
  }
  if (auto j = scan_objects(text, mode)) return *j;
  throw ParseFailure("no balanced JSON object found", text);
}

std::size_t ExtractionRecord::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& kv) { return kv.second.has_value(); }));
}

ExtractionRecord empty_record(const Schema& schema, const Provenance& provenance) {
  ExtractionRecord r;
  r.chunk_id = provenance.chunk_id;
  r.model_name = provenance.model_name;
  r.method = provenance.method;
  for (const auto& f : schema.fields()) r.values.emplace(f.name, std::nullopt);
  return r;
}

std::string fold_key(std::string_view key) {
  std::string out;
  for (char c : trim(key)) {
    if (c == ' ' || c == '-' || c == '_') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::optional<std::string> normalize_json_value(const json& value, std::string_view field,
                                                std::vector<std::string>& warnings, const ParserOptions& options) {
  const std::string f(field);
  auto from_text = [&](std::string_view raw) -> std::optional<std::string> {
    auto t = trim(raw);
    if (options.null_tokens.contains(to_lower_ascii(t))) {
      if (!t.empty()) warnings.push_back("null token '" + t + "' for " + f + " treated as absent");
      return std::nullopt;
    }
    return t;
  };
  switch (value.type()) {
    case json::value_t::null: return std::nullopt;
    case json::value_t::string: return from_text(value.get_ref<const std::string&>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return dump_compact(value);
    case json::value_t::boolean:
      warnings.push_back("boolean value for " + f + " stored as text");
      return value.get<bool>() ? "true" : "false";
    case json::value_t::array: {
      std::string joined;
      for (const auto& el : value) {
        std::vector<std::string> ignored;
        if (auto v = normalize_json_value(el, field, ignored, options)) {
          if (!joined.empty()) joined += "; ";
          joined += *v;
        }
      }
      warnings.push_back("list value for " + f + " joined");
      if (joined.empty()) return std::nullopt;
      return joined;
    }
    default:
      warnings.push_back("structured value for " + f + " stored as JSON text");
      return from_text(dump_compact(value));
  }
}

void merge_fields(const json& object, const Schema& schema, const std::vector<std::string>& requested,
                  ExtractionRecord& record, const ParserOptions& options) {
  std::set<std::string> seen;
  for (const auto& [key, value] : object.items()) {
    bool exact = false;
    const auto* spec = match_field(schema, key, exact);
    if (spec == nullptr || std::find(requested.begin(), requested.end(), spec->name) == requested.end()) {
      record.warnings.push_back("unexpected key '" + key + "' ignored");
      continue;
    }
    if (!seen.insert(spec->name).second) {
      record.warnings.push_back("duplicate key '" + key + "' for " + spec->name + " ignored");
      continue;
    }
    if (!exact) record.warnings.push_back("key '" + key + "' folded to " + spec->name);
    record.values[spec->name] = normalize_json_value(value, spec->name, record.warnings, options);
  }
  for (const auto& name : requested) {
    if (!seen.contains(name)) {
      record.warnings.push_back("missing key " + name + " treated as absent");
      record.values[name] = std::nullopt;
    }
  }
}

ExtractionRecord parse_extraction(const json& object, const Schema& schema, const Provenance& provenance,
                                  const ParserOptions& options) {
  if (!object.is_object()) throw ParseFailure("extraction output is not a JSON object", dump_compact(object));
  auto record = empty_record(schema, provenance);
  merge_fields(object, schema, schema.names(), record, options);
  return record;
}

std::string_view to_string(Presence p) {
  switch (p) {
    case Presence::Yes: return "YES";
    case Presence::No: return "NO";
    case Presence::Maybe: return "MAYBE";
  }
  return "MAYBE";
}

PresenceMap parse_presence(std::string_view text, const Schema& schema) {
  std::map<std::string, std::string> raw;  // field -> token text
  std::vector<std::string> warnings;
  bool parsed = false;
  try {
    const auto obj = recover_json(text);
    parsed = true;
    for (const auto& [key, value] : obj.items()) {
      bool exact = false;
      const auto* spec = match_field(schema, key, exact);
      if (spec == nullptr) {
        warnings.push_back("unexpected key '" + key + "' ignored");
        continue;
      }
      if (value.is_string()) {
        raw[spec->name] = value.get<std::string>();
      } else if (value.is_boolean()) {
        raw[spec->name] = value.get<bool>() ? "YES" : "NO";
      } else {
        raw[spec->name] = dump_compact(value);
      }
    }
  } catch (const ParseFailure&) {
    // "Field: TOKEN" lines.
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      const auto line = text.substr(pos, nl - pos);
      pos = nl + 1;
      const auto sep = line.find_first_of(":=");
      if (sep == std::string_view::npos) continue;
      auto key = trim(line.substr(0, sep));
      while (!key.empty() && (key.front() == '-' || key.front() == '*' || key.front() == '"')) key.erase(0, 1);
      while (!key.empty() && key.back() == '"') key.pop_back();
      bool exact = false;
      if (const auto* spec = match_field(schema, trim(key), exact)) {
        raw[spec->name] = std::string(line.substr(sep + 1));
        parsed = true;
      }
    }
  }
  if (!parsed) throw ParseFailure("presence output is neither a JSON map nor field lines", text);

  PresenceMap out;
  out.warnings = std::move(warnings);
  for (const auto& f : schema.fields()) {
    auto it = raw.find(f.name);
    if (it == raw.end()) {
      out.warnings.push_back("missing presence verdict for " + f.name + "; treated as MAYBE");
      out.verdicts[f.name] = Presence::Maybe;
      continue;
    }
    if (auto p = presence_token(it->second)) {
      out.verdicts[f.name] = *p;
    } else {
      out.warnings.push_back("unrecognized presence token '" + excerpt(trim(it->second), 40) + "' for " + f.name +
                             "; treated as MAYBE");
      out.verdicts[f.name] = Presence::Maybe;
    }
  }
  return out;
}

Verdict parse_verdict(std::string_view text, Strictness strictness, const ParserOptions& options) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto lower = to_lower_ascii(lines[li]);
    std::optional<Decision> decision;
    std::size_t token_end = 0;
    std::size_t best = std::string::npos;
    for (const auto& [tok, d] : {std::pair<std::string_view, Decision>{"accept", Decision::Accept},
                                 {"accepted", Decision::Accept},
                                 {"reject", Decision::Reject},
                                 {"rejected", Decision::Reject}}) {
      for (auto p = lower.find(tok); p != std::string::npos; p = lower.find(tok, p + 1)) {
        const bool left_ok = p == 0 || !is_word_char(lower[p - 1]);
        const auto e = p + tok.size();
        const bool right_ok = e >= lower.size() || !is_word_char(lower[e]);
        if (left_ok && right_ok) {
          if (p < best) {
            best = p;
            decision = d;
            token_end = e;
          }
          break;
        }
      }
    }
    if (!decision) continue;

    Verdict v;
    v.decision = *decision;
    auto rest = trim(lines[li].substr(token_end));
    // Drop leading separators such as ":", ",", "-" or an em dash.
    while (!rest.empty()) {
      const auto c = static_cast<unsigned char>(rest.front());
      if (c == ':' || c == ',' || c == '-' || c == '.' || c == ';' || c == ' ') {
        rest.erase(0, 1);
      } else if (rest.rfind("\xE2\x80\x94", 0) == 0 || rest.rfind("\xE2\x80\x93", 0) == 0) {
        rest.erase(0, 3);
      } else {
        break;
      }
    }
    if (rest.empty()) {
      for (std::size_t k = li + 1; k < lines.size(); ++k) {
        if (auto t = trim(lines[k]); !t.empty()) {
          rest = t;
          break;
        }
      }
    }
    if (!rest.empty()) v.rationale = rest;

    if (strictness == Strictness::Stringent && v.decision == Decision::Accept) {
      for (const auto& w : words_lower(text)) {
        if (options.qualifier_lexicon.contains(w)) {
          v.decision = Decision::Reject;
          v.qualifier_flagged = true;
          break;
        }
      }
    }
    return v;
  }
  throw ParseFailure("verdict contains neither ACCEPT nor REJECT", text);
}

json record_to_json(const ExtractionRecord& record) {
  json values = json::object();
  for (const auto& [k, v] : record.values) values[k] = v ? json(*v) : json(nullptr);
  return {{"chunk_id", record.chunk_id},
          {"model", record.model_name},
          {"method", record.method},
          {"values", std::move(values)},
          {"warnings", record.warnings},
          {"notes", record.notes}};
}

ExtractionRecord record_from_json(const json& j) {
  ExtractionRecord r;
  r.chunk_id = j.at("chunk_id").get<std::string>();
  r.model_name = j.at("model").get<std::string>();
  r.method = j.at("method").get<std::string>();
  for (const auto& [k, v] : j.at("values").items()) {
    r.values[k] = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.notes = j.value("notes", std::vector<std::string>{});
  return r;
}

}  // namespace hydroie
