#include "hydroie/baseline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace hydroie {

namespace {

bool is_alnum(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

// Word-boundary phrase search in an already lowercased haystack.
std::size_t find_phrase(std::string_view hay, std::string_view phrase, std::size_t from = 0) {
  for (auto p = hay.find(phrase, from); p != std::string_view::npos; p = hay.find(phrase, p + 1)) {
    const bool left = p == 0 || !is_alnum(hay[p - 1]) || !is_alnum(phrase.front());
    const auto e = p + phrase.size();
    const bool right = e >= hay.size() || !is_alnum(hay[e]) || !is_alnum(phrase.back());
    if (left && right) return p;
  }
  return std::string_view::npos;
}

struct Token {
  std::string raw;
  std::string core;   // punctuation-trimmed
  std::string lower;  // lowercased core
};

std::vector<Token> tokens_of(std::string_view sentence) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    const auto b = i;
    while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    if (i == b) break;
    Token t;
    t.raw = std::string(sentence.substr(b, i - b));
    std::string_view core = t.raw;
    while (!core.empty() && std::string_view("(\"'[").find(core.front()) != std::string_view::npos) core.remove_prefix(1);
    while (!core.empty() && std::string_view(".,;:)\"']!?").find(core.back()) != std::string_view::npos) {
      core.remove_suffix(1);
    }
    t.core = std::string(core);
    t.lower = to_lower_ascii(core);
    out.push_back(std::move(t));
  }
  return out;
}

// Splits "1,000.5cfs" into ("1,000.5", "cfs").
std::optional<std::pair<std::string, std::string>> split_number(std::string_view core) {
  if (core.empty() || !std::isdigit(static_cast<unsigned char>(core.front()))) return std::nullopt;
  std::size_t i = 0;
  while (i < core.size() && (std::isdigit(static_cast<unsigned char>(core[i])) || core[i] == ',' || core[i] == '.')) {
    ++i;
  }
  auto num = core.substr(0, i);
  while (!num.empty() && (num.back() == ',' || num.back() == '.')) num.remove_suffix(1);
  return std::make_pair(std::string(num), std::string(core.substr(num.size())));
}

std::vector<std::string> split_words(std::string_view phrase) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < phrase.size()) {
    while (i < phrase.size() && phrase[i] == ' ') ++i;
    const auto b = i;
    while (i < phrase.size() && phrase[i] != ' ') ++i;
    if (i > b) out.emplace_back(phrase.substr(b, i - b));
  }
  return out;
}

std::optional<std::string> capture_number_unit(const PatternRule& rule, const std::vector<Token>& toks) {
  for (std::size_t i = 0; i < toks.size(); ++i) {
    auto num = split_number(toks[i].core);
    if (!num) continue;
    const auto& [digits, suffix] = *num;
    if (!suffix.empty()) {
      const auto lower_suffix = to_lower_ascii(suffix);
      for (const auto& unit : rule.units) {
        if (lower_suffix == unit) return toks[i].core;
      }
      continue;
    }
    for (const auto& unit : rule.units) {
      const auto words = split_words(unit);
      if (words.empty() || i + words.size() >= toks.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < words.size() && ok; ++k) {
        const auto& t = toks[i + 1 + k];
        // Only the last unit word may carry trailing punctuation.
        ok = (k + 1 == words.size() ? t.lower : to_lower_ascii(t.raw)) == words[k];
      }
      if (!ok) continue;
      std::string out = digits;
      for (std::size_t k = 0; k < words.size(); ++k) out += " " + toks[i + 1 + k].core;
      return out;
    }
  }
  return std::nullopt;
}

bool capitalized(const std::string& core) {
  return !core.empty() && std::isupper(static_cast<unsigned char>(core.front()));
}

std::optional<std::string> capture_name_before(const PatternRule& rule, const std::vector<Token>& toks) {
  static const std::set<std::string> kStop = {"The", "A", "An", "This", "That", "Said", "In", "On", "At", "Of",
                                              "For", "And", "Located", "Commission", "Licensee"};
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (std::find(rule.anchors.begin(), rule.anchors.end(), toks[i].core) == rule.anchors.end()) continue;
    std::size_t b = i;
    while (b > 0 && i - b < 4) {
      const auto& prev = toks[b - 1];
      // A name does not continue across a comma or other clause break.
      if (std::string_view(",;:.").find(prev.raw.back()) != std::string_view::npos) break;
      if (!capitalized(prev.core) || kStop.contains(prev.core)) break;
      --b;
    }
    if (b == i) continue;
    std::string out;
    const auto end = rule.include_anchor ? i + 1 : i;
    for (std::size_t k = b; k < end; ++k) {
      if (!out.empty()) out += " ";
      out += toks[k].core;
    }
    return out;
  }
  return std::nullopt;
}

std::string join_cores(const std::vector<Token>& toks, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t k = b; k < e; ++k) {
    if (!out.empty()) out += " ";
    out += (k + 1 == e) ? toks[k].core : toks[k].raw;
  }
  return out;
}

std::optional<std::string> capture_phrase_after(const PatternRule& rule, std::string_view sentence) {
  static const std::set<std::string> kFiller = {"is", "was", "are", "of", "the", "project", "project's", "to",
                                                "be", "for", "will", "on", "in", "at", "near", "as"};
  const auto lower = to_lower_ascii(sentence);
  for (const auto& cue : rule.cues) {
    const auto p = find_phrase(lower, cue);
    if (p == std::string::npos) continue;
    const auto toks = tokens_of(sentence.substr(p + cue.size()));
    std::size_t b = 0;
    while (b < toks.size() && kFiller.contains(toks[b].lower)) ++b;
    if (b >= toks.size()) continue;
    const auto e = std::min(toks.size(), b + rule.max_words);
    auto out = join_cores(toks, b, e);
    if (!out.empty()) return out;
  }
  return std::nullopt;
}

const std::set<std::string>& abbreviations() {
  static const std::set<std::string> a = {"no", "nos", "mr", "mrs", "ms", "dr", "st", "co", "inc", "approx",
                                          "el", "elev", "ft", "sec", "fig", "vs", "u.s", "e.g", "i.e", "p"};
  return a;
}

}  // namespace

std::string_view to_string(CaptureKind k) {
  switch (k) {
    case CaptureKind::NumberUnit: return "number_unit";
    case CaptureKind::NameBefore: return "name_before";
    case CaptureKind::PhraseAfter: return "phrase_after";
    case CaptureKind::Literal: return "literal";
    case CaptureKind::Sentence: return "sentence";
  }
  return "?";
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 2 >= text.size() || !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    const auto next = static_cast<unsigned char>(text[i + 2]);
    if (!(std::isupper(next) || std::isdigit(next) || next == '"' || next == '(')) continue;
    if (c == '.') {
      auto w = i;
      while (w > start && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
      auto word = to_lower_ascii(text.substr(w, i - w));
      while (!word.empty() && !std::isalpha(static_cast<unsigned char>(word.front()))) word.erase(0, 1);
      if (abbreviations().contains(word) || word.size() == 1) continue;
    }
    auto s = trim(text.substr(start, i + 1 - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = i + 1;
  }
  auto tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::optional<std::string> apply_rule(const PatternRule& rule, std::string_view sentence) {
  const auto lower = to_lower_ascii(sentence);
  for (const auto& group : rule.all_of) {
    const bool any = std::any_of(group.begin(), group.end(),
                                 [&](const std::string& p) { return find_phrase(lower, p) != std::string::npos; });
    if (!any) return std::nullopt;
  }
  for (const auto& p : rule.none_of) {
    if (find_phrase(lower, p) != std::string::npos) return std::nullopt;
  }
  switch (rule.capture) {
    case CaptureKind::NumberUnit: return capture_number_unit(rule, tokens_of(sentence));
    case CaptureKind::NameBefore: return capture_name_before(rule, tokens_of(sentence));
    case CaptureKind::PhraseAfter: return capture_phrase_after(rule, sentence);
    case CaptureKind::Literal: {
      std::size_t best = std::string::npos;
      std::size_t len = 0;
      for (const auto& p : rule.phrases) {
        const auto at = find_phrase(lower, p);
        if (at < best) {
          best = at;
          len = p.size();
        }
      }
      if (best == std::string::npos) return std::nullopt;
      return std::string(sentence.substr(best, len));
    }
    case CaptureKind::Sentence: {
      const auto toks = tokens_of(sentence);
      if (toks.empty()) return std::nullopt;
      return join_cores(toks, 0, std::min(toks.size(), rule.max_words));
    }
  }
  return std::nullopt;
}

ExtractionRecord extract_baseline(const DocumentChunk& chunk, const Schema& schema,
                                  const std::vector<FieldPattern>& patterns, const std::string& model_name) {
  auto record = empty_record(schema, {chunk.chunk_id, model_name, "single_step"});
  const auto sentences = split_sentences(chunk.text);
  for (const auto& fp : patterns) {
    auto it = record.values.find(fp.field_name);
    if (it == record.values.end()) continue;
    for (const auto& rule : fp.rules) {
      for (const auto& s : sentences) {
        if (auto v = apply_rule(rule, s); v && !trim(*v).empty()) {
          it->second = trim(*v);
          break;
        }
      }
      if (it->second) break;
    }
  }
  return record;
}

namespace {

const std::vector<std::string> kFlowUnits = {"cfs", "cubic feet per second", "cubic foot per second", "ft3/s"};
const std::vector<std::string> kFeetUnits = {"feet", "foot", "ft", "ft."};
const std::vector<std::string> kMwUnits = {"mw", "megawatts", "megawatt"};
const std::vector<std::string> kMwhUnits = {"mwh", "megawatt-hours", "megawatt-hour", "megawatt hours",
                                            "megawatt hour"};
const std::vector<std::string> kAcreFeetUnits = {"acre-feet", "acre-foot", "acre feet", "acre foot", "af", "ac-ft"};
const std::vector<std::string> kTempUnits = {"°f", "°c", "degrees fahrenheit", "degrees celsius", "degrees f",
                                             "degrees c", "degrees", "deg", "°"};

PatternRule number_rule(std::vector<std::vector<std::string>> all_of, std::vector<std::string> units,
                        std::vector<std::string> none_of = {}) {
  PatternRule r;
  r.all_of = std::move(all_of);
  r.units = std::move(units);
  r.none_of = std::move(none_of);
  r.capture = CaptureKind::NumberUnit;
  return r;
}

std::map<std::string, FieldPattern> builtin_table() {
  std::map<std::string, FieldPattern> t;
  auto add = [&](const std::string& field, std::vector<PatternRule> rules, std::optional<std::string> unit) {
    t[field] = FieldPattern{field, std::move(rules), std::move(unit)};
  };

  PatternRule dam;
  dam.capture = CaptureKind::NameBefore;
  dam.anchors = {"Dam", "Project"};
  dam.include_anchor = true;
  add("Dam_Name", {dam}, std::nullopt);

  PatternRule loc;
  loc.capture = CaptureKind::PhraseAfter;
  loc.cues = {"project is located", "is located", "located on", "located in", "located at", "located near"};
  add("Location", {loc}, std::nullopt);

  PatternRule county;
  county.capture = CaptureKind::NameBefore;
  county.all_of = {{"county", "counties"}};
  county.anchors = {"County", "Counties", "county", "counties"};
  add("County", {county}, std::nullopt);

  PatternRule purpose;
  purpose.capture = CaptureKind::PhraseAfter;
  purpose.cues = {"primary purpose", "principal purpose", "main purpose", "primarily used for", "operated primarily for"};
  purpose.max_words = 8;
  PatternRule purpose_lit;
  purpose_lit.capture = CaptureKind::Literal;
  purpose_lit.all_of = {{"purpose", "purposes", "used for", "operated for"}};
  purpose_lit.phrases = {"hydroelectric generation", "hydropower generation", "power generation", "flood control",
                         "irrigation", "recreation", "water supply", "navigation"};
  add("Primary_Purpose", {purpose, purpose_lit}, std::nullopt);

  add("Minimum_Flow",
      {number_rule({{"minimum flow", "minimum flows", "minimum instream flow", "minimum release",
                     "minimum streamflow", "minimum discharge", "minimum bypass flow"}},
                   kFlowUnits)},
      "cfs");
  add("Annual_Flow_Peak",
      {number_rule({{"peak flow", "annual peak", "peak discharge", "maximum flow", "maximum recorded flow",
                     "flood of record"}},
                   kFlowUnits, {"spillway", "minimum"})},
      "cfs");
  add("Annual_Flow_Mean",
      {number_rule({{"mean annual flow", "average annual flow", "annual mean flow", "average flow", "mean flow",
                     "average daily flow"}},
                   kFlowUnits, {"minimum"})},
      "cfs");
  add("Spillway_Maximum_Discharge_Flow",
      {number_rule({{"spillway", "spillways"}, {"capacity", "discharge", "pass", "passing"}}, kFlowUnits)}, "cfs");

  add("Maximum_Pool_Elevation",
      {number_rule({{"maximum pool", "maximum water surface", "maximum reservoir elevation", "maximum elevation",
                     "full pool"}},
                   kFeetUnits, {"normal maximum", "operating", "normal full pool"})},
      "ft");
  add("Normal_Maximum_Operating_Pool_Level",
      {number_rule({{"normal maximum", "normal pool", "normal full pool", "normal operating"}}, kFeetUnits)}, "ft");
  add("Maximum_Operating_Pool_Level",
      {number_rule({{"maximum operating"}}, kFeetUnits, {"normal maximum", "minimum"})}, "ft");
  add("Minimum_Pool_Elevation",
      {number_rule({{"minimum pool", "minimum operating", "minimum reservoir elevation", "minimum water surface",
                     "minimum elevation"}},
                   kFeetUnits, {"minimum flow"})},
      "ft");
  add("Power_Head", {number_rule({{"head", "gross head", "net head", "hydraulic head"}}, kFeetUnits)}, "ft");

  add("Power_Capacity",
      {number_rule({{"capacity", "installed", "generating", "rated", "nameplate"}}, kMwUnits, {"spillway"}),
       number_rule({{"unit", "units", "turbine", "turbines", "project", "plant", "powerhouse"}}, kMwUnits)},
      "MW");
  add("Energy_Output",
      {number_rule({{"annual", "average", "generation", "energy", "generate", "generates", "produce", "produces"}},
                   kMwhUnits)},
      "MWh");
  add("Usable_Storage_Volume",
      {number_rule({{"usable storage", "useable storage", "active storage", "usable capacity", "storage capacity"}},
                   kAcreFeetUnits),
       number_rule({{"storage"}}, kAcreFeetUnits, {"gross storage", "total storage", "dead storage"})},
      "acre-feet");

  PatternRule temp_sentence;
  temp_sentence.capture = CaptureKind::Sentence;
  temp_sentence.all_of = {{"water temperature", "stream temperature", "temperature"}};
  temp_sentence.max_words = 30;
  add("Stream_Temperature", {number_rule({{"temperature", "temperatures"}}, kTempUnits), temp_sentence},
      std::nullopt);
  return t;
}

std::vector<std::string> units_for(const std::optional<std::string>& unit) {
  if (!unit) return {};
  const auto u = to_lower_ascii(*unit);
  if (u == "cfs") return kFlowUnits;
  if (u == "ft" || u == "feet") return kFeetUnits;
  if (u == "mw") return kMwUnits;
  if (u == "mwh") return kMwhUnits;
  if (u == "acre-feet") return kAcreFeetUnits;
  return {u};
}

std::vector<std::string> json_strings(const json& j, const char* key) {
  return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
}

CaptureKind parse_capture(std::string_view s) {
  for (auto k : {CaptureKind::NumberUnit, CaptureKind::NameBefore, CaptureKind::PhraseAfter, CaptureKind::Literal,
                 CaptureKind::Sentence}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown capture kind: " + std::string(s));
}

}  // namespace

std::vector<FieldPattern> default_patterns(const Schema& schema) {
  const auto table = builtin_table();
  std::vector<FieldPattern> out;
  for (const auto& spec : schema.fields()) {
    if (auto it = table.find(spec.name); it != table.end()) {
      out.push_back(it->second);
      continue;
    }
    // Generic fallback keyed on the field name's words.
    std::string phrase;
    for (char c : spec.name) phrase.push_back(c == '_' ? ' ' : static_cast<char>(std::tolower(c)));
    PatternRule r;
    r.all_of = {{phrase}};
    if (spec.value_kind == ValueKind::NumericQuantity && spec.canonical_unit) {
      r.capture = CaptureKind::NumberUnit;
      r.units = units_for(spec.canonical_unit);
    } else {
      r.capture = CaptureKind::Sentence;
      r.max_words = 30;
    }
    out.push_back(FieldPattern{spec.name, {r}, spec.canonical_unit});
  }
  return out;
}

std::vector<FieldPattern> load_patterns(const json& manifest, const Schema& schema, std::vector<FieldPattern> base) {
  try {
    for (const auto& entry : manifest.at("patterns")) {
      FieldPattern fp;
      fp.field_name = entry.at("field").get<std::string>();
      if (!schema.find(fp.field_name)) throw ConfigError("pattern manifest references unknown field " + fp.field_name);
      if (entry.contains("unit_hint") && !entry.at("unit_hint").is_null()) {
        fp.unit_hint = entry.at("unit_hint").get<std::string>();
      }
      for (const auto& r : entry.at("rules")) {
        PatternRule rule;
        if (r.contains("all_of")) rule.all_of = r.at("all_of").get<std::vector<std::vector<std::string>>>();
        rule.none_of = json_strings(r, "none_of");
        rule.capture = parse_capture(r.value("capture", "number_unit"));
        rule.units = json_strings(r, "units");
        rule.anchors = json_strings(r, "anchors");
        rule.include_anchor = r.value("include_anchor", false);
        rule.cues = json_strings(r, "cues");
        rule.phrases = json_strings(r, "phrases");
        rule.max_words = r.value("max_words", rule.max_words);
        fp.rules.push_back(std::move(rule));
      }
      if (fp.rules.empty()) throw ConfigError("pattern manifest gives no rules for " + fp.field_name);
      auto it = std::find_if(base.begin(), base.end(), [&](const auto& b) { return b.field_name == fp.field_name; });
      if (it != base.end()) {
        *it = std::move(fp);
      } else {
        base.push_back(std::move(fp));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pattern manifest: ") + e.what());
  }
  return base;
}

json patterns_to_json(const std::vector<FieldPattern>& patterns) {
  json arr = json::array();
  for (const auto& fp : patterns) {
    json rules = json::array();
    for (const auto& r : fp.rules) {
      rules.push_back({{"all_of", r.all_of},
                       {"none_of", r.none_of},
                       {"capture", to_string(r.capture)},
                       {"units", r.units},
                       {"anchors", r.anchors},
                       {"include_anchor", r.include_anchor},
                       {"cues", r.cues},
                       {"phrases", r.phrases},
                       {"max_words", r.max_words}});
    }
    arr.push_back({{"field", fp.field_name},
                   {"unit_hint", fp.unit_hint ? json(*fp.unit_hint) : json(nullptr)},
                   {"rules", std::move(rules)}});
  }
  return {{"patterns", std::move(arr)}};
}

}  // namespace hydroie
