#include "hydroie/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

namespace hydroie {

namespace {

struct UnitSynonym {
  std::string_view phrase;
  std::string_view canonical;
};

// Longest phrases first so "acre feet" wins over "af"-style prefixes.
constexpr UnitSynonym kUnitSynonyms[] = {
    {"cubic feet per second", "cfs"}, {"cubic foot per second", "cfs"}, {"megawatt-hours", "MWh"},
    {"megawatt hours", "MWh"},        {"megawatt-hour", "MWh"},         {"megawatt hour", "MWh"},
    {"acre-feet", "acre-feet"},       {"acre-foot", "acre-feet"},       {"acre feet", "acre-feet"},
    {"acre foot", "acre-feet"},       {"megawatts", "MW"},              {"megawatt", "MW"},
    {"cu ft/s", "cfs"},               {"ac-ft", "acre-feet"},           {"ft3/s", "cfs"},
    {"feet", "ft"},                   {"foot", "ft"},                   {"cfs", "cfs"},
    {"mwh", "MWh"},                   {"ft.", "ft"},                    {"ft", "ft"},
    {"mw", "MW"},                     {"af", "acre-feet"},
};

const std::set<std::string>& stopwords() {
  static const std::set<std::string> s = {"the", "a", "an", "of", "project"};
  return s;
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Lowercase, collapse whitespace, drop commas that separate digit groups.
std::string basic_normalize(std::string_view raw) {
  std::string lower;
  bool space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !lower.empty()) lower.push_back(' ');
    space = false;
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::string out;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (lower[i] == ',' && i > 0 && is_digit(lower[i - 1]) && i + 3 < lower.size() && is_digit(lower[i + 1]) &&
        is_digit(lower[i + 2]) && is_digit(lower[i + 3]) && (i + 4 == lower.size() || !is_digit(lower[i + 4]))) {
      continue;
    }
    out.push_back(lower[i]);
  }
  return out;
}

std::vector<std::string> text_tokens(std::string_view normalized) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords().contains(cur)) out.push_back(cur);
    cur.clear();
  };
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    const char c = normalized[i];
    const auto u = static_cast<unsigned char>(c);
    const bool decimal_point = c == '.' && !cur.empty() && is_digit(cur.back()) && i + 1 < normalized.size() &&
                               is_digit(normalized[i + 1]);
    if (std::isalnum(u) || u >= 0x80 || decimal_point) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

bool contiguous_subsequence(const std::vector<std::string>& needle, const std::vector<std::string>& hay) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

bool numbers_equal(double a, double b, double rel_tol) {
  if (a == b) return true;
  if (rel_tol <= 0.0) return false;
  return std::fabs(a - b) <= rel_tol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

std::optional<std::string> canonical_unit(std::string_view phrase) {
  const auto p = trim(to_lower_ascii(phrase));
  for (const auto& s : kUnitSynonyms) {
    if (p == s.phrase) return std::string(s.canonical);
  }
  return std::nullopt;
}

NormalizedValue normalize_value(std::string_view raw, const FieldSpec& field) {
  NormalizedValue v;
  const auto norm = basic_normalize(raw);
  v.tokens = text_tokens(norm);
  if (field.value_kind != ValueKind::NumericQuantity) return v;

  // First number: optional sign, digits, optional fraction.
  std::size_t i = 0;
  for (; i < norm.size(); ++i) {
    if (is_digit(norm[i]) || (norm[i] == '.' && i + 1 < norm.size() && is_digit(norm[i + 1]))) break;
  }
  if (i == norm.size()) {
    v.fallback = true;
    return v;
  }
  std::size_t b = i;
  if (b > 0 && (norm[b - 1] == '-' || norm[b - 1] == '+') && (b == 1 || !std::isalnum(static_cast<unsigned char>(norm[b - 2])))) {
    --b;
  }
  std::size_t e = i;
  while (e < norm.size() && is_digit(norm[e])) ++e;
  if (e < norm.size() && norm[e] == '.' && e + 1 < norm.size() && is_digit(norm[e + 1])) {
    ++e;
    while (e < norm.size() && is_digit(norm[e])) ++e;
  } else if (i < norm.size() && norm[i] == '.') {
    e = i + 1;
    while (e < norm.size() && is_digit(norm[e])) ++e;
  }
  const std::string num_text = norm.substr(b, e - b);
  double number = 0.0;
  const char* first = num_text.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, num_text.data() + num_text.size(), number);
  if (ec != std::errc() || ptr != num_text.data() + num_text.size()) {
    v.fallback = true;
    return v;
  }
  v.numeric = true;
  v.number = number;

  std::string_view rest = std::string_view(norm).substr(e);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty()) return v;
  for (const auto& s : kUnitSynonyms) {
    if (rest.substr(0, s.phrase.size()) != s.phrase) continue;
    const auto after = s.phrase.size();
    if (after < rest.size() && std::isalnum(static_cast<unsigned char>(rest[after]))) continue;
    v.unit = std::string(s.canonical);
    v.unit_surface = std::string(s.phrase);
    return v;
  }
  // Unknown unit word: keep it verbatim so different unknown units differ.
  std::size_t w = 0;
  while (w < rest.size() && rest[w] != ' ' && rest[w] != ',' && rest[w] != ';' && rest[w] != ')') ++w;
  auto word = std::string(rest.substr(0, w));
  while (!word.empty() && (word.back() == '.' || word.back() == ':')) word.pop_back();
  if (!word.empty() && std::any_of(word.begin(), word.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) {
    v.unit = word;
    v.unit_surface = word;
  }
  return v;
}

std::string_view to_string(MatchReason r) {
  switch (r) {
    case MatchReason::Exact: return "exact";
    case MatchReason::NormalizedNumeric: return "normalized_numeric";
    case MatchReason::UnitSynonym: return "unit_synonym";
    case MatchReason::TokenEquivalent: return "token_equivalent";
    case MatchReason::NoMatch: return "no_match";
  }
  return "no_match";
}

MatchDecision semantic_match(const FieldSpec& field, std::string_view predicted, std::string_view reference,
                             const MatchOptions& options) {
  if (trim(predicted) == trim(reference)) return {true, MatchReason::Exact};
  const auto a = normalize_value(predicted, field);
  const auto b = normalize_value(reference, field);
  if (a.numeric && b.numeric) {
    if (!numbers_equal(a.number, b.number, options.relative_tolerance)) return {false, MatchReason::NoMatch};
    if (a.unit && b.unit) {
      if (*a.unit != *b.unit) return {false, MatchReason::NoMatch};
      if (*a.unit_surface != *b.unit_surface) return {true, MatchReason::UnitSynonym};
    }
    return {true, MatchReason::NormalizedNumeric};
  }
  if (a.numeric != b.numeric && field.value_kind == ValueKind::NumericQuantity) {
    return {false, MatchReason::NoMatch};
  }
  if (a.tokens.empty() && b.tokens.empty()) {
    const bool same = basic_normalize(predicted) == basic_normalize(reference);
    return {same, same ? MatchReason::TokenEquivalent : MatchReason::NoMatch};
  }
  if (a.tokens == b.tokens || contiguous_subsequence(a.tokens, b.tokens) ||
      contiguous_subsequence(b.tokens, a.tokens)) {
    return {true, MatchReason::TokenEquivalent};
  }
  return {false, MatchReason::NoMatch};
}

std::string_view to_string(CellOutcome c) {
  switch (c) {
    case CellOutcome::TP: return "TP";
    case CellOutcome::FP: return "FP";
    case CellOutcome::FN: return "FN";
    case CellOutcome::TN: return "TN";
  }
  return "?";
}

CellOutcome score_cell(const FieldSpec& field, const std::optional<std::string>& predicted,
                       const std::optional<std::string>& reference, const MatchOptions& options) {
  if (predicted && reference) {
    return semantic_match(field, *predicted, *reference, options).is_match ? CellOutcome::TP : CellOutcome::FP;
  }
  if (predicted) return CellOutcome::FP;
  if (reference) return CellOutcome::FN;
  return CellOutcome::TN;
}

void ConfusionCounts::add(CellOutcome c) {
  switch (c) {
    case CellOutcome::TP: ++tp; break;
    case CellOutcome::FP: ++fp; break;
    case CellOutcome::FN: ++fn; break;
    case CellOutcome::TN: ++tn; break;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

std::optional<double> f1_from(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall) return std::nullopt;
  const double sum = *precision + *recall;
  // 2pr/(p+r) <= 2 min(p, r), so the limit at p = r = 0 is 0.
  if (sum == 0.0) return 0.0;
  return 2.0 * *precision * *recall / sum;
}

MetricBlock aggregate(const ConfusionCounts& c) {
  MetricBlock m;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = f1_from(m.precision, m.recall);
  return m;
}

std::map<Category, CategoryEval> category_rollup(const std::map<std::string, FieldEval>& per_field,
                                                 const Schema& schema) {
  std::map<Category, CategoryEval> out;
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
    void add(const std::optional<double>& v) {
      if (v) {
        sum += *v;
        ++n;
      }
    }
    std::optional<double> mean() const {
      return n == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(n));
    }
  };
  std::map<Category, std::array<Acc, 3>> acc;
  for (const auto& spec : schema.fields()) {
    auto& ce = out[spec.category];
    ++ce.member_fields;
    auto it = per_field.find(spec.name);
    if (it == per_field.end()) continue;
    ce.counts += it->second.counts;
    auto& a = acc[spec.category];
    a[0].add(it->second.metrics.precision);
    a[1].add(it->second.metrics.recall);
    a[2].add(it->second.metrics.f1);
  }
  for (auto& [cat, ce] : out) {
    const auto& a = acc[cat];
    ce.metrics.precision = a[0].mean();
    ce.metrics.recall = a[1].mean();
    ce.metrics.f1 = a[2].mean();
    ce.defined_f1_fields = a[2].n;
  }
  return out;
}

std::optional<double> rejection_rate(const std::vector<ValidationOutcome>& outcomes) {
  std::size_t rejected = 0;
  std::size_t candidates = 0;
  for (const auto& o : outcomes) {
    rejected += o.rejected_count;
    candidates += o.candidate_count;
  }
  if (candidates == 0) return std::nullopt;
  return static_cast<double>(rejected) / static_cast<double>(candidates);
}

std::string_view to_string(TargetBand b) {
  switch (b) {
    case TargetBand::InBand: return "in_band";
    case TargetBand::Below: return "below";
    case TargetBand::Above: return "above";
  }
  return "?";
}

TargetBand target_band(double rate_percent) {
  if (rate_percent < kTargetBandLow) return TargetBand::Below;
  if (rate_percent > kTargetBandHigh) return TargetBand::Above;
  return TargetBand::InBand;
}

std::string achievement_label(std::optional<double> lenient_pct, std::optional<double> moderate_pct,
                              std::optional<double> stringent_pct) {
  const std::array<std::pair<const char*, std::optional<double>>, 3> rates = {
      {{"Lenient", lenient_pct}, {"Moderate", moderate_pct}, {"Stringent", stringent_pct}}};
  std::vector<std::string> in_band;
  std::size_t defined = 0, below = 0, above = 0;
  double lo = 1e300, hi = -1e300;
  for (const auto& [name, r] : rates) {
    if (!r) continue;
    ++defined;
    lo = std::min(lo, *r);
    hi = std::max(hi, *r);
    switch (target_band(*r)) {
      case TargetBand::InBand: in_band.emplace_back(name); break;
      case TargetBand::Below: ++below; break;
      case TargetBand::Above: ++above; break;
    }
  }
  if (defined == 0) return "—";
  if (in_band.size() == 1) return in_band.front() + " only";
  if (!in_band.empty()) {
    std::string out;
    for (const auto& n : in_band) out += (out.empty() ? "" : " + ") + n;
    return out;
  }
  if (defined > 1 && hi - lo < 0.5) return "None (convergence)";
  if (below == defined) return "None (low rejection)";
  if (above == defined) return "None (high rejection)";
  return "None";
}

std::vector<std::string> HallucinationFlags::labels() const {
  std::vector<std::string> out;
  if (perfect_recall) out.emplace_back("PERFECT_RECALL");
  if (over_extraction) out.emplace_back("OVER_EXTRACTION");
  return out;
}

namespace {

std::pair<bool, bool> flags_for(const ConfusionCounts& c) {
  const auto m = aggregate(c);
  const bool perfect = m.recall && *m.recall >= kPerfectRecallThreshold && m.precision &&
                       *m.precision < kPerfectRecallPrecisionGate;
  const double frac = c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.fp) / static_cast<double>(c.total());
  return {perfect, c.total() > 0 && frac >= kOverExtractionThreshold};
}

}  // namespace

HallucinationFlags hallucination_signature(const EvalReport& report) {
  HallucinationFlags f;
  const auto& c = report.overall_counts;
  std::tie(f.perfect_recall, f.over_extraction) = flags_for(c);
  f.predicted_present_fraction =
      c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.fp) / static_cast<double>(c.total());
  for (const auto& [cat, ce] : report.per_category) f.per_category[cat] = flags_for(ce.counts);
  return f;
}

EvalReport evaluate_records(const std::string& model, const std::string& method,
                            const std::vector<ExtractionRecord>& records, const BronzeStandard& reference,
                            const Schema& schema, const MatchOptions& options) {
  EvalReport report;
  report.model = model;
  report.method = method;
  std::map<std::string, const ExtractionRecord*> by_chunk;
  for (const auto& r : records) by_chunk[r.chunk_id] = &r;
  std::set<std::string> referenced;

  for (const auto& spec : schema.fields()) report.per_field[spec.name];
  for (const auto& ann : reference.annotations) {
    referenced.insert(ann.chunk_id);
    const auto it = by_chunk.find(ann.chunk_id);
    const ExtractionRecord* rec = it == by_chunk.end() ? nullptr : it->second;
    if (rec == nullptr) report.warnings.push_back("no record for chunk " + ann.chunk_id + "; scored as all absent");
    ++report.scored_chunks;
    for (const auto& spec : schema.fields()) {
      std::optional<std::string> pred;
      if (rec != nullptr) {
        if (auto v = rec->values.find(spec.name); v != rec->values.end()) pred = v->second;
      }
      std::optional<std::string> ref;
      if (auto v = ann.values.find(spec.name); v != ann.values.end()) ref = v->second;
      report.per_field[spec.name].counts.add(score_cell(spec, pred, ref, options));
    }
  }
  for (const auto& r : records) {
    if (!referenced.contains(r.chunk_id)) {
      report.warnings.push_back("record for chunk " + r.chunk_id + " has no reference annotation; ignored");
    }
  }
  for (auto& [name, fe] : report.per_field) {
    fe.metrics = aggregate(fe.counts);
    report.overall_counts += fe.counts;
  }
  report.overall = aggregate(report.overall_counts);
  report.per_category = category_rollup(report.per_field, schema);
  report.flags = hallucination_signature(report);
  return report;
}

void attach_rejection(EvalReport& report, Strictness strictness, const std::vector<ValidationOutcome>& outcomes) {
  RejectionSummary s;
  s.strictness = strictness;
  for (const auto& o : outcomes) {
    s.candidates += o.candidate_count;
    s.rejected += o.rejected_count;
    s.unparseable += o.unparseable_count;
  }
  s.rate = rejection_rate(outcomes);
  if (s.rate) s.band = target_band(*s.rate * 100.0);
  report.rejection = s;
}

std::string fmt_metric(const std::optional<double>& v) { return v ? fmt3(*v) : "—"; }

json metric_to_json(const MetricBlock& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"precision", opt(m.precision)}, {"recall", opt(m.recall)}, {"f1", opt(m.f1)}};
}

namespace {

json counts_to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

}  // namespace

json eval_report_to_json(const EvalReport& r) {
  json fields = json::object();
  for (const auto& [name, fe] : r.per_field) {
    fields[name] = {{"counts", counts_to_json(fe.counts)}, {"metrics", metric_to_json(fe.metrics)}};
  }
  json cats = json::object();
  for (const auto& [cat, ce] : r.per_category) {
    cats[std::string(to_string(cat))] = {{"metrics", metric_to_json(ce.metrics)},
                                         {"member_fields", ce.member_fields},
                                         {"defined_f1_fields", ce.defined_f1_fields},
                                         {"counts", counts_to_json(ce.counts)}};
  }
  json flags = {{"labels", r.flags.labels()},
                {"predicted_present_fraction", r.flags.predicted_present_fraction}};
  json per_cat_flags = json::object();
  for (const auto& [cat, f] : r.flags.per_category) {
    json labels = json::array();
    if (f.first) labels.push_back("PERFECT_RECALL");
    if (f.second) labels.push_back("OVER_EXTRACTION");
    per_cat_flags[std::string(to_string(cat))] = std::move(labels);
  }
  flags["per_category"] = std::move(per_cat_flags);
  json j = {{"model", r.model},
            {"method", r.method},
            {"scored_chunks", r.scored_chunks},
            {"per_field", std::move(fields)},
            {"per_category", std::move(cats)},
            {"overall", {{"counts", counts_to_json(r.overall_counts)}, {"metrics", metric_to_json(r.overall)}}},
            {"flags", std::move(flags)},
            {"warnings", r.warnings}};
  if (r.rejection) {
    const auto& s = *r.rejection;
    j["rejection"] = {{"strictness", to_string(s.strictness)},
                      {"rate", s.rate ? json(*s.rate) : json(nullptr)},
                      {"band", s.band ? json(to_string(*s.band)) : json(nullptr)},
                      {"candidates", s.candidates},
                      {"rejected", s.rejected},
                      {"unparseable", s.unparseable}};
  }
  return j;
}

std::string eval_reports_to_csv(const std::vector<EvalReport>& reports) {
  std::string out = "model,method,scope,name,precision,recall,f1,tp,fp,fn,tn\n";
  auto num = [](const std::optional<double>& v) { return v ? fmt3(*v) : std::string(); };
  auto row = [&](const EvalReport& r, std::string_view scope, std::string_view name, const MetricBlock& m,
                 const ConfusionCounts& c) {
    out += r.model + "," + r.method + "," + std::string(scope) + "," + std::string(name) + "," + num(m.precision) +
           "," + num(m.recall) + "," + num(m.f1) + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
           std::to_string(c.fn) + "," + std::to_string(c.tn) + "\n";
  };
  for (const auto& r : reports) {
    row(r, "overall", "overall", r.overall, r.overall_counts);
    for (const auto& [cat, ce] : r.per_category) row(r, "category", to_string(cat), ce.metrics, ce.counts);
    for (const auto& [name, fe] : r.per_field) row(r, "field", name, fe.metrics, fe.counts);
  }
  return out;
}

}  // namespace hydroie
