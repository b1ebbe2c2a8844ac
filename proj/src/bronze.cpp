#include "hydroie/bronze.hpp"

#include "hydroie/backends.hpp"
#include "hydroie/parallel.hpp"

namespace hydroie {

void BronzeStandard::recompute_coverage() {
  coverage_stats.clear();
  for (const auto& a : annotations) {
    for (const auto& [field, value] : a.values) {
      auto& n = coverage_stats[field];
      if (value) ++n;
    }
  }
}

const BronzeAnnotation* BronzeStandard::find(std::string_view chunk_id) const {
  for (const auto& a : annotations) {
    if (a.chunk_id == chunk_id) return &a;
  }
  return nullptr;
}

std::size_t BronzeStandard::error_count() const {
  std::size_t n = 0;
  for (const auto& a : annotations) n += a.errors.size();
  return n;
}

namespace {

struct Cell {
  std::optional<std::string> value;
  std::optional<std::string> error;
};

Cell judge_cell(const DocumentChunk& chunk, const FieldSpec& field, Gateway& judge, const std::string& judge_model,
                Conservatism conservatism, const BronzeOptions& options) {
  const auto bundle = bronze_judge_prompt(chunk, field, conservatism);
  const auto request = GenerationRequest::from_bundle(bundle, judge_model, options.max_tokens);
  std::string text;
  try {
    text = judge.complete(request).text;
  } catch (const TransportError& e) {
    return {std::nullopt, std::string("transport: ") + e.what()};
  } catch (const ScriptError& e) {
    return {std::nullopt, std::string("transport: ") + e.what()};
  }
  try {
    const auto obj = recover_json(text);
    const json* value = nullptr;
    for (const auto& [key, v] : obj.items()) {
      if (fold_key(key) == fold_key(field.name)) {
        value = &v;
        break;
      }
    }
    if (value == nullptr && obj.size() == 1) value = &obj.begin().value();
    if (value == nullptr) return {std::nullopt, "parse: judge answer lacks key " + field.name};
    std::vector<std::string> ignored;
    return {normalize_json_value(*value, field.name, ignored, options.parser), std::nullopt};
  } catch (const ParseFailure& e) {
    return {std::nullopt, std::string("parse: ") + e.what() + " [" + e.text_excerpt() + "]"};
  }
}

}  // namespace

BronzeStandard generate_bronze(const Corpus& corpus, const Schema& schema, Gateway& judge,
                               const std::string& judge_model, Conservatism conservatism,
                               const BronzeOptions& options) {
  const auto& fields = schema.fields();
  const auto n_fields = fields.size();
  std::vector<Cell> cells(corpus.chunks.size() * n_fields);
  parallel_for(cells.size(), options.concurrency, [&](std::size_t i) {
    cells[i] = judge_cell(corpus.chunks[i / n_fields], fields[i % n_fields], judge, judge_model, conservatism,
                          options);
  });

  BronzeStandard standard;
  standard.judge_model = judge_model;
  standard.conservatism = conservatism;
  for (std::size_t c = 0; c < corpus.chunks.size(); ++c) {
    BronzeAnnotation a;
    a.chunk_id = corpus.chunks[c].chunk_id;
    a.judge_model = judge_model;
    a.prompt_version = standard.prompt_version;
    for (std::size_t f = 0; f < n_fields; ++f) {
      auto& cell = cells[c * n_fields + f];
      a.values[fields[f].name] = std::move(cell.value);
      if (cell.error) a.errors[fields[f].name] = std::move(*cell.error);
    }
    standard.annotations.push_back(std::move(a));
  }
  standard.recompute_coverage();
  return standard;
}

CoverageReport bronze_coverage_report(const BronzeStandard& standard, const Schema& schema) {
  CoverageReport report;
  report.chunk_count = standard.annotations.size();
  std::map<Category, std::vector<double>> by_cat;
  for (const auto& spec : schema.fields()) {
    FieldCoverage fc;
    fc.field = spec.name;
    for (const auto& a : standard.annotations) {
      auto it = a.values.find(spec.name);
      if (it != a.values.end() && it->second) ++fc.positives;
    }
    fc.rate = report.chunk_count == 0 ? 0.0
                                      : static_cast<double>(fc.positives) / static_cast<double>(report.chunk_count);
    fc.zero_positive = fc.positives == 0;
    by_cat[spec.category].push_back(fc.rate);
    report.fields.push_back(std::move(fc));
  }
  for (const auto& [cat, rates] : by_cat) {
    double sum = 0.0;
    for (double r : rates) sum += r;
    report.category_rate[cat] = sum / static_cast<double>(rates.size());
  }
  return report;
}

std::string CoverageReport::render() const {
  std::string out = "Bronze coverage over " + std::to_string(chunk_count) + " chunks\n";
  for (const auto& f : fields) {
    out += "  " + f.field + ": " + std::to_string(f.positives) + " (" + fmt3(f.rate) + ")";
    if (f.zero_positive) out += "  [no positives: field cannot be compared]";
    out += "\n";
  }
  for (const auto& [cat, rate] : category_rate) {
    out += "  category " + std::string(to_string(cat)) + ": " + fmt3(rate) + "\n";
  }
  return out;
}

json bronze_to_json(const BronzeStandard& standard) {
  json anns = json::array();
  for (const auto& a : standard.annotations) {
    json values = json::object();
    for (const auto& [k, v] : a.values) values[k] = v ? json(*v) : json(nullptr);
    json e = {{"chunk_id", a.chunk_id},
              {"judge_model", a.judge_model},
              {"prompt_version", a.prompt_version},
              {"values", std::move(values)}};
    if (!a.errors.empty()) e["errors"] = a.errors;
    anns.push_back(std::move(e));
  }
  return {{"format_version", 1},
          {"judge_model", standard.judge_model},
          {"prompt_version", standard.prompt_version},
          {"conservatism", to_string(standard.conservatism)},
          {"annotations", std::move(anns)},
          {"coverage_stats", standard.coverage_stats}};
}

BronzeStandard bronze_from_json(const json& j, const Schema& schema) {
  try {
    if (j.at("format_version").get<int>() != 1) throw InputError("unsupported bronze format_version");
    BronzeStandard s;
    s.judge_model = j.at("judge_model").get<std::string>();
    s.prompt_version = j.value("prompt_version", std::string(kPromptVersion));
    s.conservatism = parse_conservatism(j.value("conservatism", "strict"));
    for (const auto& e : j.at("annotations")) {
      BronzeAnnotation a;
      a.chunk_id = e.at("chunk_id").get<std::string>();
      a.judge_model = e.value("judge_model", s.judge_model);
      a.prompt_version = e.value("prompt_version", s.prompt_version);
      for (const auto& f : schema.fields()) a.values[f.name] = std::nullopt;
      for (const auto& [k, v] : e.at("values").items()) {
        if (!schema.find(k)) throw InputError("bronze annotation has unknown field " + k);
        if (!v.is_null()) {
          auto text = trim(v.is_string() ? v.get<std::string>() : dump_compact(v));
          if (!text.empty()) a.values[k] = std::move(text);
        }
      }
      if (e.contains("errors")) a.errors = e.at("errors").get<std::map<std::string, std::string>>();
      s.annotations.push_back(std::move(a));
    }
    s.recompute_coverage();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed bronze file: ") + e.what());
  }
}

}  // namespace hydroie
