#include "hydroie/experiment.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include "hydroie/baseline.hpp"
#include "hydroie/parallel.hpp"

namespace hydroie {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.is_absolute() || base.empty()) return p;
  return base / p;
}

ModelConfig model_from_json(const json& j, const fs::path& base_dir) {
  ModelConfig m;
  m.name = j.at("name").get<std::string>();
  if (m.name.empty()) throw ConfigError("model name must not be empty");
  m.backend = backend_config_from_json(j.at("backend"));
  if (m.backend.script_path) m.backend.script_path = resolve(*m.backend.script_path, base_dir).string();
  return m;
}

json model_to_json(const ModelConfig& m) { return {{"name", m.name}, {"backend", backend_config_to_json(m.backend)}}; }

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<FieldPattern> baseline_patterns(const ExperimentConfig& config, const Schema& schema) {
  auto patterns = default_patterns(schema);
  if (config.patterns) {
    patterns = load_patterns(json::parse(read_file(*config.patterns)), schema, std::move(patterns));
  }
  return patterns;
}

// Keeps an existing result file only when it is complete and covers exactly
// the current chunks.
bool reusable(const fs::path& file, const ModelConfig& model, MethodId method, const Corpus& corpus) {
  std::error_code ec;
  if (!fs::exists(file, ec)) return false;
  try {
    const auto r = pair_result_from_json(json::parse(read_file(file)));
    if (r.model != model.name || r.method != method || !r.complete()) return false;
    if (r.records.size() != corpus.chunks.size()) return false;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      if (r.records[i].chunk_id != corpus.chunks[i].chunk_id) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

PairResult run_pair(const ExperimentConfig& config, const ModelConfig& model, MethodId method, const Corpus& corpus,
                    const Schema& schema, Gateway* gateway) {
  PairResult result;
  result.model = model.name;
  result.method = method;
  const auto n = corpus.chunks.size();
  std::vector<std::optional<MethodResult>> slots(n);
  std::vector<std::optional<std::string>> errors(n);

  if (model.backend.kind == BackendKind::Baseline) {
    const auto patterns = baseline_patterns(config, schema);
    for (std::size_t i = 0; i < n; ++i) {
      slots[i] = MethodResult{extract_baseline(corpus.chunks[i], schema, patterns, model.name), std::nullopt};
    }
  } else {
    PipelineOptions popts;
    popts.extraction_max_tokens = config.extraction_max_tokens;
    popts.validation_max_tokens = config.validation_max_tokens;
    popts.strict_parse = config.strict_parse;
    const std::string request_model = model.backend.model.value_or(model.name);
    parallel_for(n, config.concurrency, [&](std::size_t i) {
      PipelineContext ctx{*gateway, schema, model.name, request_model, popts};
      try {
        slots[i] = run_method(method, corpus.chunks[i], ctx);
      } catch (const PipelineError& e) {
        errors[i] = e.what();
      }
    });
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      result.failures.push_back({corpus.chunks[i].chunk_id, *errors[i]});
      continue;
    }
    result.records.push_back(std::move(slots[i]->record));
    if (slots[i]->outcome) result.outcomes.push_back(std::move(*slots[i]->outcome));
  }
  return result;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (corpus.empty()) throw ConfigError("config: corpus lists no documents");
  if (models.empty()) throw ConfigError("config: at least one model is required");
  if (methods.empty()) throw ConfigError("config: at least one method is required");
  if (concurrency == 0) throw ConfigError("config: concurrency must be at least 1");
  chunking.validate();
  std::set<std::string> names;
  std::set<std::string> files;
  for (const auto& m : models) {
    if (!names.insert(m.name).second) throw ConfigError("config: duplicate model name " + m.name);
    if (!files.insert(sanitize_name(m.name)).second) {
      throw ConfigError("config: model names collide after sanitizing: " + m.name);
    }
    m.backend.validate();
  }
  if (judge) {
    if (judge->backend.kind == BackendKind::Baseline) throw ConfigError("config: the judge needs a model backend");
    judge->backend.validate();
  }
}

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> known = {
      "corpus",      "chunking", "models",     "methods",      "judge",      "conservatism", "output_dir",
      "cache_dir",   "patterns", "concurrency", "max_tokens",  "strict_parse", "timestamps"};
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  ExperimentConfig c;
  try {
    if (!j.at("corpus").is_array()) throw ConfigError("config: corpus must be a list of paths");
    for (const auto& p : j.at("corpus")) c.corpus.push_back(resolve(p.get<std::string>(), base_dir));
    if (j.contains("chunking")) {
      const auto& ch = j.at("chunking");
      c.chunking.chunk_size_words = ch.value("chunk_size_words", c.chunking.chunk_size_words);
      c.chunking.overlap_words = ch.value("overlap_words", c.chunking.overlap_words);
    }
    for (const auto& m : j.at("models")) c.models.push_back(model_from_json(m, base_dir));
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    } else {
      c.methods.assign(kAllMethods.begin(), kAllMethods.end());
    }
    if (j.contains("judge") && !j.at("judge").is_null()) c.judge = model_from_json(j.at("judge"), base_dir);
    if (j.contains("conservatism")) c.conservatism = parse_conservatism(j.at("conservatism").get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null()) {
      c.cache_dir = resolve(j.at("cache_dir").get<std::string>(), base_dir);
    }
    if (j.contains("patterns") && !j.at("patterns").is_null()) {
      c.patterns = resolve(j.at("patterns").get<std::string>(), base_dir);
    }
    c.concurrency = j.value("concurrency", c.concurrency);
    if (j.contains("max_tokens")) {
      c.extraction_max_tokens = j.at("max_tokens").value("extraction", c.extraction_max_tokens);
      c.validation_max_tokens = j.at("max_tokens").value("validation", c.validation_max_tokens);
    }
    c.strict_parse = j.value("strict_parse", false);
    c.timestamps = j.value("timestamps", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json corpus = json::array();
  for (const auto& p : c.corpus) corpus.push_back(p.string());
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_to_json(m));
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  // Where outputs go and how fast they are produced do not change results,
  // so output_dir, cache_dir, concurrency and timestamps stay out of the
  // snapshot.
  return {{"corpus", std::move(corpus)},
          {"chunking", {{"chunk_size_words", c.chunking.chunk_size_words}, {"overlap_words", c.chunking.overlap_words}}},
          {"models", std::move(models)},
          {"methods", std::move(methods)},
          {"judge", c.judge ? model_to_json(*c.judge) : json(nullptr)},
          {"conservatism", to_string(c.conservatism)},
          {"patterns", c.patterns ? json(c.patterns->string()) : json(nullptr)},
          {"max_tokens", {{"extraction", c.extraction_max_tokens}, {"validation", c.validation_max_tokens}}},
          {"strict_parse", c.strict_parse}};
}

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(dump_compact(experiment_config_to_json(config)));
}

std::shared_ptr<Backend> make_backend(const ModelConfig& model) {
  switch (model.backend.kind) {
    case BackendKind::Http: return std::make_shared<HttpBackend>(model.backend);
    case BackendKind::Scripted: {
      if (!model.backend.script_path) return std::make_shared<ScriptedBackend>();
      json script;
      try {
        script = json::parse(read_file(*model.backend.script_path));
      } catch (const json::parse_error& e) {
        throw ConfigError("script " + *model.backend.script_path + ": " + e.what());
      }
      return ScriptedBackend::from_json(script);
    }
    case BackendKind::Baseline: break;
  }
  throw ConfigError("model " + model.name + " uses the pattern baseline and has no backend");
}

GatewayOptions gateway_options_for(const BackendConfig& backend, const std::optional<fs::path>& cache_dir) {
  GatewayOptions o;
  o.max_retries = backend.max_retries;
  o.max_in_flight = backend.max_in_flight;
  o.backoff_initial = std::chrono::milliseconds(backend.backoff_initial_ms);
  o.cache_dir = cache_dir;
  return o;
}

std::string sanitize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

fs::path result_path(const fs::path& output_dir, std::string_view model, MethodId method) {
  return output_dir / ("results_" + sanitize_name(model) + "_" + std::string(to_string(method)) + ".json");
}

fs::path corpus_path(const fs::path& output_dir) { return output_dir / "corpus.json"; }
fs::path bronze_path(const fs::path& output_dir) { return output_dir / "bronze.json"; }
fs::path manifest_path(const fs::path& output_dir) { return output_dir / "run_manifest.json"; }

json pair_result_to_json(const PairResult& r) {
  json records = json::array();
  for (const auto& rec : r.records) records.push_back(record_to_json(rec));
  json outcomes = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(outcome_to_json(o));
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"chunk_id", f.chunk_id}, {"error", f.error}});
  return {{"format_version", 1},
          {"tool_version", kToolVersion},
          {"model", r.model},
          {"method", to_string(r.method)},
          {"complete", r.complete()},
          {"records", std::move(records)},
          {"outcomes", std::move(outcomes)},
          {"failures", std::move(failures)}};
}

PairResult pair_result_from_json(const json& j) {
  if (j.at("format_version").get<int>() != 1) throw InputError("unsupported result format_version");
  PairResult r;
  r.model = j.at("model").get<std::string>();
  r.method = parse_method(j.at("method").get<std::string>());
  for (const auto& rec : j.at("records")) r.records.push_back(record_from_json(rec));
  for (const auto& o : j.value("outcomes", json::array())) r.outcomes.push_back(outcome_from_json(o));
  for (const auto& f : j.value("failures", json::array())) {
    r.failures.push_back({f.at("chunk_id").get<std::string>(), f.at("error").get<std::string>()});
  }
  return r;
}

bool RunManifest::all_complete() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const PairStatus& p) { return p.complete; });
}

json manifest_to_json(const RunManifest& m, const fs::path& output_dir) {
  json pairs = json::array();
  for (const auto& p : m.pairs) {
    pairs.push_back({{"model", p.model},
                     {"method", to_string(p.method)},
                     {"file", fs::relative(p.file, output_dir).generic_string()},
                     {"complete", p.complete},
                     {"failed_chunks", p.failed_chunks}});
  }
  json j = {{"format_version", 1},
            {"tool_version", m.tool_version},
            {"config_hash", m.config_hash},
            {"pairs", std::move(pairs)}};
  if (m.started_at) j["started_at"] = *m.started_at;
  if (m.finished_at) j["finished_at"] = *m.finished_at;
  return j;
}

std::vector<std::pair<const ModelConfig*, MethodId>> matrix_pairs(const ExperimentConfig& config) {
  std::vector<std::pair<const ModelConfig*, MethodId>> out;
  for (const auto& model : config.models) {
    for (auto method : config.methods) {
      if (model.backend.kind == BackendKind::Baseline && method != MethodId::SingleStep) continue;
      out.emplace_back(&model, method);
    }
  }
  return out;
}

RunManifest run_matrix(const ExperimentConfig& config, const Corpus& corpus, const Schema& schema,
                       const MatrixOptions& options) {
  if (corpus.chunks.empty()) throw ConfigError("corpus has no chunks");
  const BackendFactory factory = options.backend_factory ? options.backend_factory : BackendFactory(make_backend);
  fs::create_directories(config.output_dir);

  RunManifest manifest;
  manifest.config_hash = config_hash(config);
  if (config.timestamps) manifest.started_at = utc_now();

  std::map<std::string, std::unique_ptr<Gateway>> gateways;
  std::size_t ran = 0;
  for (const auto& [model, method] : matrix_pairs(config)) {
    PairStatus status;
    status.model = model->name;
    status.method = method;
    status.file = result_path(config.output_dir, model->name, method);
    if (reusable(status.file, *model, method, corpus)) {
      status.complete = true;
      status.resumed = true;
    } else {
      if (options.stop_after && ran >= *options.stop_after) return manifest;
      Gateway* gateway = nullptr;
      if (model->backend.kind != BackendKind::Baseline) {
        auto& g = gateways[model->name];
        if (!g) g = std::make_unique<Gateway>(factory(*model), gateway_options_for(model->backend, config.cache_dir));
        gateway = g.get();
      }
      const auto result = run_pair(config, *model, method, corpus, schema, gateway);
      write_file_atomic(status.file, dump_pretty(pair_result_to_json(result)));
      status.complete = result.complete();
      status.failed_chunks = result.failures.size();
      ++ran;
    }
    if (options.on_pair) options.on_pair(status);
    manifest.pairs.push_back(std::move(status));
  }
  if (config.timestamps) manifest.finished_at = utc_now();
  write_file_atomic(manifest_path(config.output_dir), dump_pretty(manifest_to_json(manifest, config.output_dir)));
  return manifest;
}

BronzeStandard run_bronze(const ExperimentConfig& config, const Corpus& corpus, const Schema& schema,
                          const BackendFactory& factory) {
  if (!config.judge) throw ConfigError("config: no judge configured");
  const auto& judge = *config.judge;
  auto backend = factory ? factory(judge) : make_backend(judge);
  Gateway gateway(std::move(backend), gateway_options_for(judge.backend, config.cache_dir));
  BronzeOptions opts;
  opts.concurrency = config.concurrency;
  opts.max_tokens = config.validation_max_tokens;
  auto standard =
      generate_bronze(corpus, schema, gateway, judge.backend.model.value_or(judge.name), config.conservatism, opts);
  fs::create_directories(config.output_dir);
  write_file_atomic(bronze_path(config.output_dir), dump_pretty(bronze_to_json(standard)));
  write_file_atomic(config.output_dir / "bronze_coverage.txt", bronze_coverage_report(standard, schema).render());
  return standard;
}

const EvalReport* MatrixEvaluation::find(std::string_view model, MethodId method) const {
  const auto m = to_string(method);
  for (const auto& r : reports) {
    if (r.model == model && r.method == m) return &r;
  }
  return nullptr;
}

MatrixEvaluation evaluate_matrix(const ExperimentConfig& config, const BronzeStandard& bronze, const Schema& schema,
                                 const MatchOptions& match) {
  MatrixEvaluation ev;
  for (const auto& m : config.models) ev.models.push_back(m.name);
  ev.methods = config.methods;
  for (const auto& [model, method] : matrix_pairs(config)) {
    const auto file = result_path(config.output_dir, model->name, method);
    std::error_code ec;
    if (!fs::exists(file, ec)) {
      ev.warnings.push_back("missing result file " + file.filename().string() + "; cell left undefined");
      continue;
    }
    PairResult r;
    try {
      r = pair_result_from_json(json::parse(read_file(file)));
    } catch (const std::exception& e) {
      ev.warnings.push_back("unreadable result file " + file.filename().string() + ": " + e.what());
      continue;
    }
    if (!r.complete()) {
      ev.warnings.push_back(file.filename().string() + ": " + std::to_string(r.failures.size()) +
                            " chunk(s) failed and are scored as all absent");
    }
    auto report = evaluate_records(model->name, std::string(to_string(method)), r.records, bronze, schema, match);
    if (is_reflective(method)) attach_rejection(report, reflective_strictness(method), r.outcomes);
    ev.reports.push_back(std::move(report));
  }
  return ev;
}

}  // namespace hydroie
