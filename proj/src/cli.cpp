#include "hydroie/cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "hydroie/experiment.hpp"
#include "hydroie/tables.hpp"

namespace hydroie {

namespace fs = std::filesystem;

namespace {

struct GlobalFlags {
  std::string config;
  std::string cache_dir;
  std::string out;
  std::size_t concurrency = 0;
  bool strict_parse = false;
  bool timestamps = false;
};

ExperimentConfig effective_config(const GlobalFlags& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  auto c = load_experiment_config(g.config);
  if (!g.out.empty()) c.output_dir = g.out;
  if (!g.cache_dir.empty()) c.cache_dir = fs::path(g.cache_dir);
  if (g.concurrency > 0) c.concurrency = g.concurrency;
  if (g.strict_parse) c.strict_parse = true;
  if (g.timestamps) c.timestamps = true;
  return c;
}

Corpus load_saved_corpus(const ExperimentConfig& c) {
  const auto path = corpus_path(c.output_dir);
  if (!fs::exists(path)) throw InputError("no corpus manifest at " + path.string() + "; run `chunk` first");
  return corpus_from_json(json::parse(read_file(path)));
}

int cmd_chunk(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  auto corpus = load_corpus(c.corpus, c.chunking);
  if (corpus.documents.empty()) throw InputError("no documents");
  for (const auto& w : corpus.warnings) err << "warning: " << w << "\n";
  for (const auto& d : corpus.documents) {
    const auto n = std::count_if(corpus.chunks.begin(), corpus.chunks.end(),
                                 [&](const DocumentChunk& ch) { return ch.doc_id == d.doc_id; });
    out << d.doc_id << ": " << d.word_count << " words, " << n << " chunks\n";
  }
  fs::create_directories(c.output_dir);
  write_file_atomic(corpus_path(c.output_dir), dump_pretty(corpus_to_json(corpus)));
  out << "wrote " << corpus_path(c.output_dir).string() << "\n";
  return kExitOk;
}

int cmd_bronze(const ExperimentConfig& c, const Schema& schema, std::ostream& out, std::ostream& err) {
  const auto corpus = load_saved_corpus(c);
  const auto standard = run_bronze(c, corpus, schema);
  err << bronze_coverage_report(standard, schema).render();
  out << "wrote " << bronze_path(c.output_dir).string() << "\n";
  if (standard.error_count() == 0) return kExitOk;
  std::size_t shown = 0;
  for (const auto& a : standard.annotations) {
    for (const auto& [field, e] : a.errors) {
      if (shown++ < 5) err << "judge error " << a.chunk_id << " / " << field << ": " << e << "\n";
    }
  }
  err << standard.error_count() << " judge call(s) failed; those cells are null\n";
  return kExitPartial;
}

int cmd_run_matrix(const ExperimentConfig& c, const Schema& schema, std::ostream& out) {
  const auto corpus = load_saved_corpus(c);
  MatrixOptions opts;
  opts.on_pair = [&](const PairStatus& p) {
    out << p.model << " / " << to_string(p.method) << ": "
        << (p.resumed ? "kept existing" : p.complete ? "complete" : "FAILED " + std::to_string(p.failed_chunks) + " chunk(s)")
        << "\n";
  };
  const auto manifest = run_matrix(c, corpus, schema, opts);
  out << "wrote " << manifest_path(c.output_dir).string() << "\n";
  return manifest.all_complete() ? kExitOk : kExitPartial;
}

int cmd_evaluate(const ExperimentConfig& c, const Schema& schema, std::ostream& out, std::ostream& err) {
  const auto path = bronze_path(c.output_dir);
  if (!fs::exists(path)) throw InputError("no bronze standard at " + path.string() + "; run `bronze` first");
  const auto bronze = bronze_from_json(json::parse(read_file(path)), schema);
  const auto ev = evaluate_matrix(c, bronze, schema);
  for (const auto& w : ev.warnings) err << "warning: " << w << "\n";

  json reports = json::array();
  for (const auto& r : ev.reports) reports.push_back(eval_report_to_json(r));
  const json doc = {{"format_version", 1}, {"tool_version", kToolVersion}, {"reports", reports}, {"warnings", ev.warnings}};
  write_file_atomic(c.output_dir / "eval_report.json", dump_pretty(doc));
  write_file_atomic(c.output_dir / "eval_report.csv", eval_reports_to_csv(ev.reports));
  const auto tables = render_report(ev);
  write_file_atomic(c.output_dir / "tables.md", tables);
  out << tables;
  return kExitOk;
}

struct DumpArgs {
  std::string kind;
  std::string chunk_id;
  std::vector<std::string> fields;
  std::string value;
};

int cmd_dump_prompt(const ExperimentConfig& c, const Schema& schema, const DumpArgs& a, std::ostream& out) {
  Corpus corpus = fs::exists(corpus_path(c.output_dir)) ? load_saved_corpus(c) : load_corpus(c.corpus, c.chunking);
  const auto* chunk = corpus.find_chunk(a.chunk_id);
  if (chunk == nullptr) throw InputError("unknown chunk id: " + a.chunk_id);

  auto one_field = [&]() -> const FieldSpec& {
    if (a.fields.size() != 1) throw InputError(a.kind + " needs exactly one --field");
    const auto* f = schema.find(a.fields.front());
    if (f == nullptr) throw InputError("unknown field: " + a.fields.front());
    return *f;
  };

  std::string kind = a.kind;
  if (kind == "two_step") kind = "two_step_presence";
  if (kind.rfind("reflective_", 0) == 0) kind = "validate_" + kind.substr(11);

  PromptTag tag;
  try {
    tag = parse_prompt_tag(kind);
  } catch (const std::exception&) {
    throw InputError("unknown prompt kind: " + a.kind);
  }
  switch (tag) {
    case PromptTag::SingleStep: out << single_step_prompt(*chunk, schema).render(); break;
    case PromptTag::TwoStepPresence: out << two_step_presence_prompt(*chunk, schema).render(); break;
    case PromptTag::TwoStepExtract: {
      if (a.fields.empty()) throw InputError("two_step_extract needs at least one --field");
      for (const auto& f : a.fields) {
        if (schema.find(f) == nullptr) throw InputError("unknown field: " + f);
      }
      out << two_step_extract_prompt(*chunk, schema, a.fields).render();
      break;
    }
    case PromptTag::Categorical: {
      const auto bundles = categorical_prompts(*chunk, schema);
      for (std::size_t i = 0; i < bundles.size(); ++i) out << (i ? "\n" : "") << bundles[i].render();
      break;
    }
    case PromptTag::ChainOfThought: out << chain_of_thought_prompt(*chunk, schema).render(); break;
    case PromptTag::ValidateLenient:
    case PromptTag::ValidateModerate:
    case PromptTag::ValidateStringent: {
      const auto strictness = tag == PromptTag::ValidateLenient    ? Strictness::Lenient
                              : tag == PromptTag::ValidateModerate ? Strictness::Moderate
                                                                   : Strictness::Stringent;
      if (a.value.empty()) throw InputError(a.kind + " needs --value");
      out << validation_prompt(*chunk, one_field(), a.value, strictness).render();
      break;
    }
    case PromptTag::BronzeJudge: out << bronze_judge_prompt(*chunk, one_field(), c.conservatism).render(); break;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hydropower regulatory information extraction harness"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_option("--out", g.out, "Output directory (overrides config)");
  app.add_option("--concurrency", g.concurrency, "Chunk-level worker count");
  app.add_flag("--strict-parse", g.strict_parse, "Fail a chunk on unparseable model output");
  app.add_flag("--timestamps", g.timestamps, "Record start/finish times in the run manifest");

  auto* chunk = app.add_subcommand("chunk", "Split the corpus and write corpus.json")->fallthrough();
  auto* bronze = app.add_subcommand("bronze", "Generate the bronze standard with the judge model")->fallthrough();
  auto* matrix = app.add_subcommand("run-matrix", "Run every (model, method) pair")->fallthrough();
  auto* evaluate = app.add_subcommand("evaluate", "Score results and render tables")->fallthrough();
  auto* dump = app.add_subcommand("dump-prompt", "Print the exact prompt for one chunk")->fallthrough();
  DumpArgs d;
  dump->add_option("kind", d.kind, "Method or prompt tag (single_step, two_step_extract, validate_stringent, ...)")
      ->required();
  dump->add_option("chunk_id", d.chunk_id, "Chunk id, e.g. doc#0")->required();
  dump->add_option("--field", d.fields, "Field name (repeatable for two_step_extract)");
  dump->add_option("--value", d.value, "Extracted value for validation prompts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const auto config = effective_config(g);
    const auto& schema = builtin_schema();
    if (chunk->parsed()) return cmd_chunk(config, out, err);
    if (bronze->parsed()) return cmd_bronze(config, schema, out, err);
    if (matrix->parsed()) return cmd_run_matrix(config, schema, out);
    if (evaluate->parsed()) return cmd_evaluate(config, schema, out, err);
    if (dump->parsed()) return cmd_dump_prompt(config, schema, d, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitConfig;
}

}  // namespace hydroie
