#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hydroie/backends.hpp"
#include "hydroie/bronze.hpp"
#include "hydroie/corpus.hpp"
#include "hydroie/evaluation.hpp"
#include "hydroie/pipeline.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

inline constexpr const char* kBaselineModelName = "traditional";

struct ModelConfig {
  std::string name;  // table row label and result-file key
  BackendConfig backend;
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> corpus;  // files or directories of *.txt
  ChunkingParams chunking;
  std::vector<ModelConfig> models;
  std::vector<MethodId> methods;
  std::optional<ModelConfig> judge;
  Conservatism conservatism = Conservatism::Strict;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> patterns;  // baseline pattern manifest
  std::size_t concurrency = 4;
  int extraction_max_tokens = kExtractionMaxTokens;
  int validation_max_tokens = kValidationMaxTokens;
  bool strict_parse = false;
  bool timestamps = false;

  // Throws ConfigError: no models, no methods, no corpus entries, duplicate
  // model names, bad backend settings.
  void validate() const;
};

// Relative paths resolve against base_dir (the config file's directory).
ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
json experiment_config_to_json(const ExperimentConfig& config);
// SHA-256 of the compact config snapshot.
std::string config_hash(const ExperimentConfig& config);

using BackendFactory = std::function<std::shared_ptr<Backend>(const ModelConfig&)>;

// http -> HttpBackend, scripted -> ScriptedBackend from script_path.
// Baseline models have no backend; asking for one throws ConfigError.
std::shared_ptr<Backend> make_backend(const ModelConfig& model);
GatewayOptions gateway_options_for(const BackendConfig& backend, const std::optional<std::filesystem::path>& cache_dir);

std::string sanitize_name(std::string_view name);
std::filesystem::path result_path(const std::filesystem::path& output_dir, std::string_view model, MethodId method);
std::filesystem::path corpus_path(const std::filesystem::path& output_dir);
std::filesystem::path bronze_path(const std::filesystem::path& output_dir);
std::filesystem::path manifest_path(const std::filesystem::path& output_dir);

struct PairFailure {
  std::string chunk_id;
  std::string error;
};

struct PairResult {
  std::string model;
  MethodId method = MethodId::SingleStep;
  std::vector<ExtractionRecord> records;      // corpus chunk order, failed chunks omitted
  std::vector<ValidationOutcome> outcomes;    // reflective methods only
  std::vector<PairFailure> failures;
  bool complete() const { return failures.empty(); }
};

json pair_result_to_json(const PairResult& r);
PairResult pair_result_from_json(const json& j);

struct PairStatus {
  std::string model;
  MethodId method = MethodId::SingleStep;
  std::filesystem::path file;
  bool complete = false;
  std::size_t failed_chunks = 0;
  bool resumed = false;  // an existing complete file was kept; not persisted
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::vector<PairStatus> pairs;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;

  bool all_complete() const;
};

json manifest_to_json(const RunManifest& m, const std::filesystem::path& output_dir);

struct MatrixOptions {
  BackendFactory backend_factory;  // defaults to make_backend
  // Stop after this many pairs have been run (not counting resumed ones).
  // Used to simulate an interrupted run; the manifest is not written.
  std::optional<std::size_t> stop_after;
  std::function<void(const PairStatus&)> on_pair;  // progress hook
};

// (model, method) pairs in config order. The baseline model contributes only
// single_step.
std::vector<std::pair<const ModelConfig*, MethodId>> matrix_pairs(const ExperimentConfig& config);

// Runs every pair over every chunk and writes results_{model}_{method}.json
// plus run_manifest.json. Existing complete result files are kept.
RunManifest run_matrix(const ExperimentConfig& config, const Corpus& corpus, const Schema& schema,
                       const MatrixOptions& options = {});

// Judge calls for every (chunk, field); writes bronze.json and
// bronze_coverage.txt.
BronzeStandard run_bronze(const ExperimentConfig& config, const Corpus& corpus, const Schema& schema,
                          const BackendFactory& factory = {});

struct MatrixEvaluation {
  std::vector<std::string> models;  // config order
  std::vector<MethodId> methods;    // config order
  std::vector<EvalReport> reports;  // one per result file found
  std::vector<std::string> warnings;

  const EvalReport* find(std::string_view model, MethodId method) const;
};

// Scores every configured pair whose result file exists. Missing files are
// warnings, and the cell renders as undefined.
MatrixEvaluation evaluate_matrix(const ExperimentConfig& config, const BronzeStandard& bronze, const Schema& schema,
                                 const MatchOptions& match = {});

}  // namespace hydroie
