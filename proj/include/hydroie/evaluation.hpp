#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hydroie/bronze.hpp"
#include "hydroie/output_parser.hpp"
#include "hydroie/pipeline.hpp"
#include "hydroie/schema.hpp"

namespace hydroie {

// ---- normalization and matching -------------------------------------------

struct NormalizedValue {
  bool numeric = false;   // a number was parsed (numeric fields only)
  bool fallback = false;  // numeric field without a parseable number
  double number = 0.0;
  std::optional<std::string> unit;          // canonical ("cfs", "MW", ...) or the raw unit word
  std::optional<std::string> unit_surface;  // unit text as written, lowercased
  std::vector<std::string> tokens;          // text form, stopwords removed
};

// Lowercases, collapses whitespace and strips thousands separators. Numeric
// fields parse (number, unit) with the unit canonicalized through the
// synonym table; text fields yield tokens minus {the, a, an, of, project}.
NormalizedValue normalize_value(std::string_view raw, const FieldSpec& field);

// Canonical unit for a unit phrase ("megawatts" -> "MW"), if known.
std::optional<std::string> canonical_unit(std::string_view phrase);

enum class MatchReason { Exact, NormalizedNumeric, UnitSynonym, TokenEquivalent, NoMatch };
std::string_view to_string(MatchReason r);

struct MatchDecision {
  bool is_match = false;
  MatchReason reason = MatchReason::NoMatch;
};

struct MatchOptions {
  // 0 means exact numeric equality.
  double relative_tolerance = 0.0;
};

MatchDecision semantic_match(const FieldSpec& field, std::string_view predicted, std::string_view reference,
                             const MatchOptions& options = {});

// ---- scoring ---------------------------------------------------------------

enum class CellOutcome { TP, FP, FN, TN };
std::string_view to_string(CellOutcome c);

// A present prediction that mismatches a present reference counts as FP
// only.
CellOutcome score_cell(const FieldSpec& field, const std::optional<std::string>& predicted,
                       const std::optional<std::string>& reference, const MatchOptions& options = {});

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(CellOutcome c);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricBlock {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

// Harmonic mean of defined p and r. p = r = 0 gives 0.
std::optional<double> f1_from(std::optional<double> precision, std::optional<double> recall);

MetricBlock aggregate(const ConfusionCounts& counts);

struct FieldEval {
  ConfusionCounts counts;
  MetricBlock metrics;
};

struct CategoryEval {
  MetricBlock metrics;  // unweighted means over member fields with a defined value
  std::size_t member_fields = 0;
  std::size_t defined_f1_fields = 0;
  ConfusionCounts counts;  // summed, for diagnostics
};

std::map<Category, CategoryEval> category_rollup(const std::map<std::string, FieldEval>& per_field,
                                                 const Schema& schema);

// ---- rejection analysis ----------------------------------------------------

std::optional<double> rejection_rate(const std::vector<ValidationOutcome>& outcomes);

enum class TargetBand { InBand, Below, Above };
std::string_view to_string(TargetBand b);

inline constexpr double kTargetBandLow = 40.0;
inline constexpr double kTargetBandHigh = 60.0;

// Inclusive 40–60 percent band.
TargetBand target_band(double rate_percent);

// "<Strategy> only", "A + B", or "None" with a qualifier when nothing is in
// band: "(convergence)" when the three rates agree within 0.5 points,
// "(low rejection)" / "(high rejection)" when all fall on one side.
std::string achievement_label(std::optional<double> lenient_pct, std::optional<double> moderate_pct,
                              std::optional<double> stringent_pct);

// ---- reports ---------------------------------------------------------------

struct HallucinationFlags {
  bool perfect_recall = false;   // recall >= 0.999 with precision < 0.5
  bool over_extraction = false;  // >= 95% of cells predicted present
  double predicted_present_fraction = 0.0;
  std::map<Category, std::pair<bool, bool>> per_category;  // (perfect_recall, over_extraction)

  std::vector<std::string> labels() const;
};

inline constexpr double kPerfectRecallThreshold = 0.999;
inline constexpr double kPerfectRecallPrecisionGate = 0.5;
inline constexpr double kOverExtractionThreshold = 0.95;

struct RejectionSummary {
  Strictness strictness = Strictness::Moderate;
  std::optional<double> rate;
  std::optional<TargetBand> band;
  std::size_t candidates = 0;
  std::size_t rejected = 0;
  std::size_t unparseable = 0;
};

struct EvalReport {
  std::string model;
  std::string method;
  std::size_t scored_chunks = 0;
  std::map<std::string, FieldEval> per_field;
  std::map<Category, CategoryEval> per_category;
  ConfusionCounts overall_counts;
  MetricBlock overall;
  std::optional<RejectionSummary> rejection;
  HallucinationFlags flags;
  std::vector<std::string> warnings;
};

HallucinationFlags hallucination_signature(const EvalReport& report);

// Scores every (bronze chunk, field) cell. Chunks with no record count as
// all-absent predictions.
EvalReport evaluate_records(const std::string& model, const std::string& method,
                            const std::vector<ExtractionRecord>& records, const BronzeStandard& reference,
                            const Schema& schema, const MatchOptions& options = {});

// Adds rejection rate and band from validation outcomes.
void attach_rejection(EvalReport& report, Strictness strictness, const std::vector<ValidationOutcome>& outcomes);

json metric_to_json(const MetricBlock& m);
json eval_report_to_json(const EvalReport& report);
// Rows: model,method,scope,name,precision,recall,f1,tp,fp,fn,tn
std::string eval_reports_to_csv(const std::vector<EvalReport>& reports);

// Three decimals, or "—" when undefined.
std::string fmt_metric(const std::optional<double>& v);

}  // namespace hydroie
