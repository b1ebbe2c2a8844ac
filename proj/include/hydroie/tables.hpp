#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hydroie/experiment.hpp"

namespace hydroie {

// Markdown table with columns padded to a common display width.
std::string render_markdown_table(const std::vector<std::string>& header,
                                  const std::vector<std::vector<std::string>>& rows);

enum class MetricKind { Precision, Recall, F1 };

// Models x methods grid of one overall metric.
std::string render_metric_table(const MatrixEvaluation& ev, MetricKind metric);

// Models x categories for one method, one sub-table per metric.
std::string render_category_tables(const MatrixEvaluation& ev, MethodId method = MethodId::SingleStep);

struct RejectionRow {
  std::string model;
  std::optional<double> lenient_pct;
  std::optional<double> moderate_pct;
  std::optional<double> stringent_pct;
};

std::vector<RejectionRow> rejection_rows(const MatrixEvaluation& ev);
std::string render_rejection_table(const std::vector<RejectionRow>& rows);

// PERFECT_RECALL / OVER_EXTRACTION lines per (model, method), or a note that
// none fired.
std::string render_flags(const MatrixEvaluation& ev);

// Tables 1-5 plus flags and warnings.
std::string render_report(const MatrixEvaluation& ev);

}  // namespace hydroie
