#include "hydroie/tables.hpp"

#include <algorithm>
#include <cstdio>

namespace hydroie {

namespace {

// Code points, which is close enough for the ASCII plus dash text we emit.
std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
  const auto w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "—";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v);
  return buf;
}

const std::optional<double>& pick(const MetricBlock& m, MetricKind k) {
  switch (k) {
    case MetricKind::Precision: return m.precision;
    case MetricKind::Recall: return m.recall;
    case MetricKind::F1: break;
  }
  return m.f1;
}

std::string_view metric_title(MetricKind k) {
  switch (k) {
    case MetricKind::Precision: return "Precision";
    case MetricKind::Recall: return "Recall";
    case MetricKind::F1: break;
  }
  return "F1 Score";
}

}  // namespace

std::string render_markdown_table(const std::vector<std::string>& header,
                                  const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size(), 3);
  for (std::size_t c = 0; c < header.size(); ++c) widths[c] = std::max(widths[c], display_width(header[c]));
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
      widths[c] = std::max(widths[c], display_width(row[c]));
    }
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (std::size_t c = 0; c < widths.size(); ++c) {
      out += " " + pad(c < cells.size() ? cells[c] : std::string(), widths[c]) + " |";
    }
    return out + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t c = 0; c < widths.size(); ++c) out += " " + std::string(widths[c], '-') + " |";
  out += "\n";
  for (const auto& row : rows) out += line(row);
  return out;
}

std::string render_metric_table(const MatrixEvaluation& ev, MetricKind metric) {
  std::vector<std::string> header = {"Model"};
  for (auto m : ev.methods) header.emplace_back(method_title(m));
  std::vector<std::vector<std::string>> rows;
  for (const auto& model : ev.models) {
    std::vector<std::string> row = {model};
    for (auto m : ev.methods) {
      const auto* r = ev.find(model, m);
      row.push_back(r ? fmt_metric(pick(r->overall, metric)) : "—");
    }
    rows.push_back(std::move(row));
  }
  return render_markdown_table(header, rows);
}

std::string render_category_tables(const MatrixEvaluation& ev, MethodId method) {
  std::string out;
  const char* labels[] = {"(a)", "(b)", "(c)"};
  const MetricKind order[] = {MetricKind::F1, MetricKind::Precision, MetricKind::Recall};
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<std::string> header = {"Model"};
    for (auto c : kAllCategories) header.emplace_back(to_string(c));
    std::vector<std::vector<std::string>> rows;
    for (const auto& model : ev.models) {
      const auto* r = ev.find(model, method);
      std::vector<std::string> row = {model};
      for (auto c : kAllCategories) {
        if (r == nullptr) {
          row.emplace_back("—");
          continue;
        }
        auto it = r->per_category.find(c);
        row.push_back(it == r->per_category.end() ? "—" : fmt_metric(pick(it->second.metrics, order[k])));
      }
      rows.push_back(std::move(row));
    }
    if (!out.empty()) out += "\n";
    out += std::string(labels[k]) + " " + std::string(metric_title(order[k])) + "\n\n";
    out += render_markdown_table(header, rows);
  }
  return out;
}

std::vector<RejectionRow> rejection_rows(const MatrixEvaluation& ev) {
  std::vector<RejectionRow> rows;
  auto rate = [&](const std::string& model, MethodId m) -> std::optional<double> {
    const auto* r = ev.find(model, m);
    if (r == nullptr || !r->rejection || !r->rejection->rate) return std::nullopt;
    return *r->rejection->rate * 100.0;
  };
  for (const auto& model : ev.models) {
    RejectionRow row{model, rate(model, MethodId::ReflectiveLenient), rate(model, MethodId::ReflectiveModerate),
                     rate(model, MethodId::ReflectiveStringent)};
    if (row.lenient_pct || row.moderate_pct || row.stringent_pct) rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_rejection_table(const std::vector<RejectionRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    cells.push_back({r.model, pct(r.lenient_pct), pct(r.moderate_pct), pct(r.stringent_pct),
                     achievement_label(r.lenient_pct, r.moderate_pct, r.stringent_pct)});
  }
  return render_markdown_table({"Model", "Lenient", "Moderate", "Stringent", "Target Achievement"}, cells);
}

std::string render_flags(const MatrixEvaluation& ev) {
  std::string out;
  for (const auto& r : ev.reports) {
    const auto labels = r.flags.labels();
    std::vector<std::string> cats;
    for (const auto& [cat, f] : r.flags.per_category) {
      if (f.first || f.second) {
        std::string s(to_string(cat));
        s += f.first && f.second ? " (PERFECT_RECALL, OVER_EXTRACTION)" : f.first ? " (PERFECT_RECALL)" : " (OVER_EXTRACTION)";
        cats.push_back(std::move(s));
      }
    }
    if (labels.empty() && cats.empty()) continue;
    out += "- " + r.model + " / " + r.method + ":";
    for (const auto& l : labels) out += " " + l;
    if (!cats.empty()) {
      out += labels.empty() ? " categories " : "; categories ";
      for (std::size_t i = 0; i < cats.size(); ++i) out += (i ? ", " : "") + cats[i];
    }
    out += " (recall " + fmt_metric(r.overall.recall) + ", precision " + fmt_metric(r.overall.precision) + ")\n";
  }
  return out.empty() ? "No hallucination signatures.\n" : out;
}

std::string render_report(const MatrixEvaluation& ev) {
  std::string out;
  out += "## Table 1: F1 Score Results\n\n" + render_metric_table(ev, MetricKind::F1);
  out += "\n## Table 2: Precision Results\n\n" + render_metric_table(ev, MetricKind::Precision);
  out += "\n## Table 3: Recall Results\n\n" + render_metric_table(ev, MetricKind::Recall);
  out += "\n## Table 4: Category-wise Performance (Single-step)\n\n" + render_category_tables(ev);
  const auto rows = rejection_rows(ev);
  out += "\n## Table 5: Validation Rejection Rates\n\n";
  out += rows.empty() ? std::string("No reflective results.\n") : render_rejection_table(rows);
  out += "\n## Hallucination signatures\n\n" + render_flags(ev);
  if (!ev.warnings.empty()) {
    out += "\n## Warnings\n\n";
    for (const auto& w : ev.warnings) out += "- " + w + "\n";
  }
  return out;
}

}  // namespace hydroie
