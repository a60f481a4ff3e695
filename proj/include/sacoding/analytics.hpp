#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sacoding/coding_tree.hpp"
#include "sacoding/corpus.hpp"
#include "sacoding/session.hpp"

namespace sacoding {

/// Exact non-negative ratio. Proportions stay exact internally and are only
/// rounded for display.
struct Fraction {
  std::size_t num = 0;
  std::size_t den = 0;

  bool defined() const noexcept { return den != 0; }
  double value() const noexcept { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

  /// Percentage rounded half-up to `decimals` places, e.g. 11/28 -> "39.3".
  /// Undefined fractions render as "n/a".
  std::string percent(int decimals = 1) const;

  friend bool operator==(const Fraction& a, const Fraction& b) noexcept {
    return a.num * b.den == b.num * a.den && a.defined() == b.defined();
  }
};

struct CategoryCounts {
  std::string category_id;
  std::string title;
  std::size_t item_count = 0;
  std::size_t coded_count = 0;
  std::map<std::string, std::size_t> counts;  // display code -> count (nonzero only)
};

struct FrequencyReport {
  std::string dataset_id;
  std::string label;  // column label when compared (session or dataset id)
  std::vector<CategoryCounts> per_category;  // dataset category order
  std::map<std::string, std::size_t> totals;  // display code -> count, all 11 codes present
  std::size_t coded_count = 0;
  std::size_t item_count = 0;
  std::size_t actionable_count = 0;

  Fraction proportion(std::string_view display) const;
  Fraction actionable_fraction() const noexcept { return {actionable_count, coded_count}; }
  Fraction coverage() const noexcept { return {coded_count, item_count}; }
  /// Display codes with a nonzero total, in table order.
  std::vector<std::string> used_codes() const;
};

/// Errc::mismatch when the session was not coded over `dataset`.
FrequencyReport frequency_table(const Session& session, const Dataset& dataset);

struct Actionability {
  std::size_t actionable = 0;
  std::size_t coded = 0;
  std::map<std::string, std::size_t> by_code;  // P3..P6
  Fraction fraction() const noexcept { return {actionable, coded}; }
  bool defined() const noexcept { return coded != 0; }
};

Actionability actionability(const Session& session);

inline constexpr std::string_view kActionableRow = "Actionable";

struct ComparisonMatrix {
  std::vector<std::string> rows;     // 11 display codes + "Actionable"
  std::vector<std::string> columns;  // one label per session
  std::vector<std::vector<Fraction>> cells;  // [row][column]

  const Fraction& at(std::string_view row, std::string_view column) const;
};

struct CompareInput {
  const Session* session;
  const Dataset* dataset;
  std::string label;  // defaults to the session id when empty
};

/// Errc::validation for no input, Errc::mismatch when leaf sets differ.
ComparisonMatrix compare(std::span<const CompareInput> inputs);

enum class FlowMode { recorded_paths, inferred_from_codes };

std::string_view to_string(FlowMode mode) noexcept;
FlowMode parse_flow_mode(std::string_view text);

struct QuestionFlow {
  std::size_t yes = 0;
  std::size_t no = 0;
  std::size_t reached = 0;
  std::size_t unknown = 0;  // items whose passage through this question is not pinned
};

struct FlowStats {
  FlowMode mode = FlowMode::recorded_paths;
  std::string dataset_id;
  std::size_t item_count = 0;
  std::size_t coded_count = 0;
  std::vector<QuestionId> order;  // tree declaration order
  std::map<QuestionId, QuestionFlow> per_question;
  std::vector<std::string> notes;

  const QuestionFlow& at(std::string_view question) const;
};

/// recorded_paths needs answer paths (Errc::unavailable if any decision is
/// pathless); inferred_from_codes derives what each code pins in the tree.
FlowStats question_flow_stats(const Session& session, FlowMode mode);

struct Agreement {
  std::size_t overlap = 0;
  std::size_t agreed = 0;
  double percent = 0.0;
  std::optional<double> kappa;  // unset when chance agreement is total and observed is not
  std::map<std::string, std::map<std::string, std::size_t>> confusion;  // a-code -> b-code -> n
};

/// Percent agreement and Cohen's kappa over commonly coded items, T merged.
/// Errc::mismatch for different datasets, Errc::conflict when nothing overlaps.
Agreement agreement(const Session& a, const Session& b);

// ---------------------------------------------------------------------------
// Serialization

enum class ReportFormat { table, csv, json, chart };

std::string_view to_string(ReportFormat format) noexcept;
/// Accepts table|csv|json|chart and the long forms table-text, delimited,
/// structured, chart-data. Errc::validation otherwise.
ReportFormat parse_report_format(std::string_view text);

std::string emit_report(const FrequencyReport& report, ReportFormat format);
std::string emit_report(const ComparisonMatrix& matrix, ReportFormat format);
std::string emit_report(const FlowStats& stats, ReportFormat format);
std::string emit_report(const Agreement& result, ReportFormat format);

}  // namespace sacoding
