#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "sacoding/analytics.hpp"

namespace sacoding {

namespace {

using ojson = nlohmann::ordered_json;

std::string column_label(std::string_view display) {
  return is_actionable_display_code(display) ? "*" + std::string(display) : std::string(display);
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Left-aligned first column, right-aligned rest.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      if (c == 0) line += row[c] + pad;
      else line += "  " + pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  }
  return out.str();
}

ojson fraction_json(const Fraction& f) {
  ojson j{{"count", f.num}, {"of", f.den}};
  j["value"] = f.defined() ? ojson(f.value()) : ojson(nullptr);
  j["percent"] = f.percent();
  return j;
}

ComparisonMatrix single_column(const FrequencyReport& report) {
  ComparisonMatrix m;
  for (auto code : display_codes()) m.rows.emplace_back(code);
  m.rows.emplace_back(kActionableRow);
  m.columns.push_back(report.label.empty() ? report.dataset_id : report.label);
  for (std::size_t r = 0; r + 1 < m.rows.size(); ++r) m.cells.push_back({report.proportion(m.rows[r])});
  m.cells.push_back({report.actionable_fraction()});
  return m;
}

std::string chart_data(const ComparisonMatrix& m) {
  ojson doc;
  doc["chart"] = "grouped-bar";
  doc["x"] = m.rows;
  auto& actionable = doc["actionable_codes"] = ojson::array();
  for (const auto& r : m.rows) {
    if (is_actionable_display_code(r)) actionable.push_back(r);
  }
  doc["highlight"] = kActionableRow;
  auto& series = doc["series"] = ojson::array();
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    auto values = ojson::array();
    auto labels = ojson::array();
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      const auto& f = m.cells[r][c];
      values.push_back(f.defined() ? ojson(f.value()) : ojson(nullptr));
      labels.push_back(f.percent() + (f.defined() ? "%" : ""));
    }
    series.push_back({{"name", m.columns[c]}, {"values", values}, {"labels", labels}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace

std::string_view to_string(ReportFormat format) noexcept {
  switch (format) {
    case ReportFormat::table: return "table";
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::chart: return "chart";
  }
  return "table";
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "table" || text == "table-text") return ReportFormat::table;
  if (text == "csv" || text == "delimited") return ReportFormat::csv;
  if (text == "json" || text == "structured") return ReportFormat::json;
  if (text == "chart" || text == "chart-data") return ReportFormat::chart;
  throw Error(Errc::validation, "unknown report format \"" + std::string(text) + "\" (table, csv, json, chart)");
}

std::string emit_report(const FrequencyReport& report, ReportFormat format) {
  const auto codes = report.used_codes();
  switch (format) {
    case ReportFormat::table: {
      std::vector<std::vector<std::string>> rows;
      std::vector<std::string> header{"Category", "n"};
      for (const auto& c : codes) header.push_back(column_label(c));
      rows.push_back(header);
      for (const auto& cat : report.per_category) {
        std::vector<std::string> row{cat.category_id, std::to_string(cat.item_count)};
        for (const auto& c : codes) {
          auto it = cat.counts.find(c);
          row.push_back(it == cat.counts.end() ? "" : std::to_string(it->second));
        }
        rows.push_back(std::move(row));
      }
      std::vector<std::string> total{"Total (" + std::to_string(report.coded_count) + ")", ""};
      std::vector<std::string> share{"Proportion of Total", ""};
      for (const auto& c : codes) {
        total.push_back(std::to_string(report.totals.at(c)));
        share.push_back(report.proportion(c).percent() + "%");
      }
      rows.push_back(std::move(total));
      rows.push_back(std::move(share));

      std::ostringstream out;
      out << report.dataset_id << ": coded " << report.coded_count << " of " << report.item_count << " items\n";
      out << render_table(rows);
      const auto act = report.actionable_fraction();
      out << "Actionable: " << act.percent() << (act.defined() ? "%" : "") << " (" << act.num << "/" << act.den
          << ")\n";
      return out.str();
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "scope,code,count,proportion\n";
      for (const auto& cat : report.per_category) {
        for (auto code : display_codes()) {
          auto it = cat.counts.find(std::string(code));
          if (it == cat.counts.end() || it->second == 0) continue;
          out << csv_field(cat.category_id) << ',' << code << ',' << it->second << ','
              << fixed6(Fraction{it->second, cat.coded_count}.value()) << "\n";
        }
      }
      for (const auto& c : codes) {
        out << "TOTAL," << c << ',' << report.totals.at(c) << ',' << fixed6(report.proportion(c).value()) << "\n";
      }
      if (report.coded_count > 0) {
        out << "TOTAL," << kActionableRow << ',' << report.actionable_count << ','
            << fixed6(report.actionable_fraction().value()) << "\n";
      }
      return out.str();
    }
    case ReportFormat::json: {
      ojson doc;
      doc["dataset_id"] = report.dataset_id;
      doc["label"] = report.label;
      doc["item_count"] = report.item_count;
      doc["coded_count"] = report.coded_count;
      auto& cats = doc["per_category"] = ojson::array();
      for (const auto& cat : report.per_category) {
        ojson counts = ojson::object();
        for (auto code : display_codes()) {
          auto it = cat.counts.find(std::string(code));
          if (it != cat.counts.end() && it->second > 0) counts[std::string(code)] = it->second;
        }
        cats.push_back({{"category_id", cat.category_id},
                        {"title", cat.title},
                        {"n", cat.item_count},
                        {"coded", cat.coded_count},
                        {"counts", counts}});
      }
      auto& totals = doc["totals"] = ojson::object();
      auto& props = doc["proportions"] = ojson::object();
      for (auto code : display_codes()) {
        totals[std::string(code)] = report.totals.at(std::string(code));
        props[std::string(code)] = fraction_json(report.proportion(code));
      }
      doc["actionable"] = fraction_json(report.actionable_fraction());
      return doc.dump(2) + "\n";
    }
    case ReportFormat::chart:
      return chart_data(single_column(report));
  }
  return {};
}

std::string emit_report(const ComparisonMatrix& m, ReportFormat format) {
  switch (format) {
    case ReportFormat::table: {
      std::vector<std::vector<std::string>> rows;
      std::vector<std::string> header{"Code"};
      header.insert(header.end(), m.columns.begin(), m.columns.end());
      rows.push_back(header);
      for (std::size_t r = 0; r < m.rows.size(); ++r) {
        std::vector<std::string> row{column_label(m.rows[r])};
        for (const auto& f : m.cells[r]) row.push_back(f.percent() + (f.defined() ? "%" : ""));
        rows.push_back(std::move(row));
      }
      return render_table(rows);
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "code";
      for (const auto& c : m.columns) out << ',' << csv_field(c);
      out << "\n";
      for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << m.rows[r];
        for (const auto& f : m.cells[r]) out << ',' << (f.defined() ? fixed6(f.value()) : "");
        out << "\n";
      }
      return out.str();
    }
    case ReportFormat::json: {
      ojson doc;
      doc["rows"] = m.rows;
      doc["columns"] = m.columns;
      auto& cells = doc["cells"] = ojson::array();
      for (const auto& row : m.cells) {
        auto out = ojson::array();
        for (const auto& f : row) out.push_back(fraction_json(f));
        cells.push_back(std::move(out));
      }
      return doc.dump(2) + "\n";
    }
    case ReportFormat::chart:
      return chart_data(m);
  }
  return {};
}

std::string emit_report(const FlowStats& stats, ReportFormat format) {
  switch (format) {
    case ReportFormat::table:
    case ReportFormat::chart: {
      std::vector<std::vector<std::string>> rows{{"Question", "yes", "no", "reached", "unknown", "yes % of items"}};
      for (const auto& q : stats.order) {
        const auto& f = stats.per_question.at(q);
        rows.push_back({q.str(), std::to_string(f.yes), std::to_string(f.no), std::to_string(f.reached),
                        std::to_string(f.unknown), Fraction{f.yes, stats.item_count}.percent()});
      }
      std::ostringstream out;
      out << stats.dataset_id << ": question flow (" << to_string(stats.mode) << "), " << stats.coded_count << " of "
          << stats.item_count << " items coded\n";
      out << render_table(rows);
      for (const auto& n : stats.notes) out << "note: " << n << "\n";
      return out.str();
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "question,yes,no,reached,unknown\n";
      for (const auto& q : stats.order) {
        const auto& f = stats.per_question.at(q);
        out << q.str() << ',' << f.yes << ',' << f.no << ',' << f.reached << ',' << f.unknown << "\n";
      }
      return out.str();
    }
    case ReportFormat::json: {
      ojson doc;
      doc["dataset_id"] = stats.dataset_id;
      doc["mode"] = to_string(stats.mode);
      doc["item_count"] = stats.item_count;
      doc["coded_count"] = stats.coded_count;
      auto& per = doc["per_question"] = ojson::array();
      for (const auto& q : stats.order) {
        const auto& f = stats.per_question.at(q);
        per.push_back({{"question", q.str()},
                       {"yes", f.yes},
                       {"no", f.no},
                       {"reached", f.reached},
                       {"unknown", f.unknown}});
      }
      doc["notes"] = stats.notes;
      return doc.dump(2) + "\n";
    }
  }
  return {};
}

std::string emit_report(const Agreement& result, ReportFormat format) {
  char kappa[32] = "undefined";
  if (result.kappa) std::snprintf(kappa, sizeof kappa, "%.4f", *result.kappa);
  switch (format) {
    case ReportFormat::json: {
      ojson doc{{"overlap", result.overlap}, {"agreed", result.agreed}, {"percent_agreement", result.percent}};
      doc["kappa"] = result.kappa ? ojson(*result.kappa) : ojson(nullptr);
      doc["confusion"] = result.confusion;
      return doc.dump(2) + "\n";
    }
    case ReportFormat::csv: {
      std::ostringstream out;
      out << "overlap,agreed,percent_agreement,kappa\n"
          << result.overlap << ',' << result.agreed << ',' << Fraction{result.agreed, result.overlap}.percent() << ','
          << (result.kappa ? kappa : "") << "\n";
      return out.str();
    }
    default: {
      std::ostringstream out;
      out << "Items coded by both: " << result.overlap << "\n"
          << "Percent agreement: " << Fraction{result.agreed, result.overlap}.percent() << "% (" << result.agreed << "/"
          << result.overlap << ")\n"
          << "Cohen's kappa: " << kappa << "\n";
      return out.str();
    }
  }
}

}  // namespace sacoding
