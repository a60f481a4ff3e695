#include "sacoding/analytics.hpp"

#include <algorithm>
#include <set>

namespace sacoding {

namespace {

// Published figures that inferred flow statistics are checked against. The
// inferred count is reported as computed; a mismatch only produces a note.
struct PublishedFlowFigure {
  std::string_view dataset_id;
  std::string_view question;
  std::string_view printed;
  std::size_t yes_count;  // 0 when the source only printed a percentage
  double percent;
};

constexpr PublishedFlowFigure kPublishedFlow[] = {
    {"dcms-sub", "Q4", "61% (17 of 28)", 17, 61.0},
    {"etsi", "Q4", "78% of the 67 items", 0, 78.0},
    {"etsi", "Q5", "43%", 0, 43.0},
};

std::set<std::string> leaf_ids(const CodingTree& tree) {
  std::set<std::string> ids;
  for (const auto& l : tree.leaves()) ids.insert(l.id.str());
  return ids;
}

}  // namespace

std::string Fraction::percent(int decimals) const {
  if (!defined()) return "n/a";
  std::size_t scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // round half up on the exact ratio: floor((2*num*scale + den) / (2*den))
  const std::size_t scaled = (2 * num * scale + den) / (2 * den);
  std::string digits = std::to_string(scaled);
  if (decimals == 0) return digits;
  if (digits.size() <= static_cast<std::size_t>(decimals)) {
    digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
  }
  digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
  return digits;
}

Fraction FrequencyReport::proportion(std::string_view display) const {
  auto it = totals.find(std::string(display));
  return {it == totals.end() ? 0 : it->second, coded_count};
}

std::vector<std::string> FrequencyReport::used_codes() const {
  std::vector<std::string> out;
  for (auto code : display_codes()) {
    auto it = totals.find(std::string(code));
    if (it != totals.end() && it->second > 0) out.emplace_back(code);
  }
  return out;
}

FrequencyReport frequency_table(const Session& session, const Dataset& dataset) {
  if (session.dataset_id() != dataset.id()) {
    throw Error(Errc::mismatch, "session " + session.id() + " codes dataset " + session.dataset_id() + ", not " +
                                    dataset.id());
  }
  FrequencyReport report;
  report.dataset_id = dataset.id();
  report.label = session.id();
  report.item_count = dataset.size();
  for (auto code : display_codes()) report.totals[std::string(code)] = 0;

  std::map<std::string, std::size_t> category_index;
  for (const auto& c : dataset.categories()) {
    category_index[c.category_id] = report.per_category.size();
    report.per_category.push_back({c.category_id, c.title, dataset.count_in(c.category_id), 0, {}});
  }

  for (const auto& item : dataset.items()) {
    auto it = session.decisions().find(item.item_id);
    if (it == session.decisions().end()) continue;
    const auto display = display_code(it->second.code);
    auto& cat = report.per_category[category_index.at(item.category_id)];
    ++cat.counts[display];
    ++cat.coded_count;
    ++report.totals[display];
    ++report.coded_count;
    if (is_actionable_display_code(display)) ++report.actionable_count;
  }
  if (report.coded_count != session.decisions().size()) {
    throw Error(Errc::mismatch, "session " + session.id() + " has decisions for items outside " + dataset.id());
  }
  return report;
}

Actionability actionability(const Session& session) {
  Actionability a;
  for (const auto& [id, d] : session.decisions()) {
    ++a.coded;
    const auto display = display_code(d.code);
    if (is_actionable_display_code(display)) {
      ++a.actionable;
      ++a.by_code[display];
    }
  }
  return a;
}

const Fraction& ComparisonMatrix::at(std::string_view row, std::string_view column) const {
  auto r = std::ranges::find(rows, row);
  auto c = std::ranges::find(columns, column);
  if (r == rows.end() || c == columns.end()) {
    throw Error(Errc::not_found, "no cell " + std::string(row) + "/" + std::string(column));
  }
  return cells[static_cast<std::size_t>(r - rows.begin())][static_cast<std::size_t>(c - columns.begin())];
}

ComparisonMatrix compare(std::span<const CompareInput> inputs) {
  if (inputs.empty()) throw Error(Errc::validation, "compare needs at least one session");
  const auto reference = leaf_ids(inputs.front().session->tree());
  ComparisonMatrix m;
  for (auto code : display_codes()) m.rows.emplace_back(code);
  m.rows.emplace_back(kActionableRow);
  m.cells.assign(m.rows.size(), {});

  for (const auto& in : inputs) {
    if (leaf_ids(in.session->tree()) != reference) {
      throw Error(Errc::mismatch, "session " + in.session->id() + " uses a different code taxonomy");
    }
    const auto report = frequency_table(*in.session, *in.dataset);
    m.columns.push_back(in.label.empty() ? in.session->id() : in.label);
    for (std::size_t r = 0; r + 1 < m.rows.size(); ++r) m.cells[r].push_back(report.proportion(m.rows[r]));
    m.cells.back().push_back(report.actionable_fraction());
  }
  return m;
}

// ---------------------------------------------------------------------------

std::string_view to_string(FlowMode mode) noexcept {
  return mode == FlowMode::recorded_paths ? "recorded-paths" : "inferred-from-codes";
}

FlowMode parse_flow_mode(std::string_view text) {
  if (text == "recorded-paths" || text == "recorded") return FlowMode::recorded_paths;
  if (text == "inferred-from-codes" || text == "inferred") return FlowMode::inferred_from_codes;
  throw Error(Errc::validation, "unknown flow mode \"" + std::string(text) + "\"");
}

const QuestionFlow& FlowStats::at(std::string_view question) const {
  auto it = per_question.find(QuestionId{std::string(question)});
  if (it == per_question.end()) throw Error(Errc::not_found, "no flow entry for " + std::string(question));
  return it->second;
}

FlowStats question_flow_stats(const Session& session, FlowMode mode) {
  const auto& tree = session.tree();
  FlowStats stats;
  stats.mode = mode;
  stats.dataset_id = session.dataset_id();
  stats.item_count = session.item_ids().size();
  stats.coded_count = session.decisions().size();
  for (const auto& q : tree.questions()) {
    stats.order.push_back(q.id);
    stats.per_question[q.id] = {};
  }

  if (mode == FlowMode::recorded_paths) {
    for (const auto& [id, d] : session.decisions()) {
      if (d.pathless) {
        throw Error(Errc::unavailable, "recorded-paths flow statistics need answer paths; decision for " + id +
                                           " was imported without one");
      }
    }
    auto tally = [&](const std::vector<AnswerStep>& path) {
      for (const auto& s : path) {
        auto& f = stats.per_question[s.question];
        ++f.reached;
        ++(s.answer == Answer::yes ? f.yes : f.no);
      }
    };
    for (const auto& [id, d] : session.decisions()) tally(d.path);
    // In-progress items reached their current question without answering it.
    for (const auto& [id, path] : session.in_progress()) {
      tally(path);
      const auto walk = replay_path(tree, path);
      if (const auto* q = std::get_if<QuestionId>(&walk.position)) ++stats.per_question[*q].reached;
    }
    return stats;
  }

  // Inferred: a code pins a question only when every leaf position carrying
  // that code agrees on it.
  std::map<CodeId, std::vector<TreePath>> paths_by_code;
  for (auto& p : enumerate_paths(tree)) paths_by_code[p.leaf].push_back(std::move(p));

  for (const auto& [id, d] : session.decisions()) {
    const auto& paths = paths_by_code[d.code];
    for (const auto& q : tree.questions()) {
      std::size_t visits = 0;
      std::set<Answer> answers;
      for (const auto& p : paths) {
        auto s = std::ranges::find(p.steps, q.id, &AnswerStep::question);
        if (s != p.steps.end()) {
          ++visits;
          answers.insert(s->answer);
        }
      }
      auto& f = stats.per_question[q.id];
      if (visits == 0) continue;
      if (visits < paths.size()) {
        ++f.unknown;
        continue;
      }
      ++f.reached;
      if (answers.size() == 1) ++(*answers.begin() == Answer::yes ? f.yes : f.no);
      else ++f.unknown;
    }
  }

  for (const auto& fig : kPublishedFlow) {
    if (fig.dataset_id != stats.dataset_id) continue;
    auto it = stats.per_question.find(QuestionId{std::string(fig.question)});
    if (it == stats.per_question.end()) continue;
    const Fraction share{it->second.yes, stats.item_count};
    std::string note = std::string(fig.question) + " yes inferred from codes: " + std::to_string(it->second.yes) +
                       " of " + std::to_string(stats.item_count) + " (" + share.percent() + "%); published figure: " +
                       std::string(fig.printed);
    if (fig.yes_count != 0 && fig.yes_count != it->second.yes) {
      note += " (differs by " +
              std::to_string(it->second.yes > fig.yes_count ? it->second.yes - fig.yes_count
                                                             : fig.yes_count - it->second.yes) +
              "; not reconciled)";
    }
    stats.notes.push_back(std::move(note));
  }
  return stats;
}

// ---------------------------------------------------------------------------

Agreement agreement(const Session& a, const Session& b) {
  if (a.dataset_id() != b.dataset_id()) {
    throw Error(Errc::mismatch, "sessions code different datasets (" + a.dataset_id() + ", " + b.dataset_id() + ")");
  }
  Agreement result;
  std::map<std::string, std::size_t> margin_a;
  std::map<std::string, std::size_t> margin_b;
  for (const auto& [id, da] : a.decisions()) {
    auto it = b.decisions().find(id);
    if (it == b.decisions().end()) continue;
    const auto ca = display_code(da.code);
    const auto cb = display_code(it->second.code);
    ++result.overlap;
    if (ca == cb) ++result.agreed;
    ++margin_a[ca];
    ++margin_b[cb];
    ++result.confusion[ca][cb];
  }
  if (result.overlap == 0) throw Error(Errc::conflict, "sessions have no commonly coded items");

  const double n = static_cast<double>(result.overlap);
  const double observed = static_cast<double>(result.agreed) / n;
  double expected = 0.0;
  for (const auto& [code, count] : margin_a) {
    auto it = margin_b.find(code);
    if (it != margin_b.end()) expected += (static_cast<double>(count) / n) * (static_cast<double>(it->second) / n);
  }
  result.percent = 100.0 * observed;
  if (expected < 1.0) {
    result.kappa = (observed - expected) / (1.0 - expected);
  } else if (result.agreed == result.overlap) {
    result.kappa = 1.0;
  }
  return result;
}

}  // namespace sacoding
