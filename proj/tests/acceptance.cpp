// Acceptance suite: one PASS/FAIL line per criterion; non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sacoding/analytics.hpp"
#include "support.hpp"

using namespace sacoding;
namespace t = sacoding::testing;

namespace {

// Collects failed expectations for one criterion.
class Probe {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  template <class A, class B>
  void equal(const A& actual, const B& expected, const std::string& what) {
    std::ostringstream msg;
    msg << what << ": got " << actual << ", want " << expected;
    expect(actual == expected, msg.str());
  }
  bool ok() const { return failed_ == 0; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

FrequencyReport replay_report(const std::string& dataset_id) {
  return frequency_table(t::appendix_replay(dataset_id), t::dataset(dataset_id));
}

void table3(Probe& p) {
  const auto start = Clock::now();
  const auto r = replay_report("etsi");
  const double elapsed = seconds_since(start);
  const std::vector<std::pair<std::string, std::pair<std::size_t, std::string>>> expected{
      {"P1", {23, "34.3"}}, {"P2", {7, "10.4"}}, {"P4", {1, "1.5"}}, {"P5", {28, "41.8"}},
      {"T", {5, "7.5"}},    {"N1.1", {2, "3.0"}}, {"M1", {1, "1.5"}}};
  std::size_t listed = 0;
  for (const auto& [code, want] : expected) {
    p.equal(r.totals.at(code), want.first, code + " count");
    p.equal(r.proportion(code).percent(), want.second, code + " %");
    listed += want.first;
  }
  p.equal(r.coded_count, 67u, "coded");
  p.equal(listed, r.coded_count, "no other codes");
  p.equal(r.actionable_fraction().percent(), "43.3", "actionable %");
  p.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + " s");
}

void table2(Probe& p) {
  const auto start = Clock::now();
  const auto sub = replay_report("dcms-sub");
  const auto full = replay_report("dcms-full");
  const double elapsed = seconds_since(start);
  const std::vector<std::pair<std::string, std::pair<std::size_t, std::string>>> sub_expected{
      {"P1", {11, "39.3"}}, {"P2", {2, "7.1"}}, {"P5", {7, "25.0"}}, {"N1.1", {1, "3.6"}}, {"T", {7, "25.0"}}};
  for (const auto& [code, want] : sub_expected) {
    p.equal(sub.totals.at(code), want.first, "sub " + code + " count");
    p.equal(sub.proportion(code).percent(), want.second, "sub " + code + " %");
  }
  p.equal(sub.coded_count, 28u, "sub coded");
  const std::map<std::string, std::size_t> full_expected{{"M1", 9}, {"P1", 2}, {"P5", 1}, {"N1.1", 1}};
  std::size_t listed = 0;
  for (const auto& [code, n] : full_expected) {
    p.equal(full.totals.at(code), n, "full " + code + " count");
    listed += n;
  }
  p.equal(listed, full.coded_count, "full no other codes");
  p.equal(full.actionable_count, 1u, "full actionable count");
  p.equal(full.actionable_fraction().percent(), "7.7", "full actionable %");
  p.equal(full.proportion("P1").percent(), "15.4", "full P1 %");
  p.expect(elapsed < 1.0, "runtime " + std::to_string(elapsed) + " s");
}

void zero_bars(Probe& p) {
  const auto full = t::appendix_replay("dcms-full");
  const auto sub = t::appendix_replay("dcms-sub");
  const auto etsi = t::appendix_replay("etsi");
  const std::vector<CompareInput> inputs{{&full, &t::dataset("dcms-full"), ""},
                                         {&sub, &t::dataset("dcms-sub"), ""},
                                         {&etsi, &t::dataset("etsi"), ""}};
  const auto m = compare(inputs);
  p.equal(m.columns.size(), 3u, "columns");
  for (const auto& col : m.columns) {
    for (const char* code : {"M2", "P3", "P6"}) {
      const auto& f = m.at(code, col);
      p.expect(f.defined() && f.num == 0, std::string(code) + " in " + col + " is " + f.percent());
    }
  }
}

void flow(Probe& p) {
  const auto etsi = question_flow_stats(t::appendix_replay("etsi"), FlowMode::inferred_from_codes);
  p.equal(etsi.at("Q4").yes, 52u, "etsi Q4 yes");
  p.equal(Fraction{etsi.at("Q4").yes, 67}.percent(), "77.6", "etsi Q4 %");
  p.equal(etsi.at("Q5").yes, 29u, "etsi Q5 yes");
  p.equal(Fraction{etsi.at("Q5").yes, 67}.percent(), "43.3", "etsi Q5 %");

  const auto sub = question_flow_stats(t::appendix_replay("dcms-sub"), FlowMode::inferred_from_codes);
  p.equal(sub.at("Q4").yes, 18u, "sub Q4 yes");
  bool noted = false;
  for (const auto& n : sub.notes) noted = noted || n.find("17 of 28") != std::string::npos;
  p.expect(noted, "sub note mentions the printed 17 of 28");
  const auto text = emit_report(sub, ReportFormat::table);
  p.expect(text.find("17 of 28") != std::string::npos, "note rendered in the table output");
}

// Structural invariants checked directly on the definition document.
void definition_invariants(Probe& p) {
  const auto doc = t::default_tree_json();
  std::map<std::string, std::vector<std::string>> children;
  for (const auto& q : doc["questions"]) children[q["id"]] = {q["yes"], q["no"]};
  std::set<std::string> leaves;
  for (const auto& l : doc["leaves"]) leaves.insert(l["id"]);

  std::map<std::string, int> parents;
  std::set<std::string> reached_leaves;
  std::size_t visited = 0;
  std::vector<std::pair<std::string, std::size_t>> stack{{doc["root"], 0}};
  std::size_t max_depth = 0;
  while (!stack.empty()) {
    auto [node, depth] = stack.back();
    stack.pop_back();
    if (++visited > 1000) {
      p.expect(false, "definition is not a finite tree");
      return;
    }
    if (auto it = children.find(node); it != children.end()) {
      for (const auto& c : it->second) {
        ++parents[c];
        stack.push_back({c, depth + 1});
      }
    } else {
      p.expect(leaves.contains(node), "edge to undeclared node " + node);
      reached_leaves.insert(node);
      max_depth = std::max(max_depth, depth);
    }
  }
  p.equal(children.size(), 11u, "questions");
  p.equal(leaves.size(), 12u, "declared leaves");
  p.equal(reached_leaves.size(), 12u, "reachable leaves");
  for (const auto& [q, _] : children) {
    if (q != doc["root"]) p.equal(parents[q], 1, "parents of " + q);
  }
  for (const auto& l : leaves) p.equal(parents[l], 1, "leaf positions of " + l);
  p.expect(max_depth <= 11, "depth bound");

  std::set<std::string> actionable;
  for (const auto& l : doc["leaves"]) {
    if (l["actionable"].get<bool>()) actionable.insert(l["id"]);
  }
  p.expect(actionable == std::set<std::string>{"P3", "P4", "P5", "P6"}, "actionable set is P3..P6");
}

void tree_properties(Probe& p) {
  definition_invariants(p);
  const auto tree = default_tree();
  const auto paths = enumerate_paths(*tree);
  p.equal(paths.size(), 12u, "enumerated paths");
  std::set<std::string> covered;
  for (const auto& path : paths) covered.insert(path.leaf.str());
  p.equal(covered.size(), 12u, "leaf codes covered");

  // 1,000 random answer sequences, each driven through step() and a session.
  std::mt19937 rng(1000);
  const auto items = t::synthetic_dataset(rng, 1000, 5, "walks");
  auto session = Session::create(items, tree, "walker");
  const auto doc = t::default_tree_json();
  for (const auto& item : items.items()) {
    const auto answers = t::random_answers(rng, 11);
    NodeRef at = tree->root();
    std::size_t steps = 0;
    for (Answer a : answers) {
      const auto* q = std::get_if<QuestionId>(&at);
      if (!q) break;
      at = step(*tree, *q, a);
      session.answer(item.item_id, a);
      ++steps;
    }
    p.expect(is_leaf(at), item.item_id + " did not reach a leaf in 11 steps");
    p.expect(steps <= 11, item.item_id + " took more than 11 steps");
    std::vector<bool> bits;
    for (Answer a : answers) bits.push_back(a == Answer::yes);
    const auto [oracle_leaf, used] = t::walk_definition(doc, bits);
    p.expect(is_leaf(at) && std::get<CodeId>(at).str() == oracle_leaf && used == steps,
             item.item_id + " disagrees with the definition walk");
  }
  p.equal(session.decisions().size(), 1000u, "finalized decisions");
  p.equal(path_inconsistencies(session).size(), 0u, "path-inconsistent decisions");

  // Recount oracle on 100 randomized sessions.
  std::uniform_int_distribution<std::size_t> n(0, 60), k(1, 8);
  for (int i = 0; i < 100; ++i) {
    const auto d = t::synthetic_dataset(rng, n(rng), k(rng), "syn-" + std::to_string(i));
    const auto s = t::random_session(rng, d, "r" + std::to_string(i));
    const auto r = frequency_table(s, d);
    auto oracle = t::recount(s, d);
    bool same = r.coded_count == oracle.coded && r.actionable_count == oracle.actionable;
    for (const auto& [code, count] : r.totals) {
      const auto it = oracle.totals.find(code);
      same = same && count == (it == oracle.totals.end() ? 0 : it->second);
    }
    for (const auto& cat : r.per_category) {
      for (const auto& [code, count] : oracle.per_category[cat.category_id]) {
        const auto it = cat.counts.find(code);
        same = same && it != cat.counts.end() && it->second == count;
      }
    }
    same = same && path_inconsistencies(s).empty();
    p.expect(same, "recount mismatch in session " + s.id());
  }
}

void round_trips(Probe& p) {
  std::size_t cases = 0;
  for (const auto& d : bundled_datasets()) {
    p.expect(parse_dataset(export_dataset(d)) == d, d.id() + " json round-trip");
    p.expect(parse_dataset_csv(export_dataset_csv(d)) == d, d.id() + " csv round-trip");
    const auto s = t::appendix_replay(d.id());
    const auto doc = checkpoint(s);
    const auto back = restore(doc, d, default_tree());
    p.expect(back.same_state(s) && checkpoint(back) == doc, d.id() + " checkpoint round-trip");
    cases += 3;
  }
  std::mt19937 rng(475);
  std::uniform_int_distribution<std::size_t> n(0, 60), k(1, 8);
  for (int i = 0; i < 100; ++i) {
    const auto d = t::synthetic_dataset(rng, n(rng), k(rng), "syn-" + std::to_string(i));
    p.expect(parse_dataset(export_dataset(d)) == d, d.id() + " json round-trip");
    p.expect(parse_dataset_csv(export_dataset_csv(d)) == d, d.id() + " csv round-trip");
    const auto s = t::random_session(rng, d, "r" + std::to_string(i));
    const auto doc = checkpoint(s);
    const auto back = restore(doc, d, default_tree());
    p.expect(back.same_state(s) && back.events() == s.events() && checkpoint(back) == doc,
             s.id() + " checkpoint round-trip");
    cases += 3;
  }
  p.expect(cases >= 300, "case count");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Probe&)>>> criteria{
      {"ETSI provisions frequency table", table3},
      {"DCMS sub-topic and full-guideline tables", table2},
      {"codes never assigned in any dataset show zero bars", zero_bars},
      {"inferred question-flow statistics", flow},
      {"coding-tree property suite", tree_properties},
      {"dataset and session round-trips", round_trips},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Probe probe;
    try {
      run(probe);
    } catch (const std::exception& e) {
      probe.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  %s\n", probe.ok() ? "PASS" : "FAIL", name.c_str());
    for (const auto& f : probe.failures()) std::printf("      %s\n", f.c_str());
    failed += probe.ok() ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
