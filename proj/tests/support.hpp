#pragma once

// Test-only helpers: generators and oracles that deliberately avoid the
// library's own traversal and tallying code paths.

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacoding/bundled.hpp"
#include "sacoding/coding_tree.hpp"
#include "sacoding/corpus.hpp"
#include "sacoding/session.hpp"

namespace sacoding::testing {

inline nlohmann::json default_tree_json() { return nlohmann::json::parse(bundled::tree_document()); }

inline nlohmann::json& question_json(nlohmann::json& tree, const std::string& id) {
  for (auto& q : tree["questions"]) {
    if (q["id"] == id) return q;
  }
  throw std::runtime_error("no question " + id);
}

inline const Dataset& dataset(const std::string& id) {
  const auto* d = find_bundled_dataset(id);
  if (!d) throw std::runtime_error("no bundled dataset " + id);
  return *d;
}

inline Session appendix_replay(const std::string& dataset_id) {
  const auto* coding = bundled_coding_for(dataset_id);
  SessionOptions options;
  options.session_id = dataset_id;
  return import_recorded_codes(dataset(dataset_id), default_tree(), coding->assignments, "recorded", options);
}

/// Walks the tree question by question from a raw answer sequence, reading
/// edges straight from the definition rather than through step().
inline std::pair<std::string, std::size_t> walk_definition(const nlohmann::json& tree,
                                                           const std::vector<bool>& answers) {
  std::map<std::string, std::pair<std::string, std::string>> edges;
  for (const auto& q : tree["questions"]) edges[q["id"]] = {q["yes"], q["no"]};
  std::string at = tree["root"];
  std::size_t used = 0;
  while (edges.contains(at) && used < answers.size()) {
    at = answers[used] ? edges[at].first : edges[at].second;
    ++used;
  }
  return {at, used};
}

/// Random answer sequence of the given length.
inline std::vector<Answer> random_answers(std::mt19937& rng, std::size_t length) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Answer> out(length);
  for (auto& a : out) a = coin(rng) ? Answer::yes : Answer::no;
  return out;
}

/// A randomized session over `dataset`: some items coded through the tree,
/// some recorded pathless, some left in progress, with occasional undos.
inline Session random_session(std::mt19937& rng, const Dataset& dataset, const std::string& id) {
  SessionOptions options;
  options.session_id = id;
  options.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  Session s = Session::create(dataset, default_tree(), "random-coder", options);
  std::uniform_int_distribution<int> mode(0, 9);
  std::uniform_int_distribution<std::size_t> code_pick(0, taxonomy().size() - 1);
  for (const auto& item : dataset.items()) {
    const int m = mode(rng);
    if (m == 0) continue;  // untouched
    if (m <= 2) {
      s.record(item.item_id, CodeId{std::string(taxonomy()[code_pick(rng)].id)});
      continue;
    }
    for (Answer a : random_answers(rng, 12)) {
      if (s.answer(item.item_id, a).finalized()) break;
      if (mode(rng) == 0) s.undo(item.item_id);
    }
    const auto st = s.state(item.item_id);
    if (m == 9 && (st.decision || !st.path.empty())) s.undo(item.item_id);  // leaves some in progress
    if (st.decision && st.decision->code.str() == "M1" && mode(rng) < 5) {
      if (s.decisions().contains(item.item_id)) s.set_supplementary_tags(item.item_id, {"Unfocused"});
    }
  }
  return s;
}

/// Synthetic dataset with `n` items spread over `k` categories.
inline Dataset synthetic_dataset(std::mt19937& rng, std::size_t n, std::size_t k, const std::string& id = "synthetic") {
  std::vector<Category> cats;
  for (std::size_t c = 0; c < k; ++c) cats.push_back({"C" + std::to_string(c + 1), "Category " + std::to_string(c + 1)});
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<AdviceItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<std::string> notes;
    if (i % 3 == 0) notes = "note, with \"quotes\"\nand a newline";
    items.push_back({"it-" + std::to_string(i + 1), cats[pick(rng)].category_id,
                     "Advice text " + std::to_string(i + 1) + ", with a comma", notes});
  }
  return Dataset::build(id, "Synthetic " + id, std::move(cats), std::move(items));
}

/// Naive recount oracle: one pass over the items, tallying per category and in
/// total with T/Tprime merged by string comparison.
struct Recount {
  std::map<std::string, std::map<std::string, std::size_t>> per_category;
  std::map<std::string, std::size_t> totals;
  std::size_t coded = 0;
  std::size_t actionable = 0;
};

inline Recount recount(const Session& s, const Dataset& d) {
  Recount r;
  for (const auto& item : d.items()) {
    auto it = s.decisions().find(item.item_id);
    if (it == s.decisions().end()) continue;
    std::string code = it->second.code.str();
    if (code == "Tprime") code = "T";
    ++r.per_category[item.category_id][code];
    ++r.totals[code];
    ++r.coded;
    if (code == "P3" || code == "P4" || code == "P5" || code == "P6") ++r.actionable;
  }
  return r;
}

/// Cohen's kappa from an explicit confusion matrix, exact rational arithmetic.
/// Returns {numerator, denominator} of kappa.
inline std::pair<long long, long long> kappa_oracle(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::set<std::string> labels;
  for (const auto& [a, b] : pairs) {
    labels.insert(a);
    labels.insert(b);
  }
  std::vector<std::string> index(labels.begin(), labels.end());
  const std::size_t k = index.size();
  std::vector<std::vector<long long>> m(k, std::vector<long long>(k, 0));
  auto pos = [&](const std::string& s) {
    return static_cast<std::size_t>(std::find(index.begin(), index.end(), s) - index.begin());
  };
  for (const auto& [a, b] : pairs) ++m[pos(a)][pos(b)];
  const long long n = static_cast<long long>(pairs.size());
  long long diag = 0;
  for (std::size_t i = 0; i < k; ++i) diag += m[i][i];
  long long chance = 0;  // sum of row_i * col_i
  for (std::size_t i = 0; i < k; ++i) {
    long long row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += m[i][j];
      col += m[j][i];
    }
    chance += row * col;
  }
  // kappa = (po - pe) / (1 - pe) with po = diag/n, pe = chance/n^2
  long long num = diag * n - chance;
  long long den = n * n - chance;
  const long long g = std::gcd(num < 0 ? -num : num, den);
  return {num / g, den / g};
}

}  // namespace sacoding::testing
