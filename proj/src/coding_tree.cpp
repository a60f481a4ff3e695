#include "sacoding/coding_tree.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <set>

#include <json.hpp>

#include "sacoding/bundled.hpp"

namespace sacoding {

namespace {

constexpr std::array<TaxonomyEntry, 12> kTaxonomy{{
    {"M1", "M1", false},   {"M2", "M2", false},   {"N1", "N1", false},
    {"N1.1", "N1.1", false}, {"T", "T", false},   {"Tprime", "T", false},
    {"P1", "P1", false},   {"P2", "P2", false},   {"P3", "P3", true},
    {"P4", "P4", true},    {"P5", "P5", true},    {"P6", "P6", true},
}};

// Column order of the published frequency tables, with unused codes slotted in.
constexpr std::array<std::string_view, 11> kDisplayCodes{
    "P1", "P2", "P3", "P4", "P5", "P6", "T", "N1", "N1.1", "M1", "M2"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(),
                         [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void invalid(const std::string& what) {
  throw Error(Errc::validation, "invalid tree: " + what);
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io, "sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

NodeRef resolve_ref(const std::string& name, const std::set<std::string>& question_ids) {
  if (question_ids.contains(name)) return QuestionId{name};
  return CodeId{name};
}

}  // namespace

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::parse: return "parse_error";
    case Errc::validation: return "validation_error";
    case Errc::not_found: return "not_found";
    case Errc::conflict: return "conflict";
    case Errc::mismatch: return "mismatch";
    case Errc::unavailable: return "unavailable";
    case Errc::io: return "io_error";
  }
  return "error";
}

std::string_view to_string(Answer answer) noexcept {
  return answer == Answer::yes ? "yes" : "no";
}

Answer parse_answer(std::string_view text) {
  const auto s = lower(trim(text));
  if (s == "yes" || s == "y") return Answer::yes;
  if (s == "no" || s == "n") return Answer::no;
  throw Error(Errc::validation, "answer must be \"yes\" or \"no\", got \"" + std::string(text) + "\"");
}

const std::string& node_name(const NodeRef& ref) noexcept {
  return std::visit([](const auto& id) -> const std::string& { return id.str(); }, ref);
}

std::span<const TaxonomyEntry> taxonomy() noexcept { return kTaxonomy; }

const TaxonomyEntry* find_taxonomy_entry(std::string_view id) noexcept {
  auto it = std::ranges::find(kTaxonomy, id, &TaxonomyEntry::id);
  return it == kTaxonomy.end() ? nullptr : &*it;
}

std::span<const std::string_view> display_codes() noexcept { return kDisplayCodes; }

std::string display_code(const CodeId& code) {
  if (const auto* entry = find_taxonomy_entry(code.str())) return std::string(entry->display);
  return code.str();
}

CodeId parse_code(std::string_view text) {
  auto s = trim(text);
  if (!s.empty() && s.front() == '*') s.remove_prefix(1);
  if (s == "T'" || s == "T′") return CodeId{"Tprime"};
  for (const auto& entry : kTaxonomy) {
    if (lower(entry.id) == lower(s)) return CodeId{std::string(entry.id)};
  }
  throw Error(Errc::validation, "unknown code \"" + std::string(text) + "\"");
}

bool is_actionable_display_code(std::string_view display) noexcept {
  return std::ranges::any_of(kTaxonomy, [&](const TaxonomyEntry& e) {
    return e.display == display && e.actionable;
  });
}

// ---------------------------------------------------------------------------

CodingTree CodingTree::build(QuestionId root, std::vector<Question> questions,
                             std::vector<LeafCode> leaves, LoadOptions options) {
  CodingTree tree;
  tree.root_ = std::move(root);
  tree.questions_ = std::move(questions);
  tree.leaves_ = std::move(leaves);

  for (std::size_t i = 0; i < tree.questions_.size(); ++i) {
    const auto& q = tree.questions_[i];
    if (q.id.empty()) invalid("question with empty id");
    if (find_taxonomy_entry(q.id.str())) invalid("question id " + q.id.str() + " collides with a leaf code");
    if (q.text.empty()) invalid("question " + q.id.str() + " has empty text");
    if (!tree.question_index_.emplace(q.id, i).second) invalid("duplicate question " + q.id.str());
  }
  for (std::size_t i = 0; i < tree.leaves_.size(); ++i) {
    const auto& leaf = tree.leaves_[i];
    const auto* entry = find_taxonomy_entry(leaf.id.str());
    if (!entry) invalid("unknown leaf code " + leaf.id.str());
    if (leaf.actionable != entry->actionable) {
      invalid("leaf " + leaf.id.str() + " must be " + (entry->actionable ? "actionable" : "non-actionable"));
    }
    if (leaf.label.empty()) invalid("leaf " + leaf.id.str() + " has empty label");
    if (!tree.leaf_index_.emplace(leaf.id, i).second) invalid("duplicate leaf " + leaf.id.str());
  }

  if (!tree.has_question(tree.root_)) invalid("root " + tree.root_.str() + " is not a question");

  for (const auto& q : tree.questions_) {
    for (const auto& [edge, target] : {std::pair{"yes", &q.yes}, std::pair{"no", &q.no}}) {
      const bool resolves = std::visit(
          [&](const auto& id) {
            using T = std::decay_t<decltype(id)>;
            if constexpr (std::is_same_v<T, QuestionId>) return tree.has_question(id);
            else return tree.has_leaf(id);
          },
          *target);
      if (!resolves) {
        invalid("dangling reference " + q.id.str() + "." + edge + " -> " + node_name(*target));
      }
    }
  }

  // Depth-first walk from the root: detects cycles and shared subtrees.
  std::map<QuestionId, int> colour;  // 1 = on stack, 2 = done
  std::set<CodeId> reached_leaves;
  std::size_t leaf_positions = 0;
  std::function<void(const QuestionId&)> visit = [&](const QuestionId& id) {
    colour[id] = 1;
    const auto& q = tree.question(id);
    for (const NodeRef* target : {&q.yes, &q.no}) {
      if (const auto* code = std::get_if<CodeId>(target)) {
        reached_leaves.insert(*code);
        ++leaf_positions;
        continue;
      }
      const auto& next = std::get<QuestionId>(*target);
      if (next == tree.root_) invalid("cycle through root " + next.str());
      auto it = colour.find(next);
      if (it != colour.end()) {
        if (it->second == 1) invalid("cycle through " + next.str());
        invalid("question " + next.str() + " has more than one parent");
      }
      visit(next);
    }
    colour[id] = 2;
  };
  visit(tree.root_);

  for (const auto& q : tree.questions_) {
    if (!colour.contains(q.id)) invalid("unreachable question " + q.id.str());
  }
  for (const auto& leaf : tree.leaves_) {
    if (!reached_leaves.contains(leaf.id)) invalid("unreachable leaf " + leaf.id.str());
  }
  if (options.require_complete_taxonomy) {
    for (const auto& entry : kTaxonomy) {
      if (!reached_leaves.contains(CodeId{std::string(entry.id)})) {
        invalid("missing leaf " + std::string(entry.id));
      }
    }
  }
  if (leaf_positions != tree.questions_.size() + 1) {
    invalid("leaf positions (" + std::to_string(leaf_positions) + ") != questions + 1 (" +
            std::to_string(tree.questions_.size() + 1) + ")");
  }

  tree.fingerprint_ = sha256_hex(dump_tree(tree));
  return tree;
}

bool CodingTree::has_question(const QuestionId& id) const noexcept {
  return question_index_.contains(id);
}

bool CodingTree::has_leaf(const CodeId& id) const noexcept { return leaf_index_.contains(id); }

const Question& CodingTree::question(const QuestionId& id) const {
  auto it = question_index_.find(id);
  if (it == question_index_.end()) throw Error(Errc::not_found, "unknown question " + id.str());
  return questions_[it->second];
}

const LeafCode& CodingTree::leaf(const CodeId& id) const {
  auto it = leaf_index_.find(id);
  if (it == leaf_index_.end()) throw Error(Errc::not_found, "unknown leaf code " + id.str());
  return leaves_[it->second];
}

// ---------------------------------------------------------------------------

CodingTree load_tree(std::string_view document, LoadOptions options) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, std::string("tree definition: ") + e.what());
  }

  try {
    if (!doc.is_object()) throw Error(Errc::parse, "tree definition: top level must be an object");
    if (auto it = doc.find("schema"); it != doc.end() && it->get<std::string>() != "sacoding-tree/1") {
      throw Error(Errc::parse, "tree definition: unsupported schema " + it->get<std::string>());
    }

    std::set<std::string> question_ids;
    for (const auto& q : doc.at("questions")) question_ids.insert(q.at("id").get<std::string>());

    std::vector<Question> questions;
    for (const auto& q : doc.at("questions")) {
      questions.push_back(Question{
          QuestionId{q.at("id").get<std::string>()},
          q.at("text").get<std::string>(),
          resolve_ref(q.at("yes").get<std::string>(), question_ids),
          resolve_ref(q.at("no").get<std::string>(), question_ids),
      });
    }
    std::vector<LeafCode> leaves;
    for (const auto& l : doc.at("leaves")) {
      leaves.push_back(LeafCode{
          CodeId{l.at("id").get<std::string>()},
          l.at("label").get<std::string>(),
          l.at("actionable").get<bool>(),
          l.value("definition", std::string{}),
      });
    }
    return CodingTree::build(QuestionId{doc.at("root").get<std::string>()}, std::move(questions),
                             std::move(leaves), options);
  } catch (const json::exception& e) {
    throw Error(Errc::parse, std::string("tree definition: ") + e.what());
  }
}

std::string dump_tree(const CodingTree& tree) {
  nlohmann::ordered_json doc;
  doc["schema"] = "sacoding-tree/1";
  doc["root"] = tree.root().str();
  auto& questions = doc["questions"] = nlohmann::ordered_json::array();
  for (const auto& q : tree.questions()) {
    questions.push_back({{"id", q.id.str()}, {"text", q.text}, {"yes", node_name(q.yes)}, {"no", node_name(q.no)}});
  }
  auto& leaves = doc["leaves"] = nlohmann::ordered_json::array();
  for (const auto& l : tree.leaves()) {
    leaves.push_back({{"id", l.id.str()}, {"label", l.label}, {"actionable", l.actionable},
                      {"definition", l.definition}});
  }
  return doc.dump(2) + "\n";
}

std::shared_ptr<const CodingTree> default_tree() {
  static const auto tree = std::make_shared<const CodingTree>(load_tree(bundled::tree_document()));
  return tree;
}

NodeRef step(const CodingTree& tree, const QuestionId& at, Answer answer) {
  const auto& q = tree.question(at);
  return answer == Answer::yes ? q.yes : q.no;
}

bool classify_actionable(const LeafCode& code) noexcept {
  const auto* entry = find_taxonomy_entry(code.id.str());
  return entry ? entry->actionable : false;
}

std::vector<TreePath> enumerate_paths(const CodingTree& tree) {
  std::vector<TreePath> paths;
  std::vector<AnswerStep> prefix;
  std::function<void(const QuestionId&)> walk = [&](const QuestionId& at) {
    for (Answer a : {Answer::yes, Answer::no}) {
      prefix.push_back({at, a});
      const NodeRef next = step(tree, at, a);
      if (const auto* code = std::get_if<CodeId>(&next)) {
        paths.push_back({prefix, *code});
      } else {
        walk(std::get<QuestionId>(next));
      }
      prefix.pop_back();
    }
  };
  walk(tree.root());
  return paths;
}

Traversal replay_path(const CodingTree& tree, std::span<const AnswerStep> steps) {
  Traversal t{tree.root(), 0};
  for (const auto& s : steps) {
    const auto* at = std::get_if<QuestionId>(&t.position);
    if (!at) break;
    if (s.question != *at) {
      throw Error(Errc::validation, "path step names " + s.question.str() + " but traversal is at " + at->str());
    }
    t.position = step(tree, *at, s.answer);
    ++t.consumed;
  }
  return t;
}

}  // namespace sacoding
