#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sacoding/error.hpp"

namespace sacoding {

/// String identifier tagged with the domain it belongs to, so a question id
/// can never be passed where a code id is expected.
template <class Tag>
class BasicId {
 public:
  BasicId() = default;
  explicit BasicId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const BasicId&, const BasicId&) = default;
  friend bool operator==(const BasicId&, const BasicId&) = default;

 private:
  std::string value_;
};

using QuestionId = BasicId<struct QuestionIdTag>;
using CodeId = BasicId<struct CodeIdTag>;

enum class Answer { yes, no };

std::string_view to_string(Answer answer) noexcept;
/// Accepts "yes"/"no" and "y"/"n" (case-insensitive). Throws Errc::validation.
Answer parse_answer(std::string_view text);

/// Edge target: either another question or a leaf code.
using NodeRef = std::variant<QuestionId, CodeId>;

inline bool is_leaf(const NodeRef& ref) noexcept {
  return std::holds_alternative<CodeId>(ref);
}
const std::string& node_name(const NodeRef& ref) noexcept;

struct Question {
  QuestionId id;
  std::string text;
  NodeRef yes;
  NodeRef no;
};

struct LeafCode {
  CodeId id;
  std::string label;
  bool actionable = false;
  std::string definition;
};

struct AnswerStep {
  QuestionId question;
  Answer answer;

  friend bool operator==(const AnswerStep&, const AnswerStep&) = default;
};

// ---------------------------------------------------------------------------
// The fixed twelve-code taxonomy.

struct TaxonomyEntry {
  std::string_view id;
  std::string_view display;  // reporting column (T and Tprime share "T")
  bool actionable;
};

/// All twelve codes in canonical order.
std::span<const TaxonomyEntry> taxonomy() noexcept;
const TaxonomyEntry* find_taxonomy_entry(std::string_view id) noexcept;

/// Reporting columns: the eleven distinct display codes, in table order.
std::span<const std::string_view> display_codes() noexcept;

/// Maps a code to its reporting column ("Tprime" -> "T").
std::string display_code(const CodeId& code);

/// Parses a user-written code. "T'" and "Tprime" both mean Tprime; surrounding
/// whitespace and a leading '*' are ignored. Throws Errc::validation.
CodeId parse_code(std::string_view text);

bool is_actionable_display_code(std::string_view display) noexcept;

// ---------------------------------------------------------------------------

struct LoadOptions {
  /// When set, every one of the twelve taxonomy codes must be a reachable leaf.
  bool require_complete_taxonomy = true;
};

/// Immutable, validated binary decision tree.
class CodingTree {
 public:
  /// Validates and builds. Throws Errc::validation naming the first violated
  /// invariant.
  static CodingTree build(QuestionId root, std::vector<Question> questions,
                          std::vector<LeafCode> leaves, LoadOptions options = {});

  const QuestionId& root() const noexcept { return root_; }
  std::span<const Question> questions() const noexcept { return questions_; }
  std::span<const LeafCode> leaves() const noexcept { return leaves_; }

  bool has_question(const QuestionId& id) const noexcept;
  bool has_leaf(const CodeId& id) const noexcept;
  /// Throws Errc::not_found.
  const Question& question(const QuestionId& id) const;
  const LeafCode& leaf(const CodeId& id) const;

  std::size_t leaf_position_count() const noexcept { return questions_.size() + 1; }

  /// SHA-256 (hex) of the canonical serialized definition.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  CodingTree() = default;

  QuestionId root_;
  std::vector<Question> questions_;
  std::vector<LeafCode> leaves_;
  std::map<QuestionId, std::size_t> question_index_;
  std::map<CodeId, std::size_t> leaf_index_;
  std::string fingerprint_;
};

/// Parses a tree-definition document (JSON). Throws Errc::parse for syntax or
/// shape problems and Errc::validation for structural ones.
CodingTree load_tree(std::string_view document, LoadOptions options = {});

/// Canonical serialization; load_tree(dump_tree(t)) reproduces t exactly.
std::string dump_tree(const CodingTree& tree);

/// The bundled default tree.
std::shared_ptr<const CodingTree> default_tree();

/// Follows one edge. Throws Errc::not_found for an unknown question.
NodeRef step(const CodingTree& tree, const QuestionId& at, Answer answer);

bool classify_actionable(const LeafCode& code) noexcept;

struct TreePath {
  std::vector<AnswerStep> steps;
  CodeId leaf;
};

/// Every root-to-leaf path, depth first, yes before no.
std::vector<TreePath> enumerate_paths(const CodingTree& tree);

/// Result of walking a partial answer sequence from the root.
struct Traversal {
  NodeRef position;              // current question, or the leaf reached
  std::size_t consumed = 0;      // answers used (stops at a leaf)
};

/// Replays answers from the root. Throws Errc::validation if the steps name a
/// question other than the one the walk is at.
Traversal replay_path(const CodingTree& tree, std::span<const AnswerStep> steps);

}  // namespace sacoding
