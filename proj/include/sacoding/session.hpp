#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sacoding/coding_tree.hpp"
#include "sacoding/corpus.hpp"

namespace sacoding {

inline constexpr std::string_view kUnfocusedTag = "Unfocused";
inline constexpr std::string_view kSessionSchema = "sacoding-session/1";

struct CodingDecision {
  std::string item_id;
  std::vector<AnswerStep> path;  // empty when pathless
  CodeId code;
  std::set<std::string> supplementary_tags;
  bool pathless = false;

  friend bool operator==(const CodingDecision&, const CodingDecision&) = default;
};

enum class EventKind { answer, finalize, undo, tag, record };

std::string_view to_string(EventKind kind) noexcept;

/// One entry of the append-only session log. Only the fields relevant to the
/// kind are set.
struct SessionEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::answer;
  std::string item_id;
  std::optional<QuestionId> question;  // answer
  std::optional<Answer> answer;        // answer
  std::optional<CodeId> code;          // finalize, record
  std::set<std::string> tags;          // tag
  std::string at;                      // UTC timestamp, informational

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

enum class ItemStatus { pending, in_progress, finalized };

std::string_view to_string(ItemStatus status) noexcept;

struct ItemState {
  std::string item_id;
  ItemStatus status = ItemStatus::pending;
  std::vector<AnswerStep> path;                 // steps so far (or the decision's path)
  std::optional<QuestionId> current_question;   // unset once finalized
  std::optional<CodingDecision> decision;
};

/// Result of answering: either the next question or the finalized decision.
struct AnswerOutcome {
  std::optional<QuestionId> next_question;
  std::optional<CodingDecision> decision;

  bool finalized() const noexcept { return decision.has_value(); }
};

struct SessionOptions {
  std::optional<std::string> session_id;  // fresh random id when unset
  /// Returns the timestamp stamped on events; defaults to the system clock.
  std::function<std::string()> clock;
};

std::string utc_now();

/// A single coder's progress through one dataset. The state is a fold over the
/// event log; every mutation appends events and applies them.
/// Not internally synchronized: one writer at a time.
class Session {
 public:
  static Session create(const Dataset& dataset, std::shared_ptr<const CodingTree> tree, std::string coder_id,
                        SessionOptions options = {});

  const std::string& id() const noexcept { return id_; }
  const std::string& dataset_id() const noexcept { return dataset_id_; }
  const std::string& coder_id() const noexcept { return coder_id_; }
  const std::string& tree_fingerprint() const noexcept { return tree_->fingerprint(); }
  const CodingTree& tree() const noexcept { return *tree_; }
  std::shared_ptr<const CodingTree> tree_ptr() const noexcept { return tree_; }
  const std::string& created_at() const noexcept { return created_at_; }
  const std::string& updated_at() const noexcept { return updated_at_; }

  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  const std::map<std::string, CodingDecision>& decisions() const noexcept { return decisions_; }
  const std::map<std::string, std::vector<AnswerStep>>& in_progress() const noexcept { return in_progress_; }
  const std::vector<SessionEvent>& events() const noexcept { return events_; }

  bool contains_item(std::string_view item_id) const noexcept;
  ItemState state(const std::string& item_id) const;
  /// Items without a decision, in dataset order.
  std::vector<std::string> pending_items() const;
  std::optional<std::string> next_item() const;
  bool complete() const noexcept { return decisions_.size() == item_ids_.size(); }

  /// Errc::not_found for an unknown item, Errc::conflict if already finalized.
  AnswerOutcome answer(const std::string& item_id, Answer answer);
  /// Removes the latest step, reopening a finalized decision. Errc::conflict
  /// when there is nothing to undo.
  ItemState undo(const std::string& item_id);
  /// Replaces the decision's tags. "Unfocused" requires code M1.
  const CodingDecision& set_supplementary_tags(const std::string& item_id, std::set<std::string> tags);
  /// Records a final code without an answer path.
  void record(const std::string& item_id, const CodeId& code);

  /// Rebuilds a session from its metadata and log.
  static Session replay(std::string session_id, const Dataset& dataset, std::shared_ptr<const CodingTree> tree,
                        std::string coder_id, std::string created_at, std::span<const SessionEvent> events);

  /// Observable state equality (ignores the log and timestamps).
  bool same_state(const Session& other) const;

 private:
  Session() = default;

  void append(SessionEvent event);
  void apply(const SessionEvent& event);
  std::string now() const;

  std::string id_;
  std::string dataset_id_;
  std::string coder_id_;
  std::shared_ptr<const CodingTree> tree_;
  std::string created_at_;
  std::string updated_at_;
  std::function<std::string()> clock_;

  std::vector<std::string> item_ids_;
  std::set<std::string, std::less<>> item_set_;
  std::map<std::string, CodingDecision> decisions_;
  std::map<std::string, std::vector<AnswerStep>> in_progress_;
  std::vector<SessionEvent> events_;
};

/// Builds a pathless session from final code assignments. Item ids may use the
/// short appendix form ("3-4"). Errors: unknown item, unknown code, duplicate.
Session import_recorded_codes(const Dataset& dataset, std::shared_ptr<const CodingTree> tree,
                              std::span<const CodeAssignment> assignments, std::string coder_id = "recorded",
                              SessionOptions options = {});

/// Ids of decisions whose path does not replay to their code (empty = consistent).
std::vector<std::string> path_inconsistencies(const Session& session);

std::string checkpoint(const Session& session);
/// Errc::mismatch on fingerprint, dataset or schema disagreement.
Session restore(std::string_view document, const Dataset& dataset, std::shared_ptr<const CodingTree> tree);

/// Peeks at a checkpoint's dataset_id without restoring it.
std::string checkpoint_dataset_id(std::string_view document);

}  // namespace sacoding
