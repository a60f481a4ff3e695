#include "sacoding/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <random>

#include <json.hpp>

namespace sacoding {

namespace {

std::string fresh_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  auto bits = rng();
  std::string id = "s-";
  for (int i = 0; i < 12; ++i, bits >>= 4) id.push_back(kHex[bits & 0xf]);
  return id;
}

EventKind parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::answer, EventKind::finalize, EventKind::undo, EventKind::tag, EventKind::record}) {
    if (to_string(k) == s) return k;
  }
  throw Error(Errc::parse, "unknown event kind " + std::string(s));
}

using ojson = nlohmann::ordered_json;

ojson path_to_json(const std::vector<AnswerStep>& path) {
  auto out = ojson::array();
  for (const auto& s : path) out.push_back({{"question", s.question.str()}, {"answer", to_string(s.answer)}});
  return out;
}

std::vector<AnswerStep> path_from_json(const nlohmann::json& j) {
  std::vector<AnswerStep> out;
  for (const auto& s : j) {
    out.push_back({QuestionId{s.at("question").get<std::string>()}, parse_answer(s.at("answer").get<std::string>())});
  }
  return out;
}

ojson event_to_json(const SessionEvent& e) {
  ojson j{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"item_id", e.item_id}};
  if (e.question) j["question"] = e.question->str();
  if (e.answer) j["answer"] = to_string(*e.answer);
  if (e.code) j["code"] = e.code->str();
  if (e.kind == EventKind::tag) j["tags"] = e.tags;
  j["at"] = e.at;
  return j;
}

SessionEvent event_from_json(const nlohmann::json& j) {
  SessionEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.item_id = j.at("item_id").get<std::string>();
  if (j.contains("question")) e.question = QuestionId{j["question"].get<std::string>()};
  if (j.contains("answer")) e.answer = parse_answer(j["answer"].get<std::string>());
  if (j.contains("code")) e.code = CodeId{j["code"].get<std::string>()};
  if (j.contains("tags")) e.tags = j["tags"].get<std::set<std::string>>();
  e.at = j.value("at", std::string{});
  return e;
}

ojson decision_to_json(const CodingDecision& d) {
  return ojson{{"item_id", d.item_id},
               {"code", d.code.str()},
               {"pathless", d.pathless},
               {"path", path_to_json(d.path)},
               {"supplementary_tags", d.supplementary_tags}};
}

CodingDecision decision_from_json(const nlohmann::json& j) {
  return CodingDecision{j.at("item_id").get<std::string>(), path_from_json(j.at("path")),
                        CodeId{j.at("code").get<std::string>()},
                        j.at("supplementary_tags").get<std::set<std::string>>(), j.at("pathless").get<bool>()};
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::answer: return "answer";
    case EventKind::finalize: return "finalize";
    case EventKind::undo: return "undo";
    case EventKind::tag: return "tag";
    case EventKind::record: return "record";
  }
  return "answer";
}

std::string_view to_string(ItemStatus status) noexcept {
  switch (status) {
    case ItemStatus::pending: return "pending";
    case ItemStatus::in_progress: return "in_progress";
    case ItemStatus::finalized: return "finalized";
  }
  return "pending";
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------

Session Session::create(const Dataset& dataset, std::shared_ptr<const CodingTree> tree, std::string coder_id,
                        SessionOptions options) {
  if (!tree) throw Error(Errc::validation, "session requires a coding tree");
  Session s;
  s.id_ = options.session_id.value_or(fresh_session_id());
  s.dataset_id_ = dataset.id();
  s.coder_id_ = std::move(coder_id);
  s.tree_ = std::move(tree);
  s.clock_ = options.clock ? std::move(options.clock) : std::function<std::string()>(utc_now);
  s.created_at_ = s.now();
  s.updated_at_ = s.created_at_;
  for (const auto& item : dataset.items()) {
    s.item_ids_.push_back(item.item_id);
    s.item_set_.insert(item.item_id);
  }
  return s;
}

std::string Session::now() const { return clock_ ? clock_() : utc_now(); }

bool Session::contains_item(std::string_view item_id) const noexcept { return item_set_.contains(item_id); }

ItemState Session::state(const std::string& item_id) const {
  if (!contains_item(item_id)) throw Error(Errc::not_found, "unknown item " + item_id);
  ItemState st;
  st.item_id = item_id;
  if (auto d = decisions_.find(item_id); d != decisions_.end()) {
    st.status = ItemStatus::finalized;
    st.path = d->second.path;
    st.decision = d->second;
    return st;
  }
  if (auto p = in_progress_.find(item_id); p != in_progress_.end()) {
    st.status = ItemStatus::in_progress;
    st.path = p->second;
  }
  const auto walk = replay_path(*tree_, st.path);
  st.current_question = std::get<QuestionId>(walk.position);
  return st;
}

std::vector<std::string> Session::pending_items() const {
  std::vector<std::string> out;
  for (const auto& id : item_ids_) {
    if (!decisions_.contains(id)) out.push_back(id);
  }
  return out;
}

std::optional<std::string> Session::next_item() const {
  for (const auto& id : item_ids_) {
    if (!decisions_.contains(id)) return id;
  }
  return std::nullopt;
}

void Session::append(SessionEvent event) {
  event.seq = events_.size() + 1;
  if (event.at.empty()) event.at = now();
  apply(event);
  updated_at_ = event.at;
  events_.push_back(std::move(event));
}

// The single state transition function. Both live mutations and replay go
// through here, so the checks double as log validation.
void Session::apply(const SessionEvent& e) {
  if (!contains_item(e.item_id)) throw Error(Errc::not_found, "unknown item " + e.item_id);
  const bool finalized = decisions_.contains(e.item_id);

  switch (e.kind) {
    case EventKind::answer: {
      if (finalized) throw Error(Errc::conflict, "item " + e.item_id + " is already finalized; undo first");
      if (!e.question || !e.answer) throw Error(Errc::parse, "answer event without question/answer");
      auto& path = in_progress_[e.item_id];
      const auto walk = replay_path(*tree_, path);
      const auto* at = std::get_if<QuestionId>(&walk.position);
      if (!at || *at != *e.question) {
        if (path.empty()) in_progress_.erase(e.item_id);
        throw Error(Errc::conflict, "item " + e.item_id + " is not at question " + e.question->str());
      }
      path.push_back({*e.question, *e.answer});
      break;
    }
    case EventKind::finalize: {
      if (finalized) throw Error(Errc::conflict, "item " + e.item_id + " is already finalized");
      if (!e.code) throw Error(Errc::parse, "finalize event without code");
      auto it = in_progress_.find(e.item_id);
      if (it == in_progress_.end()) throw Error(Errc::conflict, "finalize without answers for " + e.item_id);
      const auto walk = replay_path(*tree_, it->second);
      const auto* leaf = std::get_if<CodeId>(&walk.position);
      if (!leaf || *leaf != *e.code || walk.consumed != it->second.size()) {
        throw Error(Errc::validation, "path for " + e.item_id + " does not end at " + e.code->str());
      }
      decisions_[e.item_id] = CodingDecision{e.item_id, std::move(it->second), *e.code, {}, false};
      in_progress_.erase(it);
      break;
    }
    case EventKind::record: {
      if (finalized) throw Error(Errc::conflict, "duplicate assignment for " + e.item_id);
      if (!e.code || !tree_->has_leaf(*e.code)) {
        throw Error(Errc::validation, "record event with unknown code for " + e.item_id);
      }
      in_progress_.erase(e.item_id);
      decisions_[e.item_id] = CodingDecision{e.item_id, {}, *e.code, {}, true};
      break;
    }
    case EventKind::undo: {
      if (auto d = decisions_.find(e.item_id); d != decisions_.end()) {
        auto path = std::move(d->second.path);
        decisions_.erase(d);
        if (!path.empty()) path.pop_back();
        if (!path.empty()) in_progress_[e.item_id] = std::move(path);
      } else if (auto p = in_progress_.find(e.item_id); p != in_progress_.end()) {
        p->second.pop_back();
        if (p->second.empty()) in_progress_.erase(p);
      } else {
        throw Error(Errc::conflict, "nothing to undo for " + e.item_id);
      }
      break;
    }
    case EventKind::tag: {
      auto d = decisions_.find(e.item_id);
      if (d == decisions_.end()) throw Error(Errc::conflict, "item " + e.item_id + " is not finalized");
      for (const auto& tag : e.tags) {
        if (tag.empty()) throw Error(Errc::validation, "empty supplementary tag");
      }
      if (e.tags.contains(std::string(kUnfocusedTag)) && d->second.code.str() != "M1") {
        throw Error(Errc::validation, "tag \"Unfocused\" is only allowed with code M1, not " + d->second.code.str());
      }
      d->second.supplementary_tags = e.tags;
      break;
    }
  }
}

AnswerOutcome Session::answer(const std::string& item_id, Answer a) {
  if (!contains_item(item_id)) throw Error(Errc::not_found, "unknown item " + item_id);
  if (decisions_.contains(item_id)) {
    throw Error(Errc::conflict, "item " + item_id + " is already finalized; undo first");
  }
  const auto current = state(item_id).current_question.value();
  SessionEvent ev;
  ev.kind = EventKind::answer;
  ev.item_id = item_id;
  ev.question = current;
  ev.answer = a;
  append(std::move(ev));

  const NodeRef next = step(*tree_, current, a);
  if (const auto* q = std::get_if<QuestionId>(&next)) return {*q, std::nullopt};

  SessionEvent fin;
  fin.kind = EventKind::finalize;
  fin.item_id = item_id;
  fin.code = std::get<CodeId>(next);
  append(std::move(fin));
  return {std::nullopt, decisions_.at(item_id)};
}

ItemState Session::undo(const std::string& item_id) {
  if (!contains_item(item_id)) throw Error(Errc::not_found, "unknown item " + item_id);
  if (!decisions_.contains(item_id) && !in_progress_.contains(item_id)) {
    throw Error(Errc::conflict, "nothing to undo for " + item_id);
  }
  SessionEvent ev;
  ev.kind = EventKind::undo;
  ev.item_id = item_id;
  append(std::move(ev));
  return state(item_id);
}

const CodingDecision& Session::set_supplementary_tags(const std::string& item_id, std::set<std::string> tags) {
  if (!contains_item(item_id)) throw Error(Errc::not_found, "unknown item " + item_id);
  SessionEvent ev;
  ev.kind = EventKind::tag;
  ev.item_id = item_id;
  ev.tags = std::move(tags);
  // Validate against a scratch copy so a rejected tag set leaves no event behind.
  Session probe = *this;
  probe.apply(ev);
  append(std::move(ev));
  return decisions_.at(item_id);
}

void Session::record(const std::string& item_id, const CodeId& code) {
  if (!contains_item(item_id)) throw Error(Errc::not_found, "unknown item " + item_id);
  if (decisions_.contains(item_id)) throw Error(Errc::conflict, "duplicate assignment for " + item_id);
  if (!tree_->has_leaf(code)) throw Error(Errc::validation, "unknown code " + code.str());
  SessionEvent ev;
  ev.kind = EventKind::record;
  ev.item_id = item_id;
  ev.code = code;
  append(std::move(ev));
}

Session Session::replay(std::string session_id, const Dataset& dataset, std::shared_ptr<const CodingTree> tree,
                        std::string coder_id, std::string created_at, std::span<const SessionEvent> events) {
  SessionOptions options;
  options.session_id = std::move(session_id);
  Session s = create(dataset, std::move(tree), std::move(coder_id), std::move(options));
  s.created_at_ = std::move(created_at);
  s.updated_at_ = s.created_at_;
  for (const auto& e : events) {
    if (e.seq != s.events_.size() + 1) {
      throw Error(Errc::validation, "event log out of sequence at seq " + std::to_string(e.seq));
    }
    s.apply(e);
    s.updated_at_ = e.at;
    s.events_.push_back(e);
  }
  return s;
}

bool Session::same_state(const Session& other) const {
  return id_ == other.id_ && dataset_id_ == other.dataset_id_ && coder_id_ == other.coder_id_ &&
         tree_fingerprint() == other.tree_fingerprint() && item_ids_ == other.item_ids_ &&
         decisions_ == other.decisions_ && in_progress_ == other.in_progress_;
}

// ---------------------------------------------------------------------------

Session import_recorded_codes(const Dataset& dataset, std::shared_ptr<const CodingTree> tree,
                              std::span<const CodeAssignment> assignments, std::string coder_id,
                              SessionOptions options) {
  Session s = Session::create(dataset, tree, std::move(coder_id), std::move(options));
  for (const auto& a : assignments) {
    const auto* item = dataset.resolve(a.item_id);
    if (!item) throw Error(Errc::not_found, "unknown item " + a.item_id + " in dataset " + dataset.id());
    const CodeId code = parse_code(a.code);
    if (!tree->has_leaf(code)) throw Error(Errc::validation, "code " + a.code + " is not a leaf of the tree");
    if (s.decisions().contains(item->item_id)) {
      throw Error(Errc::conflict, "duplicate assignment for " + item->item_id);
    }
    s.record(item->item_id, code);
  }
  return s;
}

std::vector<std::string> path_inconsistencies(const Session& session) {
  std::vector<std::string> bad;
  for (const auto& [id, d] : session.decisions()) {
    if (d.pathless) {
      if (!d.path.empty()) bad.push_back(id);
      continue;
    }
    try {
      const auto walk = replay_path(session.tree(), d.path);
      const auto* leaf = std::get_if<CodeId>(&walk.position);
      if (!leaf || *leaf != d.code || walk.consumed != d.path.size()) bad.push_back(id);
    } catch (const Error&) {
      bad.push_back(id);
    }
  }
  return bad;
}

std::string checkpoint(const Session& session) {
  ojson doc;
  doc["schema"] = kSessionSchema;
  doc["session_id"] = session.id();
  doc["dataset_id"] = session.dataset_id();
  doc["coder_id"] = session.coder_id();
  doc["tree_fingerprint"] = session.tree_fingerprint();
  doc["created_at"] = session.created_at();
  doc["updated_at"] = session.updated_at();
  auto& events = doc["events"] = ojson::array();
  for (const auto& e : session.events()) events.push_back(event_to_json(e));
  auto& decisions = doc["decisions"] = ojson::array();
  for (const auto& id : session.item_ids()) {
    if (auto it = session.decisions().find(id); it != session.decisions().end()) {
      decisions.push_back(decision_to_json(it->second));
    }
  }
  auto& progress = doc["in_progress"] = ojson::array();
  for (const auto& id : session.item_ids()) {
    if (auto it = session.in_progress().find(id); it != session.in_progress().end()) {
      progress.push_back({{"item_id", id}, {"path", path_to_json(it->second)}});
    }
  }
  return doc.dump(2) + "\n";
}

namespace {

nlohmann::json parse_checkpoint_json(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, std::string("session checkpoint: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::parse, "session checkpoint: top level must be an object");
  const auto schema = doc.value("schema", std::string{});
  if (schema != kSessionSchema) {
    throw Error(Errc::mismatch, "session checkpoint schema \"" + schema + "\" is not " + std::string(kSessionSchema));
  }
  return doc;
}

}  // namespace

std::string checkpoint_dataset_id(std::string_view document) {
  try {
    return parse_checkpoint_json(document).at("dataset_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("session checkpoint: ") + e.what());
  }
}

Session restore(std::string_view document, const Dataset& dataset, std::shared_ptr<const CodingTree> tree) {
  const auto doc = parse_checkpoint_json(document);
  try {
    const auto dataset_id = doc.at("dataset_id").get<std::string>();
    if (dataset_id != dataset.id()) {
      throw Error(Errc::mismatch, "checkpoint is for dataset " + dataset_id + ", not " + dataset.id());
    }
    const auto fingerprint = doc.at("tree_fingerprint").get<std::string>();
    if (fingerprint != tree->fingerprint()) {
      throw Error(Errc::mismatch, "checkpoint tree fingerprint " + fingerprint.substr(0, 12) +
                                      "... does not match the loaded tree " + tree->fingerprint().substr(0, 12) + "...");
    }
    std::vector<SessionEvent> events;
    for (const auto& e : doc.at("events")) events.push_back(event_from_json(e));

    Session s = Session::replay(doc.at("session_id").get<std::string>(), dataset, std::move(tree),
                                doc.at("coder_id").get<std::string>(), doc.at("created_at").get<std::string>(),
                                events);

    // Materialized decisions must agree with the fold.
    std::map<std::string, CodingDecision> stored;
    for (const auto& d : doc.at("decisions")) {
      auto decision = decision_from_json(d);
      stored.emplace(decision.item_id, std::move(decision));
    }
    if (stored != s.decisions()) {
      throw Error(Errc::mismatch, "checkpoint decisions disagree with its event log");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("session checkpoint: ") + e.what());
  }
}

}  // namespace sacoding
