#include "sacoding/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <sstream>

#include "sacoding/analytics.hpp"

namespace sacoding {

namespace {

using ojson = nlohmann::ordered_json;

int http_status(Errc code) {
  switch (code) {
    case Errc::parse:
    case Errc::validation: return 400;
    case Errc::not_found: return 404;
    case Errc::conflict: return 409;
    case Errc::mismatch:
    case Errc::unavailable: return 422;
    case Errc::io: return 500;
  }
  return 500;
}

void reply_ok(httplib::Response& res, ojson payload, int status = 200) {
  res.status = status;
  res.set_content(ojson{{"status", "ok"}, {"payload", std::move(payload)}}.dump(), "application/json");
}

void reply_error(httplib::Response& res, Errc code, const std::string& message) {
  res.status = http_status(code);
  res.set_content(
      ojson{{"status", "error"}, {"error", {{"code", to_string(code)}, {"message", message}}}}.dump(),
      "application/json");
}

// Runs a handler, converting failures into error envelopes.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, Errc::parse, std::string("request body: ") + e.what());
    } catch (const std::exception& e) {
      reply_error(res, Errc::io, e.what());
    }
  };
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    auto body = nlohmann::json::parse(req.body);
    if (!body.is_object()) throw Error(Errc::validation, "request body must be a JSON object");
    return body;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::parse, std::string("request body: ") + e.what());
  }
}

ojson steps_json(const std::vector<AnswerStep>& path) {
  auto out = ojson::array();
  for (const auto& s : path) out.push_back({{"question", s.question.str()}, {"answer", to_string(s.answer)}});
  return out;
}

ojson question_json(const CodingTree& tree, const QuestionId& id) {
  return {{"id", id.str()}, {"text", tree.question(id).text}};
}

ojson decision_json(const CodingTree& tree, const CodingDecision& d) {
  const auto& leaf = tree.leaf(d.code);
  return {{"item_id", d.item_id},
          {"code", d.code.str()},
          {"display_code", display_code(d.code)},
          {"label", leaf.label},
          {"definition", leaf.definition},
          {"actionable", leaf.actionable},
          {"pathless", d.pathless},
          {"path", steps_json(d.path)},
          {"supplementary_tags", d.supplementary_tags}};
}

ojson item_state_json(const Session& s, const ItemState& st) {
  ojson j{{"item_id", st.item_id}, {"status", to_string(st.status)}, {"path", steps_json(st.path)}};
  if (st.current_question) j["current_question"] = question_json(s.tree(), *st.current_question);
  if (st.decision) j["decision"] = decision_json(s.tree(), *st.decision);
  j["undo_available"] = !st.path.empty() || st.decision.has_value();
  return j;
}

ojson session_summary(const Session& s) {
  return {{"session_id", s.id()},
          {"dataset_id", s.dataset_id()},
          {"coder_id", s.coder_id()},
          {"tree_fingerprint", s.tree_fingerprint()},
          {"item_count", s.item_ids().size()},
          {"coded_count", s.decisions().size()},
          {"in_progress_count", s.in_progress().size()},
          {"complete", s.complete()},
          {"created_at", s.created_at()},
          {"updated_at", s.updated_at()}};
}

ojson session_detail(const Session& s) {
  auto j = session_summary(s);
  auto& decisions = j["decisions"] = ojson::array();
  for (const auto& id : s.item_ids()) {
    if (auto it = s.decisions().find(id); it != s.decisions().end()) {
      decisions.push_back(decision_json(s.tree(), it->second));
    }
  }
  auto& progress = j["in_progress"] = ojson::array();
  for (const auto& [id, path] : s.in_progress()) progress.push_back({{"item_id", id}, {"path", steps_json(path)}});
  return j;
}

ojson dataset_summary(const Dataset& d) {
  return {{"dataset_id", d.id()},
          {"title", d.title()},
          {"item_count", d.size()},
          {"category_count", d.categories().size()}};
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

ojson formatted(const std::string& text, ReportFormat format) {
  if (format == ReportFormat::json || format == ReportFormat::chart) return ojson::parse(text);
  return {{"format", to_string(format)}, {"document", text}};
}

}  // namespace

struct Service::SessionSlot {
  std::mutex mutex;
  Session session;
  std::map<std::string, std::string> idempotent_replies;  // key -> response body

  explicit SessionSlot(Session s) : session(std::move(s)) {}
};

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      workspace_(config_.data_dir, config_.tree),
      server_(std::make_unique<httplib::Server>()) {
  workspace_.ensure_writable();
  for (const auto& id : workspace_.session_ids()) {
    sessions_.emplace(id, std::make_shared<SessionSlot>(workspace_.load_session(id)));
  }
  install_routes();
}

Service::~Service() { stop(); }

void Service::bind() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
    if (port_ < 0) throw Error(Errc::io, "cannot bind " + config_.host);
  } else {
    if (!server_->bind_to_port(config_.host, config_.port)) {
      throw Error(Errc::io, "cannot bind " + config_.host + ":" + std::to_string(config_.port) + " (port in use?)");
    }
    port_ = config_.port;
  }
}

void Service::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::run() {
  bind();
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
  // Every mutation was persisted before it was acknowledged; nothing to flush.
}

std::shared_ptr<Service::SessionSlot> Service::slot(const std::string& session_id) {
  std::lock_guard lock(registry_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(Errc::not_found, "unknown session " + session_id);
  return it->second;
}

void Service::install_routes() {
  auto& srv = *server_;

  srv.Get("/tree", guarded([this](const httplib::Request&, httplib::Response& res) {
    const auto& tree = *workspace_.tree();
    auto doc = ojson::parse(dump_tree(tree));
    doc["fingerprint"] = tree.fingerprint();
    reply_ok(res, std::move(doc));
  }));

  srv.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
    auto out = ojson::array();
    for (const auto& d : workspace_.datasets()) out.push_back(dataset_summary(d));
    reply_ok(res, std::move(out));
  }));

  srv.Get(R"(/datasets/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto d = workspace_.find_dataset(req.matches[1]);
    if (!d) throw Error(Errc::not_found, "unknown dataset " + std::string(req.matches[1]));
    reply_ok(res, ojson::parse(export_dataset(*d)));
  }));

  srv.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto dataset = parse_dataset_any(req.body);
    if (workspace_.find_dataset(dataset.id())) {
      throw Error(Errc::conflict, "dataset " + dataset.id() + " already exists");
    }
    workspace_.save_dataset(dataset);
    reply_ok(res, dataset_summary(dataset), 201);
  }));

  srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto dataset_id = body.at("dataset_id").get<std::string>();
    const auto coder_id = body.value("coder_id", std::string("coder"));
    const auto dataset = workspace_.find_dataset(dataset_id);
    if (!dataset) throw Error(Errc::not_found, "unknown dataset " + dataset_id);
    auto session = Session::create(*dataset, workspace_.tree(), coder_id);
    workspace_.save_session(session);
    auto summary = session_summary(session);
    {
      std::lock_guard lock(registry_mutex_);
      const std::string id = session.id();  // copied: the session is moved below
      sessions_.emplace(id, std::make_shared<SessionSlot>(std::move(session)));
    }
    reply_ok(res, std::move(summary), 201);
  }));

  srv.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    std::vector<std::shared_ptr<SessionSlot>> slots;
    {
      std::lock_guard lock(registry_mutex_);
      for (const auto& [id, s] : sessions_) slots.push_back(s);
    }
    auto out = ojson::array();
    for (const auto& s : slots) {
      std::lock_guard lock(s->mutex);
      out.push_back(session_summary(s->session));
    }
    reply_ok(res, std::move(out));
  }));

  srv.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    std::lock_guard lock(s->mutex);
    reply_ok(res, session_detail(s->session));
  }));

  srv.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    std::lock_guard lock(s->mutex);
    const auto& session = s->session;
    ojson out{{"session_id", session.id()},
              {"coded_count", session.decisions().size()},
              {"item_count", session.item_ids().size()}};
    const auto next = session.next_item();
    out["complete"] = !next.has_value();
    if (next) {
      const auto dataset = workspace_.find_dataset(session.dataset_id());
      const auto* item = dataset->find(*next);
      out["item"] = {{"item_id", item->item_id}, {"category_id", item->category_id}, {"text", item->text}};
      out["state"] = item_state_json(session, session.state(*next));
    }
    reply_ok(res, std::move(out));
  }));

  // Answer and undo honour an Idempotency-Key header: a repeated key returns
  // the first reply without touching the session again.
  auto mutate = [this](const httplib::Request& req, httplib::Response& res, auto&& op) {
    auto s = slot(req.matches[1]);
    const std::string item = req.matches[2];
    std::lock_guard lock(s->mutex);
    const auto key = req.get_header_value("Idempotency-Key");
    if (!key.empty()) {
      if (auto it = s->idempotent_replies.find(key); it != s->idempotent_replies.end()) {
        res.status = 200;
        res.set_content(it->second, "application/json");
        return;
      }
    }
    Session next = s->session;
    ojson payload = op(next, item);
    workspace_.save_session(next);
    s->session = std::move(next);
    reply_ok(res, std::move(payload));
    if (!key.empty()) s->idempotent_replies[key] = res.body;
  };

  srv.Post(R"(/sessions/([^/]+)/items/([^/]+)/answer)",
           guarded([mutate](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             if (!body.contains("answer") || !body["answer"].is_string()) {
               throw Error(Errc::validation, "body must contain \"answer\": \"yes\" | \"no\"");
             }
             const auto text = body["answer"].get<std::string>();
             if (text != "yes" && text != "no") {
               throw Error(Errc::validation, "answer must be \"yes\" or \"no\", got \"" + text + "\"");
             }
             mutate(req, res, [&](Session& s, const std::string& item) {
               const auto outcome = s.answer(item, parse_answer(text));
               auto out = item_state_json(s, s.state(item));
               out["finalized"] = outcome.finalized();
               return out;
             });
           }));

  srv.Post(R"(/sessions/([^/]+)/items/([^/]+)/undo)",
           guarded([mutate](const httplib::Request& req, httplib::Response& res) {
             mutate(req, res, [&](Session& s, const std::string& item) { return item_state_json(s, s.undo(item)); });
           }));

  srv.Put(R"(/sessions/([^/]+)/items/([^/]+)/tags)",
          guarded([mutate](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            const auto tags = body.at("tags").get<std::set<std::string>>();
            mutate(req, res, [&](Session& s, const std::string& item) {
              return decision_json(s.tree(), s.set_supplementary_tags(item, tags));
            });
          }));

  srv.Get(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    const auto format = parse_report_format(req.has_param("format") ? req.get_param_value("format") : "json");
    Session snapshot = [&] {
      std::lock_guard lock(s->mutex);
      return s->session;
    }();
    const auto dataset = workspace_.find_dataset(snapshot.dataset_id());
    const auto report = frequency_table(snapshot, *dataset);
    reply_ok(res, formatted(emit_report(report, format), format));
  }));

  srv.Get(R"(/sessions/([^/]+)/flow)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto s = slot(req.matches[1]);
    const auto mode = parse_flow_mode(req.has_param("mode") ? req.get_param_value("mode") : "recorded-paths");
    Session snapshot = [&] {
      std::lock_guard lock(s->mutex);
      return s->session;
    }();
    reply_ok(res, ojson::parse(emit_report(question_flow_stats(snapshot, mode), ReportFormat::json)));
  }));

  srv.Get("/compare", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto ids = split_csv_list(req.get_param_value("sessions"));
    if (ids.empty()) throw Error(Errc::validation, "query parameter sessions=a,b,... is required");
    const auto format = parse_report_format(req.has_param("format") ? req.get_param_value("format") : "json");
    std::vector<Session> sessions;
    std::vector<Dataset> datasets;
    for (const auto& id : ids) {
      auto s = slot(id);
      std::lock_guard lock(s->mutex);
      sessions.push_back(s->session);
    }
    for (const auto& s : sessions) datasets.push_back(*workspace_.find_dataset(s.dataset_id()));
    std::vector<CompareInput> inputs;
    for (std::size_t i = 0; i < sessions.size(); ++i) inputs.push_back({&sessions[i], &datasets[i], ids[i]});
    reply_ok(res, formatted(emit_report(compare(inputs), format), format));
  }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(ojson{{"status", "error"}, {"error", {{"code", "not_found"}, {"message", "no such endpoint"}}}}
                          .dump(),
                      "application/json");
    }
  });
}

}  // namespace sacoding
