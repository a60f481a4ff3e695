#include "sacoding/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "sacoding/analytics.hpp"
#include "sacoding/service.hpp"
#include "sacoding/workspace.hpp"

namespace sacoding {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kFormats{"table", "csv", "json", "chart", "table-text", "delimited", "structured",
                                        "chart-data"};

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  std::string data_dir;
  std::string tree_file;
  bool partial_tree = false;
};

std::shared_ptr<const CodingTree> context_tree(const Context& ctx) {
  if (ctx.tree_file.empty()) return default_tree();
  return std::make_shared<const CodingTree>(
      load_tree(read_file(ctx.tree_file), LoadOptions{.require_complete_taxonomy = !ctx.partial_tree}));
}

void emit(const Context& ctx, const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    ctx.out << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

/// A stored session, or for a bundled dataset id with a bundled coding, the
/// in-memory replay of that coding.
struct Opened {
  Session session;
  Dataset dataset;
  std::string label;
};

Opened open_session(const Workspace& ws, const std::string& name) {
  if (ws.has_session(name)) {
    auto s = ws.load_session(name);
    auto d = ws.find_dataset(s.dataset_id());
    return {std::move(s), std::move(*d), name};
  }
  if (const auto* dataset = find_bundled_dataset(name)) {
    if (const auto* coding = bundled_coding_for(name)) {
      SessionOptions options;
      options.session_id = name;
      options.clock = [] { return std::string("1970-01-01T00:00:00Z"); };
      auto s = import_recorded_codes(*dataset, ws.tree(), coding->assignments, "recorded", std::move(options));
      return {std::move(s), *dataset, name};
    }
  }
  throw Error(Errc::not_found, "unknown session " + name);
}

std::string decisions_document(const Session& s, const Dataset& d, ReportFormat format) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& item : d.items()) {
    auto it = s.decisions().find(item.item_id);
    if (it == s.decisions().end()) continue;
    const auto& dec = it->second;
    std::string path;
    for (const auto& step : dec.path) {
      if (!path.empty()) path += ' ';
      path += step.question.str() + ":" + (step.answer == Answer::yes ? "y" : "n");
    }
    std::string tags;
    for (const auto& t : dec.supplementary_tags) tags += (tags.empty() ? "" : ";") + t;
    rows.push_back({item.item_id, item.category_id, display_code(dec.code),
                    s.tree().leaf(dec.code).actionable ? "yes" : "no", path, tags});
  }
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "item_id,category_id,code,actionable,path,tags\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
      out << "\n";
    }
    return out.str();
  }
  out << s.id() << " (" << s.dataset_id() << "): " << s.decisions().size() << " of " << s.item_ids().size()
      << " items coded\n";
  for (const auto& r : rows) {
    out << r[0] << "  " << r[2] << (r[3] == "yes" ? " *" : "") << (r[4].empty() ? "" : "  [" + r[4] + "]")
        << (r[5].empty() ? "" : "  {" + r[5] + "}") << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Context& ctx, const std::string& file) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  const auto dataset = parse_dataset_any(read_file(file));
  ws.save_dataset(dataset);
  ctx.out << "ingested " << dataset.id() << ": " << dataset.size() << " items in " << dataset.categories().size()
          << " categories\n";
  return kExitOk;
}

int cmd_validate_tree(const Context& ctx, const std::string& file) {
  const auto tree = load_tree(read_file(file), LoadOptions{.require_complete_taxonomy = !ctx.partial_tree});
  ctx.out << "ok: " << tree.questions().size() << " questions, " << tree.leaf_position_count()
          << " leaf positions, " << enumerate_paths(tree).size() << " paths\n";
  ctx.out << "fingerprint: " << tree.fingerprint() << "\n";
  return kExitOk;
}

int cmd_datasets(const Context& ctx) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  for (const auto& d : ws.datasets()) {
    ctx.out << d.id() << "\t" << d.size() << " items\t" << d.categories().size() << " categories\t" << d.title()
            << "\n";
  }
  return kExitOk;
}

int cmd_replay(const Context& ctx, const std::string& dataset_id, const std::string& codes,
               std::string session_id, const std::string& coder) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  const auto dataset = ws.find_dataset(dataset_id);
  if (!dataset) throw Error(Errc::not_found, "unknown dataset " + dataset_id);

  std::vector<CodeAssignment> assignments;
  std::string stem;
  if (fs::exists(codes)) {
    assignments = parse_assignments(read_file(codes));
    stem = fs::path(codes).stem().string();
  } else if (const auto* bundled = find_bundled_coding(codes)) {
    assignments = bundled->assignments;
    stem = bundled->name;
  } else {
    throw Error(Errc::not_found, "no codes file or bundled coding named " + codes);
  }
  if (session_id.empty()) session_id = dataset_id + "-" + stem;

  SessionOptions options;
  options.session_id = session_id;
  const auto session = import_recorded_codes(*dataset, ws.tree(), assignments, coder, std::move(options));
  ws.save_session(session);
  ctx.out << "session " << session.id() << ": " << session.decisions().size() << " of " << session.item_ids().size()
          << " items coded (dataset " << dataset_id << ")\n";
  return kExitOk;
}

int cmd_report(const Context& ctx, const std::string& name, const std::string& format_text,
               const std::string& flow, const std::string& out_path) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  const auto opened = open_session(ws, name);
  const auto format = parse_report_format(format_text);
  if (!flow.empty()) {
    emit(ctx, emit_report(question_flow_stats(opened.session, parse_flow_mode(flow)), format), out_path);
    return kExitOk;
  }
  auto report = frequency_table(opened.session, opened.dataset);
  report.label = opened.label;
  emit(ctx, emit_report(report, format), out_path);
  return kExitOk;
}

int cmd_compare(const Context& ctx, const std::vector<std::string>& names, const std::string& format_text,
                const std::string& out_path) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  std::vector<Opened> opened;
  for (const auto& n : names) opened.push_back(open_session(ws, n));
  std::vector<CompareInput> inputs;
  for (const auto& o : opened) inputs.push_back({&o.session, &o.dataset, o.label});
  emit(ctx, emit_report(compare(inputs), parse_report_format(format_text)), out_path);
  return kExitOk;
}

int cmd_agree(const Context& ctx, const std::string& a, const std::string& b, const std::string& format_text) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  const auto sa = open_session(ws, a);
  const auto sb = open_session(ws, b);
  ctx.out << emit_report(agreement(sa.session, sb.session), parse_report_format(format_text));
  return kExitOk;
}

int cmd_export(const Context& ctx, const std::string& name, const std::string& format_text,
               const std::string& out_path) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  const auto opened = open_session(ws, name);
  const auto format = parse_report_format(format_text);
  switch (format) {
    case ReportFormat::json:
      emit(ctx, checkpoint(opened.session), out_path);
      break;
    case ReportFormat::chart: {
      auto report = frequency_table(opened.session, opened.dataset);
      report.label = opened.label;
      emit(ctx, emit_report(report, ReportFormat::chart), out_path);
      break;
    }
    default:
      emit(ctx, decisions_document(opened.session, opened.dataset, format), out_path);
  }
  return kExitOk;
}

// Most recently finalized item that is still finalized, for undo across items.
std::optional<std::string> last_finalized(const Session& s) {
  const auto& events = s.events();
  for (auto it = events.rbegin(); it != events.rend(); ++it) {
    if ((it->kind == EventKind::finalize || it->kind == EventKind::record) && s.decisions().contains(it->item_id)) {
      return it->item_id;
    }
  }
  return std::nullopt;
}

int cmd_code(const Context& ctx, const std::string& dataset_id, const std::string& coder,
             const std::string& session_id) {
  const Workspace ws(ctx.data_dir, context_tree(ctx));
  ws.ensure_writable();
  const auto dataset = ws.find_dataset(dataset_id);
  if (!dataset) throw Error(Errc::not_found, "unknown dataset " + dataset_id);

  Session s = [&] {
    if (!session_id.empty() && ws.has_session(session_id)) {
      auto loaded = ws.load_session(session_id);
      if (loaded.dataset_id() != dataset_id) {
        throw Error(Errc::mismatch, "session " + session_id + " codes dataset " + loaded.dataset_id());
      }
      return loaded;
    }
    SessionOptions options;
    if (!session_id.empty()) options.session_id = session_id;
    return Session::create(*dataset, ws.tree(), coder, std::move(options));
  }();
  ws.save_session(s);
  ctx.out << "session " << s.id() << " (" << dataset_id << ", coder " << s.coder_id() << ")\n";
  ctx.out << "answer y/n; u = undo, q = quit\n";

  std::string shown;
  std::string line;
  while (const auto item_id = s.next_item()) {
    const auto* item = dataset->find(*item_id);
    const auto state = s.state(*item_id);
    if (shown != *item_id) {
      ctx.out << "\n[" << s.decisions().size() + 1 << "/" << s.item_ids().size() << "] " << item->item_id << " ("
              << item->category_id << ")\n"
              << item->text << "\n";
      shown = *item_id;
    }
    const auto& q = s.tree().question(*state.current_question);
    ctx.out << "  " << q.id.str() << ". " << q.text << " [y/n/u/q] " << std::flush;
    if (!std::getline(ctx.in, line)) break;
    const auto cmd = line.empty() ? std::string{} : line.substr(0, line.find_last_not_of(" \t\r") + 1);

    if (cmd == "q" || cmd == "quit") break;
    if (cmd == "u" || cmd == "undo") {
      if (!state.path.empty()) {
        s.undo(*item_id);
      } else if (const auto prev = last_finalized(s)) {
        s.undo(*prev);
        ctx.out << "  reopened " << *prev << "\n";
        shown.clear();
      } else {
        ctx.out << "  nothing to undo\n";
        continue;
      }
      ws.save_session(s);
      continue;
    }

    Answer answer;
    try {
      answer = parse_answer(cmd);
    } catch (const Error&) {
      ctx.out << "  please answer y, n, u (undo) or q (quit)\n";
      continue;
    }
    const auto outcome = s.answer(*item_id, answer);
    ws.save_session(s);
    if (!outcome.finalized()) continue;

    const auto& leaf = s.tree().leaf(outcome.decision->code);
    ctx.out << "  => " << display_code(leaf.id) << (leaf.actionable ? " (actionable)" : "") << ": " << leaf.label
            << "\n";
    if (leaf.id.str() == "M1") {
      ctx.out << "  tag as " << kUnfocusedTag << "? [y/N] " << std::flush;
      if (std::getline(ctx.in, line) && (line.starts_with("y") || line.starts_with("Y"))) {
        s.set_supplementary_tags(*item_id, {std::string(kUnfocusedTag)});
        ws.save_session(s);
      }
    }
  }

  ctx.out << "\n" << s.decisions().size() << " of " << s.item_ids().size() << " items coded";
  ctx.out << (s.complete() ? " (complete)\n" : "\n");
  ctx.out << "session saved: " << s.id() << "\n";
  return kExitOk;
}

int cmd_serve(const Context& ctx, const std::string& host, int port) {
  Service service(ServiceConfig{host, port, ctx.data_dir, context_tree(ctx)});
  ctx.err << "serving on http://" << host << ":" << port << " (data: " << ctx.data_dir << ")\n";
  service.run();
  return kExitOk;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Security-advice coding workbench", "sacode"};
  app.require_subcommand(1);

  Context ctx{in, out, err, {}, {}, false};
  const char* env_dir = std::getenv("SACODE_DATA_DIR");
  ctx.data_dir = env_dir && *env_dir ? env_dir : "sacode-data";
  app.add_option("--data-dir", ctx.data_dir, "Data directory (env SACODE_DATA_DIR)");
  app.add_option("--tree", ctx.tree_file, "Tree definition to use instead of the bundled one");
  app.add_flag("--partial-tree", ctx.partial_tree, "Allow trees that do not reach all twelve codes");

  std::string format = "table";
  std::string out_path;
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "table, csv, json or chart")->check(CLI::IsMember(kFormats));
    sub->add_option("--out", out_path, "Write to a file instead of stdout");
  };

  std::string file;
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset file (JSON or CSV) and store it");
  ingest->add_option("file", file)->required();

  auto* validate = app.add_subcommand("validate-tree", "Validate a tree-definition document");
  validate->add_option("file", file)->required();

  app.add_subcommand("datasets", "List bundled and stored datasets");

  std::string dataset_id;
  std::string coder = "coder";
  std::string session_id;
  auto* code = app.add_subcommand("code", "Code a dataset interactively in the terminal");
  code->add_option("dataset", dataset_id)->required();
  code->add_option("--coder", coder, "Coder id")->required();
  code->add_option("--session", session_id, "Resume (or name) a session");

  std::string codes;
  auto* replay = app.add_subcommand("replay", "Import recorded codes into a pathless session");
  replay->add_option("dataset", dataset_id)->required();
  replay->add_option("codes", codes, "item_id,code CSV file or bundled coding name")->required();
  replay->add_option("--session-id", session_id);
  replay->add_option("--coder", coder);

  std::string name;
  std::string flow;
  auto* report = app.add_subcommand("report", "Frequency table (or question flow) for a session");
  report->add_option("session", name)->required();
  report->add_option("--flow", flow, "Question-flow statistics instead: recorded or inferred")
      ->check(CLI::IsMember({"recorded", "inferred", "recorded-paths", "inferred-from-codes"}));
  add_format(report);

  std::vector<std::string> names;
  auto* cmp = app.add_subcommand("compare", "Compare code proportions across sessions");
  cmp->add_option("sessions", names)->required();
  add_format(cmp);

  auto* agree = app.add_subcommand("agree", "Inter-coder agreement between two sessions");
  agree->add_option("sessions", names)->required()->expected(2);
  agree->add_option("--format", format)->check(CLI::IsMember(kFormats));

  auto* exp = app.add_subcommand("export", "Export a session's decisions");
  exp->add_option("session", name)->required();
  add_format(exp);

  std::string host = "127.0.0.1";
  int port = 8765;
  auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  std::vector<const char*> argv{"sacode"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(ctx, file);
    if (*validate) return cmd_validate_tree(ctx, file);
    if (app.got_subcommand("datasets")) return cmd_datasets(ctx);
    if (*code) return cmd_code(ctx, dataset_id, coder, session_id);
    if (*replay) return cmd_replay(ctx, dataset_id, codes, session_id, coder == "coder" ? "recorded" : coder);
    if (*report) return cmd_report(ctx, name, format, flow, out_path);
    if (*cmp) return cmd_compare(ctx, names, format, out_path);
    if (*agree) return cmd_agree(ctx, names[0], names[1], format);
    if (*exp) return cmd_export(ctx, name, format, out_path);
    if (*serve) return cmd_serve(ctx, host, port);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace sacoding
