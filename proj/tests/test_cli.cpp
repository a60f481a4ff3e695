#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sacoding/cli.hpp"
#include "sacoding/workspace.hpp"
#include "support.hpp"

using namespace sacoding;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sacoding-cli-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run sacode(const fs::path& data, std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), {"--data-dir", data.string()});
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("replay then report reproduces the ETSI table") {
  TempDir dir;
  const auto r = sacode(dir.path, {"replay", "etsi", "appendix-etsi-codes"});
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "session etsi-appendix-etsi-codes: 67 of 67 items coded"));

  const auto table = sacode(dir.path, {"report", "etsi-appendix-etsi-codes"});
  REQUIRE(table.code == 0);
  CHECK(has(table.out, "Total (67)"));
  CHECK(has(table.out, "34.3%"));
  CHECK(has(table.out, "Actionable: 43.3% (29/67)"));

  const auto flow = sacode(dir.path, {"report", "etsi-appendix-etsi-codes", "--flow", "inferred"});
  REQUIRE(flow.code == 0);
  CHECK(has(flow.out, "77.6"));

  const auto recorded = sacode(dir.path, {"report", "etsi-appendix-etsi-codes", "--flow", "recorded"});
  CHECK(recorded.code == 1);
  CHECK(has(recorded.err, "error:"));

  // Identical bytes on repeated runs.
  CHECK(sacode(dir.path, {"report", "etsi-appendix-etsi-codes", "--format", "json"}).out ==
        sacode(dir.path, {"report", "etsi-appendix-etsi-codes", "--format", "json"}).out);
}

TEST_CASE("replay from a codes file and agreement") {
  TempDir dir;
  const auto codes = dir.path / "mine.csv";
  std::ofstream(codes) << "item_id,code\n1-1,P5\n1-2,P1\n1-3,T'\n1-4,P5\n";
  REQUIRE(sacode(dir.path, {"replay", "etsi", codes.string()}).code == 0);
  const auto agree = sacode(dir.path, {"agree", "etsi-mine", "etsi", "--format", "json"});
  REQUIRE(agree.code == 0);
  const auto j = nlohmann::json::parse(agree.out);
  CHECK(j["overlap"] == 4);
  CHECK(j["agreed"] == 3);

  const auto missing = sacode(dir.path, {"replay", "etsi", (dir.path / "absent.csv").string()});
  CHECK(missing.code == 1);
}

TEST_CASE("compare bundled codings as chart data") {
  TempDir dir;
  const auto r = sacode(dir.path, {"compare", "dcms-full", "dcms-sub", "etsi", "--format", "chart"});
  REQUIRE(r.code == 0);
  const auto chart = nlohmann::json::parse(r.out);
  CHECK(chart["x"].size() == 12);
  CHECK(chart["series"].size() == 3);

  const auto out_file = dir.path / "cmp.csv";
  REQUIRE(sacode(dir.path, {"compare", "dcms-full", "etsi", "--format", "csv", "--out", out_file.string()}).code == 0);
  CHECK(read_file(out_file).starts_with("code,"));
}

TEST_CASE("tree validation") {
  TempDir dir;
  const auto good = dir.path / "tree.json";
  std::ofstream(good) << dump_tree(*default_tree());
  const auto ok = sacode(dir.path, {"validate-tree", good.string()});
  CHECK(ok.code == 0);
  CHECK(has(ok.out, "ok: 11 questions, 12 leaf positions, 12 paths"));

  auto doc = sacoding::testing::default_tree_json();
  sacoding::testing::question_json(doc, "Q5")["no"] = "Q99";
  const auto bad = dir.path / "bad.json";
  std::ofstream(bad) << doc.dump();
  const auto rejected = sacode(dir.path, {"validate-tree", bad.string()});
  CHECK(rejected.code == 1);
  CHECK(has(rejected.err, "Q5.no -> Q99"));
}

TEST_CASE("usage errors") {
  TempDir dir;
  CHECK(sacode(dir.path, {"frobnicate"}).code == 2);
  CHECK(sacode(dir.path, {"report"}).code == 2);
  CHECK(sacode(dir.path, {"report", "etsi", "--format", "xml"}).code == 2);
  CHECK(sacode(dir.path, {}).code == 2);
  CHECK(sacode(dir.path, {"--help"}).code == 0);
  CHECK(sacode(dir.path, {"report", "no-such-session"}).code == 1);
}

TEST_CASE("ingest and list datasets") {
  TempDir dir;
  const auto file = dir.path / "mini.csv";
  std::ofstream(file) << "# dataset_id: mini\n# title: Mini\n# category: A | Alpha\n"
                         "item_id,category_id,text,notes\na1,A,Patch promptly.,\na2,A,Be careful.,\n";
  const auto r = sacode(dir.path, {"ingest", file.string()});
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "ingested mini: 2 items in 1 categories"));
  const auto list = sacode(dir.path, {"datasets"});
  CHECK(has(list.out, "etsi\t67 items"));
  CHECK(has(list.out, "mini\t2 items"));
}

TEST_CASE("interactive coding in the terminal") {
  TempDir dir;
  // a1: Q1 no -> M1, tagged Unfocused; a2: y, undo, junk, y, n -> M2; quit.
  const auto file = dir.path / "mini.json";
  std::ofstream(file) << R"({"dataset_id":"mini","title":"Mini","categories":[{"category_id":"A","title":"Alpha"}],
    "items":[{"item_id":"a1","category_id":"A","text":"Patch promptly."},
             {"item_id":"a2","category_id":"A","text":"Be careful."},
             {"item_id":"a3","category_id":"A","text":"Third."}]})";
  REQUIRE(sacode(dir.path, {"ingest", file.string()}).code == 0);

  const auto r = sacode(dir.path, {"code", "mini", "--coder", "ann", "--session", "t1"}, "n\ny\ny\nu\nwhat\ny\nn\nq\n");
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "Q1. Is the item conveyed"));
  CHECK(has(r.out, "=> M1"));
  CHECK(has(r.out, "tag as Unfocused?"));
  CHECK(has(r.out, "please answer"));
  CHECK(has(r.out, "=> M2"));
  CHECK(has(r.out, "2 of 3 items coded"));

  const Workspace ws(dir.path);
  const auto s = ws.load_session("t1");
  CHECK(s.decisions().at("a1").supplementary_tags.contains("Unfocused"));
  CHECK(s.decisions().at("a2").code == CodeId{"M2"});
  CHECK(s.decisions().at("a2").path.size() == 2);

  // Resume and finish the last item: y,y,n,y,y,n -> P3.
  const auto resumed = sacode(dir.path, {"code", "mini", "--coder", "ann", "--session", "t1"}, "y\ny\nn\ny\ny\nn\n");
  REQUIRE(resumed.code == 0);
  CHECK(has(resumed.out, "=> P3 (actionable)"));
  CHECK(has(resumed.out, "3 of 3 items coded (complete)"));

  const auto exported = sacode(dir.path, {"export", "t1", "--format", "csv"});
  REQUIRE(exported.code == 0);
  CHECK(exported.out.starts_with("item_id,category_id,code,actionable,path,tags\n"));
  const auto checkpoint_doc = sacode(dir.path, {"export", "t1", "--format", "json"});
  CHECK(nlohmann::json::parse(checkpoint_doc.out)["session_id"] == "t1");
}
