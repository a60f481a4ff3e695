#include <doctest.h>

#include <random>

#include "sacoding/corpus.hpp"
#include "support.hpp"

using namespace sacoding;
using sacoding::testing::dataset;

namespace {

Errc error_code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

std::string error_message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("bundled corpora") {
  const auto& all = bundled_datasets();
  REQUIRE(all.size() == 3);
  CHECK(all[0].id() == "dcms-full");
  CHECK(all[1].id() == "dcms-sub");
  CHECK(all[2].id() == "etsi");
  CHECK(dataset("dcms-full").size() == 13);
  CHECK(dataset("dcms-sub").size() == 28);
  CHECK(dataset("etsi").size() == 67);
  CHECK(dataset("etsi").categories().size() == 14);
  CHECK(dataset("dcms-sub").categories().size() == 13);

  const auto* item = dataset("dcms-sub").find("DCMS-3.5");
  REQUIRE(item);
  CHECK(item->text.starts_with("For constrained devices that cannot physically be updated"));
  CHECK(item->category_id == "DCMS-3");
  CHECK(find_bundled_dataset("nope") == nullptr);
}

TEST_CASE("per-category counts sum to the dataset size") {
  for (const auto& d : bundled_datasets()) {
    std::size_t sum = 0;
    for (const auto& c : d.categories()) sum += d.count_in(c.category_id);
    CHECK(sum == d.size());
  }
}

TEST_CASE("short ids resolve to a unique suffix match") {
  const auto& etsi = dataset("etsi");
  REQUIRE(etsi.resolve("3-4"));
  CHECK(etsi.resolve("3-4")->item_id == "ETSI-3-4");
  CHECK(etsi.resolve("ETSI-3-4")->item_id == "ETSI-3-4");
  CHECK(etsi.resolve("3-99") == nullptr);
  CHECK(dataset("dcms-sub").resolve("1.1")->item_id == "DCMS-1.1");
}

TEST_CASE("dataset validation") {
  const std::vector<Category> cats{{"A", "Alpha"}};

  SUBCASE("duplicate item id") {
    const auto msg = error_message_of([&] {
      Dataset::build("d", "D", cats, {{"x", "A", "one", {}}, {"x", "A", "two", {}}});
    });
    CHECK(msg.find("items[1]") != std::string::npos);
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  SUBCASE("unknown category") {
    CHECK(error_code_of([&] { Dataset::build("d", "D", cats, {{"x", "B", "one", {}}}); }) == Errc::validation);
  }
  SUBCASE("empty text") {
    const auto msg = error_message_of([&] { Dataset::build("d", "D", cats, {{"x", "A", "  ", {}}}); });
    CHECK(msg.find("items[0]") != std::string::npos);
  }
  SUBCASE("empty item list is valid") {
    const auto d = Dataset::build("empty", "Empty", cats, {});
    CHECK(d.size() == 0);
    CHECK(parse_dataset(export_dataset(d)) == d);
  }
  SUBCASE("malformed json") {
    CHECK(error_code_of([] { parse_dataset("{\"dataset_id\": "); }) == Errc::parse);
    CHECK(error_code_of([] { parse_dataset(R"({"dataset_id": "d"})"); }) != Errc::io);
  }
}

TEST_CASE("csv dataset with manifest") {
  const std::string doc =
      "# dataset_id: mini\n"
      "# title: Mini set\n"
      "# category: A | Alpha\n"
      "# category: B | Beta, with comma\n"
      "item_id,category_id,text,notes\n"
      "a1,A,\"Use strong, unique passwords\",\n"
      "b1,B,\"Keep software \"\"up to date\"\"\",see vendor notes\n";
  const auto d = parse_dataset_csv(doc);
  CHECK(d.id() == "mini");
  CHECK(d.title() == "Mini set");
  REQUIRE(d.categories().size() == 2);
  CHECK(d.categories()[1].title == "Beta, with comma");
  REQUIRE(d.size() == 2);
  CHECK(d.items()[0].text == "Use strong, unique passwords");
  CHECK_FALSE(d.items()[0].notes.has_value());
  CHECK(d.items()[1].text == "Keep software \"up to date\"");
  CHECK(d.items()[1].notes == "see vendor notes");
  CHECK(parse_dataset_any(doc) == d);
  CHECK(parse_dataset_any(export_dataset(d)) == d);
}

TEST_CASE("bundled datasets round-trip through both formats") {
  for (const auto& d : bundled_datasets()) {
    CAPTURE(d.id());
    CHECK(parse_dataset(export_dataset(d)) == d);
    CHECK(parse_dataset_csv(export_dataset_csv(d)) == d);
    CHECK(export_dataset(parse_dataset(export_dataset(d))) == export_dataset(d));
  }
}

TEST_CASE("randomized datasets round-trip") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> n(0, 40), k(1, 6);
  for (int i = 0; i < 100; ++i) {
    const auto d = sacoding::testing::synthetic_dataset(rng, n(rng), k(rng), "syn-" + std::to_string(i));
    CAPTURE(i);
    REQUIRE(parse_dataset(export_dataset(d)) == d);
    REQUIRE(parse_dataset_csv(export_dataset_csv(d)) == d);
  }
}

TEST_CASE("recorded code assignments") {
  const auto rows = parse_assignments("item_id,code\n3-4,M1\nETSI-1-1,*P5\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].item_id == "3-4");
  CHECK(rows[1].code == "*P5");

  REQUIRE(bundled_codings().size() == 3);
  const auto* etsi = bundled_coding_for("etsi");
  REQUIRE(etsi);
  CHECK(etsi->assignments.size() == 67);
  CHECK(find_bundled_coding(etsi->name) == etsi);
  CHECK(bundled_coding_for("dcms-sub")->assignments.size() == 28);
  CHECK(bundled_coding_for("dcms-full")->assignments.size() == 13);
}

TEST_CASE("csv reader") {
  const auto rows = read_csv("a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",x,\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b,c", "d\"e"});
  CHECK(rows[1] == std::vector<std::string>{"multi\nline", "x", ""});
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
}
