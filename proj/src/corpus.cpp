#include "sacoding/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sacoding/bundled.hpp"

namespace sacoding {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool blank(std::string_view s) { return trim(s).empty(); }

}  // namespace

Dataset Dataset::build(std::string dataset_id, std::string title, std::vector<Category> categories,
                       std::vector<AdviceItem> items) {
  if (dataset_id.empty()) throw Error(Errc::validation, "dataset_id is empty");

  std::set<std::string> category_ids;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i].category_id.empty()) {
      throw Error(Errc::validation, "categories[" + std::to_string(i) + "]: empty category_id");
    }
    if (!category_ids.insert(categories[i].category_id).second) {
      throw Error(Errc::validation, "categories[" + std::to_string(i) + "]: duplicate category " +
                                        categories[i].category_id);
    }
  }

  std::set<std::string> item_ids;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const auto where = "items[" + std::to_string(i) + "]";
    if (item.item_id.empty()) throw Error(Errc::validation, where + ": empty item_id");
    if (!item_ids.insert(item.item_id).second) {
      throw Error(Errc::validation, where + ": duplicate item_id " + item.item_id);
    }
    if (item.category_id.empty()) throw Error(Errc::validation, where + ": empty category_id");
    if (!category_ids.contains(item.category_id)) {
      throw Error(Errc::validation, where + ": unknown category " + item.category_id);
    }
    if (blank(item.text)) throw Error(Errc::validation, where + ": empty text for " + item.item_id);
  }

  Dataset d;
  d.id_ = std::move(dataset_id);
  d.title_ = std::move(title);
  d.categories_ = std::move(categories);
  d.items_ = std::move(items);
  return d;
}

const AdviceItem* Dataset::find(std::string_view item_id) const noexcept {
  auto it = std::ranges::find(items_, item_id, &AdviceItem::item_id);
  return it == items_.end() ? nullptr : &*it;
}

const AdviceItem* Dataset::resolve(std::string_view id_or_short) const noexcept {
  if (const auto* exact = find(id_or_short)) return exact;
  const std::string suffix = "-" + std::string(id_or_short);
  const AdviceItem* match = nullptr;
  for (const auto& item : items_) {
    if (item.item_id.size() > suffix.size() && item.item_id.ends_with(suffix)) {
      if (match) return nullptr;  // ambiguous
      match = &item;
    }
  }
  return match;
}

std::size_t Dataset::count_in(std::string_view category_id) const noexcept {
  return static_cast<std::size_t>(std::ranges::count(items_, category_id, &AdviceItem::category_id));
}

// ---------------------------------------------------------------------------
// JSON

Dataset parse_dataset(std::string_view document) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse, std::string("dataset: ") + e.what());
  }

  std::string where = "dataset";
  try {
    if (!doc.is_object()) throw Error(Errc::parse, "dataset: top level must be an object");
    if (auto it = doc.find("schema"); it != doc.end() && it->get<std::string>() != "sacoding-dataset/1") {
      throw Error(Errc::parse, "dataset: unsupported schema " + it->get<std::string>());
    }
    std::vector<Category> categories;
    const auto& cats = doc.at("categories");
    for (std::size_t i = 0; i < cats.size(); ++i) {
      where = "categories[" + std::to_string(i) + "]";
      categories.push_back({cats[i].at("category_id").get<std::string>(), cats[i].value("title", std::string{})});
    }
    std::vector<AdviceItem> items;
    const auto& raw = doc.at("items");
    for (std::size_t i = 0; i < raw.size(); ++i) {
      where = "items[" + std::to_string(i) + "]";
      const auto& r = raw[i];
      AdviceItem item{r.at("item_id").get<std::string>(), r.at("category_id").get<std::string>(),
                      r.at("text").get<std::string>(), std::nullopt};
      if (auto n = r.find("notes"); n != r.end() && !n->is_null()) item.notes = n->get<std::string>();
      items.push_back(std::move(item));
    }
    where = "dataset";
    return Dataset::build(doc.at("dataset_id").get<std::string>(), doc.value("title", std::string{}),
                          std::move(categories), std::move(items));
  } catch (const json::exception& e) {
    throw Error(Errc::parse, "dataset " + where + ": " + e.what());
  }
}

std::string export_dataset(const Dataset& dataset) {
  nlohmann::ordered_json doc;
  doc["schema"] = "sacoding-dataset/1";
  doc["dataset_id"] = dataset.id();
  doc["title"] = dataset.title();
  auto& cats = doc["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : dataset.categories()) cats.push_back({{"category_id", c.category_id}, {"title", c.title}});
  auto& items = doc["items"] = nlohmann::ordered_json::array();
  for (const auto& item : dataset.items()) {
    nlohmann::ordered_json j{{"item_id", item.item_id}, {"category_id", item.category_id}, {"text", item.text}};
    j["notes"] = item.notes ? nlohmann::ordered_json(*item.notes) : nlohmann::ordered_json(nullptr);
    items.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::vector<std::string>> read_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) {
          throw Error(Errc::parse, "csv line " + std::to_string(line) + ": stray quote inside field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw Error(Errc::parse, "csv line " + std::to_string(line) + ": unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

Dataset parse_dataset_csv(std::string_view document) {
  std::string dataset_id;
  std::string title;
  std::vector<Category> categories;

  // Manifest: leading '#' lines.
  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < document.size()) {
    const auto eol = document.find('\n', pos);
    const auto raw = document.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    const auto l = trim(raw);
    if (!l.empty() && l.front() != '#') break;
    ++line;
    pos = eol == std::string_view::npos ? document.size() : eol + 1;
    if (l.empty()) continue;
    auto body = trim(l.substr(1));
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) {
      throw Error(Errc::parse, "csv manifest line " + std::to_string(line) + ": expected \"key: value\"");
    }
    const auto key = trim(body.substr(0, colon));
    const auto value = trim(body.substr(colon + 1));
    if (key == "dataset_id") {
      dataset_id = value;
    } else if (key == "title") {
      title = value;
    } else if (key == "category") {
      const auto bar = value.find('|');
      categories.push_back({std::string(trim(value.substr(0, bar))),
                            bar == std::string_view::npos ? std::string{} : std::string(trim(value.substr(bar + 1)))});
    } else {
      throw Error(Errc::parse, "csv manifest line " + std::to_string(line) + ": unknown key " + std::string(key));
    }
  }

  const auto rows = read_csv(document.substr(pos));
  if (rows.empty()) throw Error(Errc::parse, "csv: missing column header");
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::ranges::find(header, name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column("item_id");
  const auto cat_col = column("category_id");
  const auto text_col = column("text");
  const auto notes_col = column("notes");
  if (!id_col || !cat_col || !text_col) {
    throw Error(Errc::parse, "csv: header must contain item_id, category_id, text");
  }

  std::vector<AdviceItem> items;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw Error(Errc::parse, "csv record " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                   " fields, got " + std::to_string(row.size()));
    }
    AdviceItem item{row[*id_col], row[*cat_col], row[*text_col], std::nullopt};
    if (notes_col && !row[*notes_col].empty()) item.notes = row[*notes_col];
    items.push_back(std::move(item));
  }
  return Dataset::build(std::move(dataset_id), std::move(title), std::move(categories), std::move(items));
}

std::string export_dataset_csv(const Dataset& dataset) {
  std::ostringstream out;
  out << "# dataset_id: " << dataset.id() << "\n";
  out << "# title: " << dataset.title() << "\n";
  for (const auto& c : dataset.categories()) out << "# category: " << c.category_id << " | " << c.title << "\n";
  out << "item_id,category_id,text,notes\n";
  for (const auto& item : dataset.items()) {
    out << csv_field(item.item_id) << ',' << csv_field(item.category_id) << ',' << csv_field(item.text) << ','
        << csv_field(item.notes.value_or("")) << "\n";
  }
  return out.str();
}

Dataset parse_dataset_any(std::string_view document) {
  const auto t = trim(document);
  if (!t.empty() && t.front() == '{') return parse_dataset(document);
  return parse_dataset_csv(document);
}

// ---------------------------------------------------------------------------

const std::vector<Dataset>& bundled_datasets() {
  static const std::vector<Dataset> datasets = [] {
    std::map<std::string_view, Dataset> by_name;
    for (const auto& res : bundled::dataset_documents()) by_name.emplace(res.name, parse_dataset(res.text));
    std::vector<Dataset> out;
    for (std::string_view name : {"dcms-full", "dcms-sub", "etsi"}) out.push_back(by_name.at(name));
    return out;
  }();
  return datasets;
}

const Dataset* find_bundled_dataset(std::string_view dataset_id) noexcept {
  const auto& all = bundled_datasets();
  auto it = std::ranges::find(all, dataset_id, &Dataset::id);
  return it == all.end() ? nullptr : &*it;
}

std::vector<CodeAssignment> parse_assignments(std::string_view document) {
  const auto rows = read_csv(document);
  std::vector<CodeAssignment> out;
  std::size_t first = 0;
  if (!rows.empty() && rows.front().size() >= 2 && rows.front()[0] == "item_id") first = 1;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2) {
      throw Error(Errc::parse, "codes record " + std::to_string(r) + ": expected item_id,code");
    }
    out.push_back({std::string(trim(row[0])), std::string(trim(row[1]))});
  }
  return out;
}

const std::vector<BundledCoding>& bundled_codings() {
  static const std::vector<BundledCoding> codings = [] {
    std::vector<BundledCoding> out;
    for (const auto& res : bundled::code_documents()) {
      std::string dataset(res.name);
      if (dataset.starts_with("appendix-")) dataset.erase(0, 9);
      if (dataset.ends_with("-codes")) dataset.erase(dataset.size() - 6);
      out.push_back({std::string(res.name), dataset, parse_assignments(res.text)});
    }
    return out;
  }();
  return codings;
}

const BundledCoding* find_bundled_coding(std::string_view name) noexcept {
  const auto& all = bundled_codings();
  auto it = std::ranges::find(all, name, &BundledCoding::name);
  return it == all.end() ? nullptr : &*it;
}

const BundledCoding* bundled_coding_for(std::string_view dataset_id) noexcept {
  const auto& all = bundled_codings();
  auto it = std::ranges::find(all, dataset_id, &BundledCoding::dataset_id);
  return it == all.end() ? nullptr : &*it;
}

}  // namespace sacoding
