#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sacoding/error.hpp"

namespace sacoding {

struct AdviceItem {
  std::string item_id;
  std::string category_id;
  std::string text;
  std::optional<std::string> notes;

  friend bool operator==(const AdviceItem&, const AdviceItem&) = default;
};

struct Category {
  std::string category_id;
  std::string title;

  friend bool operator==(const Category&, const Category&) = default;
};

/// A named, category-partitioned corpus of advice items. Immutable once built.
class Dataset {
 public:
  /// Validates ids, texts and category membership.
  static Dataset build(std::string dataset_id, std::string title, std::vector<Category> categories,
                       std::vector<AdviceItem> items);

  const std::string& id() const noexcept { return id_; }
  const std::string& title() const noexcept { return title_; }
  const std::vector<Category>& categories() const noexcept { return categories_; }
  const std::vector<AdviceItem>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }

  const AdviceItem* find(std::string_view item_id) const noexcept;
  /// Exact id, or else the unique item whose id ends in "-<short_id>"
  /// (so "3-4" finds "ETSI-3-4").
  const AdviceItem* resolve(std::string_view id_or_short) const noexcept;
  std::size_t count_in(std::string_view category_id) const noexcept;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Dataset() = default;

  std::string id_;
  std::string title_;
  std::vector<Category> categories_;
  std::vector<AdviceItem> items_;
};

/// JSON dataset document. Errors carry a record locator ("items[4]").
Dataset parse_dataset(std::string_view document);

/// CSV items (columns item_id,category_id,text[,notes]) plus a header manifest:
/// leading "# key: value" lines giving dataset_id, title and one
/// "category: <id> | <title>" line per category, in order.
Dataset parse_dataset_csv(std::string_view document);

/// Sniffs the format: a document whose first non-space character is '{' is JSON.
Dataset parse_dataset_any(std::string_view document);

std::string export_dataset(const Dataset& dataset);
std::string export_dataset_csv(const Dataset& dataset);

/// DCMS-Full (13), DCMS-SubTopics (28), ETSI-Provisions (67), in that order.
const std::vector<Dataset>& bundled_datasets();
const Dataset* find_bundled_dataset(std::string_view dataset_id) noexcept;

// ---------------------------------------------------------------------------
// Recorded code assignments (item_id,code CSV).

struct CodeAssignment {
  std::string item_id;
  std::string code;  // as written; parsed against the taxonomy on import
};

std::vector<CodeAssignment> parse_assignments(std::string_view document);

struct BundledCoding {
  std::string name;        // e.g. "appendix-etsi-codes"
  std::string dataset_id;  // dataset it codes
  std::vector<CodeAssignment> assignments;
};

const std::vector<BundledCoding>& bundled_codings();
const BundledCoding* find_bundled_coding(std::string_view name) noexcept;
const BundledCoding* bundled_coding_for(std::string_view dataset_id) noexcept;

// Minimal RFC 4180 reader shared by the CSV formats.
std::vector<std::vector<std::string>> read_csv(std::string_view text);
std::string csv_field(std::string_view value);

}  // namespace sacoding
