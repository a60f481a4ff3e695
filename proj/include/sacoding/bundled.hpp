#pragma once

#include <span>
#include <string_view>

namespace sacoding::bundled {

struct Resource {
  std::string_view name;  // file stem, e.g. "etsi" or "appendix-etsi-codes"
  std::string_view text;
};

std::string_view tree_document() noexcept;
std::span<const Resource> dataset_documents() noexcept;
std::span<const Resource> code_documents() noexcept;

}  // namespace sacoding::bundled
