#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sacoding/coding_tree.hpp"
#include "sacoding/corpus.hpp"
#include "sacoding/session.hpp"

namespace sacoding {

/// On-disk store shared by the CLI and the service:
///   <data-dir>/datasets/<dataset_id>.json   uploaded datasets
///   <data-dir>/sessions/<session_id>.json   session checkpoints (event log included)
/// Bundled datasets are always visible and cannot be overwritten.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path data_dir, std::shared_ptr<const CodingTree> tree = default_tree());

  const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
  std::shared_ptr<const CodingTree> tree() const noexcept { return tree_; }

  /// Creates the directory layout; Errc::io if it cannot be written.
  void ensure_writable() const;

  std::vector<Dataset> datasets() const;
  std::optional<Dataset> find_dataset(const std::string& dataset_id) const;
  void save_dataset(const Dataset& dataset) const;

  std::vector<std::string> session_ids() const;
  bool has_session(const std::string& session_id) const;
  Session load_session(const std::string& session_id) const;
  /// Durable: the checkpoint is fsync'ed and atomically renamed into place.
  void save_session(const Session& session) const;

 private:
  std::filesystem::path session_path(const std::string& session_id) const;

  std::filesystem::path data_dir_;
  std::shared_ptr<const CodingTree> tree_;
};

/// Rejects ids that are empty or could escape the data directory.
void check_storage_id(const std::string& id);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sacoding
