#include "sacoding/workspace.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sacoding {

namespace fs = std::filesystem;

void check_storage_id(const std::string& id) {
  const bool ok = !id.empty() && id.size() <= 128 && id.front() != '.' &&
                  std::ranges::all_of(id, [](unsigned char c) {
                    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
                  });
  if (!ok) throw Error(Errc::validation, "invalid id \"" + id + "\" (use letters, digits, '-', '_', '.')");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(Errc::io, "cannot write " + tmp + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < contents.size()) {
    const auto n = ::write(fd, contents.data() + written, contents.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = std::strerror(errno);
      ::close(fd);
      throw Error(Errc::io, "cannot write " + tmp + ": " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) throw Error(Errc::io, "cannot flush " + tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io, "cannot rename " + tmp + ": " + ec.message());
}

Workspace::Workspace(fs::path data_dir, std::shared_ptr<const CodingTree> tree)
    : data_dir_(std::move(data_dir)), tree_(std::move(tree)) {}

void Workspace::ensure_writable() const {
  std::error_code ec;
  fs::create_directories(data_dir_ / "datasets", ec);
  if (!ec) fs::create_directories(data_dir_ / "sessions", ec);
  if (ec) throw Error(Errc::io, "data directory " + data_dir_.string() + " is not writable: " + ec.message());
  const auto probe = data_dir_ / ".write-probe";
  write_file_atomic(probe, "ok\n");
  fs::remove(probe, ec);
}

std::vector<Dataset> Workspace::datasets() const {
  std::vector<Dataset> out = bundled_datasets();
  std::error_code ec;
  const auto dir = data_dir_ / "datasets";
  if (!fs::is_directory(dir, ec)) return out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::ranges::sort(files);
  for (const auto& f : files) out.push_back(parse_dataset(read_file(f)));
  return out;
}

std::optional<Dataset> Workspace::find_dataset(const std::string& dataset_id) const {
  if (const auto* b = find_bundled_dataset(dataset_id)) return *b;
  check_storage_id(dataset_id);
  const auto path = data_dir_ / "datasets" / (dataset_id + ".json");
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  return parse_dataset(read_file(path));
}

void Workspace::save_dataset(const Dataset& dataset) const {
  check_storage_id(dataset.id());
  if (find_bundled_dataset(dataset.id())) {
    throw Error(Errc::conflict, "dataset id " + dataset.id() + " is reserved by a bundled dataset");
  }
  std::error_code ec;
  fs::create_directories(data_dir_ / "datasets", ec);
  write_file_atomic(data_dir_ / "datasets" / (dataset.id() + ".json"), export_dataset(dataset));
}

fs::path Workspace::session_path(const std::string& session_id) const {
  check_storage_id(session_id);
  return data_dir_ / "sessions" / (session_id + ".json");
}

std::vector<std::string> Workspace::session_ids() const {
  std::vector<std::string> ids;
  std::error_code ec;
  const auto dir = data_dir_ / "sessions";
  if (!fs::is_directory(dir, ec)) return ids;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::ranges::sort(ids);
  return ids;
}

bool Workspace::has_session(const std::string& session_id) const {
  std::error_code ec;
  return fs::exists(session_path(session_id), ec);
}

Session Workspace::load_session(const std::string& session_id) const {
  const auto path = session_path(session_id);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(Errc::not_found, "unknown session " + session_id);
  const auto doc = read_file(path);
  const auto dataset_id = checkpoint_dataset_id(doc);
  const auto dataset = find_dataset(dataset_id);
  if (!dataset) throw Error(Errc::not_found, "session " + session_id + " refers to unknown dataset " + dataset_id);
  return restore(doc, *dataset, tree_);
}

void Workspace::save_session(const Session& session) const {
  std::error_code ec;
  fs::create_directories(data_dir_ / "sessions", ec);
  write_file_atomic(session_path(session.id()), checkpoint(session));
}

}  // namespace sacoding
