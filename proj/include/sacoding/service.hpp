#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "sacoding/workspace.hpp"

namespace httplib {
class Server;
}

namespace sacoding {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  std::filesystem::path data_dir = "sacode-data";
  std::shared_ptr<const CodingTree> tree = default_tree();
};

/// Local HTTP facade over the workspace. Every response is an envelope
/// {"status":"ok","payload":...} or {"status":"error","error":{code,message}}.
/// Mutations on one session are serialized and persisted before the reply.
class Service {
 public:
  /// Errc::io if the data directory is not writable.
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. Errc::io if the port is taken.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();

  int port() const noexcept { return port_; }
  const std::string& host() const noexcept { return config_.host; }

 private:
  struct SessionSlot;

  void bind();
  void install_routes();
  std::shared_ptr<SessionSlot> slot(const std::string& session_id);

  ServiceConfig config_;
  Workspace workspace_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;

  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
};

}  // namespace sacoding
