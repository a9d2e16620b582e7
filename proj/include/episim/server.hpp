#pragma once

// WebSocket session server. Each connection to /ws gets its own protocol
// state and thread; other paths are served from an optional static
// directory (the trainer UI bundle).

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "episim/protocol.hpp"

namespace episim {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> record_dir;
  std::optional<std::filesystem::path> static_dir;
  ProtocolOptions protocol;
  std::function<void(const std::string&)> log;
};

class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts accepting in the background. Throws on bind failure.
  void start();
  // Closes the listener and every open connection, then waits for them.
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

  std::uint16_t port() const;
  // Records persisted so far (all connections).
  std::size_t records_written() const;
  // Blocks until every committed record is on disk.
  void flush_records();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace episim
