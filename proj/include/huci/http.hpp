#pragma once

#include <memory>
#include <optional>
#include <string>

#include "huci/federation.hpp"
#include "huci/node.hpp"

namespace huci {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  /// Bearer token that marks a request as local (operator).
  std::optional<std::string> token;
  /// Treat loopback peers as local requesters.
  bool trust_loopback = true;
};

/// Runs an HTTP binding on a background thread.
class HttpServer {
 public:
  virtual ~HttpServer();

  /// Binds and starts serving; returns the bound port. Throws io_error when
  /// the port cannot be bound.
  int start();
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();
  int port() const;

 protected:
  struct Impl;
  explicit HttpServer(ServerOptions options);
  std::unique_ptr<Impl> impl_;
};

/// GET /meta, /dump, /changes, /resources/{id}, /citations/{id},
/// /citations/{id}/context; POST /admin/ingest, /admin/policy, /admin/delete.
class NodeServer final : public HttpServer {
 public:
  NodeServer(Node& node, ServerOptions options);
};

/// GET /query/..., /report/coverage, /export, /resources/{id},
/// /citations/{id}, /citations/{id}/context, /meta, /dump, /status.
class FederationServer final : public HttpServer {
 public:
  FederationServer(const Federation& federation, ServerOptions options);
};

}  // namespace huci
