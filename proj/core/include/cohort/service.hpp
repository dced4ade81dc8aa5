#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cohort/error.hpp"
#include "cohort/eventlog.hpp"

namespace cohort {

struct ServiceRequest {
  std::string method;  // "GET", "POST", ...
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// HTTP status for a library error category.
int http_status(ErrorKind kind);

struct ServiceOptions {
  /// When set, every session is mirrored to <dir>/<id>.json after each change.
  std::optional<std::filesystem::path> snapshot_dir;
};

/// Interactive relaxation sessions over logs loaded at start-up.
///
///   POST /sessions                     create
///   GET  /sessions/{id}                state
///   POST /sessions/{id}/step           {"decision": "accept" | "stop"}
///   GET  /sessions/{id}/curve          calibration dump
///   POST /sessions/{id}/cutoffs        {"alpha_f": k, "alpha_d": k} or {"method": "..."}
///   GET  /sessions/{id}/definition
///   GET  /sessions/{id}/classification ?alpha_f=&alpha_d=&page=&page_size=&format=csv
///
/// Requests on different sessions run concurrently; a mutation that finds its
/// session busy is rejected with 409.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void add_log(std::string id, EventLog log, std::vector<Manifest> manifests = {});
  std::vector<std::string> log_ids() const;

  ServiceResponse handle(const ServiceRequest& request);

  /// Replays every snapshot in the snapshot directory; returns how many
  /// sessions were restored. Snapshots whose log is not loaded are skipped.
  std::size_t restore();

  /// Holds a session's write lock; concurrent mutations get 409 meanwhile.
  std::unique_lock<std::shared_mutex> hold(const std::string& session_id);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // mounted at "/"
};

/// cpp-httplib front end for a Service.
class HttpServer {
 public:
  HttpServer(Service& service, HttpOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket and returns the port. Throws Error(input) on failure.
  int bind();
  /// Serves until stop(); call bind() first.
  void listen();
  /// Blocks until listen() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cohort
