#pragma once

#include <memory>
#include <string>
#include <thread>

#include "geneus/config.hpp"
#include "geneus/model.hpp"
#include "geneus/promptkit.hpp"
#include "geneus/run_store.hpp"
#include "geneus/storygen.hpp"

namespace httplib {
class Server;
}

namespace geneus::api {

/// REST front end:
///   POST /v1/user-stories  {"document": "<text>"} -> result envelope
///   GET  /v1/runs/{id}     -> stored result envelope
///   GET  /healthz          -> "ok"
///
/// Every successful generation is persisted to the run store before the
/// response goes out, so its run id is immediately queryable. Errors are
/// {"error": {"code", "message"}}: 400 for unusable input, 422 when
/// generation cannot satisfy the output contract, 502 for provider failures.
class Service {
 public:
  Service(AppConfig config, model::ProviderPtr provider);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Serves until stop() is called from another thread. Returns false when
  /// the socket cannot be bound.
  bool listen(const std::string& host, int port);

  /// Binds any free port on `host` and serves on a background thread;
  /// returns the port. Meant for tests.
  int listen_any(const std::string& host = "127.0.0.1");

  void stop();

  runstore::RunStore& store() { return store_; }

  /// Documents above this many bytes are rejected with 400.
  static constexpr std::size_t kMaxDocumentBytes = 1024 * 1024;

 private:
  void setup_routes();

  AppConfig config_;
  model::ProviderPtr provider_;
  runstore::RunStore store_;
  promptkit::TemplateStore templates_;
  storygen::PipelineOptions pipeline_options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace geneus::api
