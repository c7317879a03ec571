#include "geneus/service.hpp"

#include <chrono>

#include "httplib.h"

#include "geneus/ingest.hpp"
#include "geneus/schema.hpp"
#include "geneus/util.hpp"

namespace geneus::api {

namespace {

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  Json body;
  body["error"]["code"] = code;
  body["error"]["message"] = message;
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

/// Maps a failed pipeline run onto the REST status space: unusable input is
/// the caller's problem (400), provider trouble is upstream's (502),
/// anything else means generation could not satisfy the contract (422).
void send_pipeline_error(httplib::Response& res,
                         const storygen::PipelineError& e) {
  if (e.stage == storygen::Stage::ingest) {
    send_error(res, 400, "unusable_document", e.what());
    return;
  }
  if (model::is_provider_error(e.cause)) {
    send_error(res, 502, "provider_error", e.what());
    return;
  }
  send_error(res, 422, "generation_invalid", e.what());
}

}  // namespace

Service::Service(AppConfig config, model::ProviderPtr provider)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      store_(config_.output_dir),
      templates_(promptkit::TemplateStore::builtin()),
      server_(std::make_unique<httplib::Server>()) {
  if (!config_.templates_dir.empty()) {
    templates_.load_directory(config_.templates_dir);
  }
  pipeline_options_.params.model_id = config_.provider.model_id;
  pipeline_options_.templates = &templates_;
  setup_routes();
}

Service::~Service() { stop(); }

void Service::setup_routes() {
  auto& svr = *server_;
  // The hard cap guards the server; the 1 MiB document limit is enforced
  // per-request below so it can answer with a proper error body.
  svr.set_payload_max_length(8 * 1024 * 1024);

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  svr.Post("/v1/user-stories", [this](const httplib::Request& req,
                                      httplib::Response& res) {
    if (req.body.size() > kMaxDocumentBytes) {
      send_error(res, 400, "document_too_large",
                 "request body exceeds " +
                     std::to_string(kMaxDocumentBytes) + " bytes");
      return;
    }
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      send_error(res, 400, "bad_request",
                 std::string("body is not valid JSON: ") + e.what());
      return;
    }
    if (!body.is_object() || !body.contains("document") ||
        !body["document"].is_string()) {
      send_error(res, 400, "bad_request",
                 "body must be {\"document\": \"<text>\"}");
      return;
    }
    const std::string document = body["document"].get<std::string>();
    if (util::trim(document).empty()) {
      send_error(res, 400, "empty_document", "document is empty");
      return;
    }

    ingest::SourceDocument doc;
    doc.bytes = document;
    doc.format_hint = ingest::FormatHint::unknown;
    doc.name = "request";

    try {
      schema::GenerationResult result =
          storygen::run_pipeline(doc, *provider_, pipeline_options_);
      store_.save(result);
      res.status = 200;
      res.set_content(schema::serialize(result), "application/json");
    } catch (const storygen::PipelineError& e) {
      send_pipeline_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });

  svr.Get(R"(/v1/runs/([^/]+))", [this](const httplib::Request& req,
                                        httplib::Response& res) {
    const std::string run_id = req.matches[1];
    try {
      Json result = store_.load_result(run_id);
      res.status = 200;
      res.set_content(result.dump(4) + "\n", "application/json");
    } catch (const runstore::UnknownRun&) {
      send_error(res, 404, "not_found", "no run with id " + run_id);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  });
}

bool Service::listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int Service::listen_any(const std::string& host) {
  int port = server_->bind_to_any_port(host);
  if (port <= 0) {
    throw std::runtime_error("could not bind a port on " + host);
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  while (!server_->is_running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  return port;
}

void Service::stop() {
  if (server_ && server_->is_running()) {
    server_->stop();
  }
  if (thread_.joinable()) {
    thread_.join();
  }
}

}  // namespace geneus::api
