#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "geneus/json.hpp"
#include "geneus/model.hpp"

// Concrete completion backends behind the Provider interface: a chat
// completions HTTP client with retries, a fixture-driven replay backend for
// offline runs, a recorder that captures live traffic into a fixture, and a
// deterministic mock.

namespace geneus::provider {

enum class Kind { http, replay, record, mock };

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct RetryPolicy {
  int max_retries{3};
  int base_delay_ms{500};
  double factor{2.0};
  int max_delay_ms{8000};
  bool jitter{true};
};

struct ProviderConfig {
  Kind kind{Kind::http};
  std::string base_url{"https://api.openai.com/v1"};
  std::string model_id{"gpt-4-1106-preview"};
  /// Name of the environment variable holding the API key. The key itself is
  /// never stored in config or logs.
  std::string api_key_ref{"GENEUS_API_KEY"};
  double timeout_s{60.0};
  RetryPolicy retry;
  std::string fixture_path;
  int in_flight_limit{4};
};

/// Stable content hash of a request: model id, ordered messages, temperature
/// rounded to two decimals. Seed, max_output, and anything time-dependent do
/// not participate, so a recorded fixture replays across runs.
std::string normalize_digest(const model::ModelRequest& request);

struct FixtureEntry {
  std::string digest;
  std::string response_text;
  std::string finish_reason{"stop"};
};

struct Fixture {
  std::vector<FixtureEntry> entries;

  static Fixture load(const std::string& path);
  static Fixture from_json(const Json& j);
  Json to_json() const;
  void save(const std::string& path) const;

  const FixtureEntry* find(const std::string& digest) const;
  /// Returns false (and keeps the existing entry) when the digest is present.
  bool insert(FixtureEntry entry);

 private:
  std::unordered_map<std::string, std::size_t> index_;
  void rebuild_index();
};

/// Builds the backend described by `config`. replay requires an existing
/// fixture file; record wraps the HTTP client with a recorder.
model::ProviderPtr make_provider(const ProviderConfig& config);

// ---------------- backends ----------------

class ReplayProvider : public model::Provider {
 public:
  explicit ReplayProvider(Fixture fixture);
  model::Completion complete(const model::ModelRequest& request) override;

 private:
  Fixture fixture_;
};

/// Deterministic stand-in: the reply is a pseudo-random word sequence seeded
/// from the request digest and the request seed.
class MockProvider : public model::Provider {
 public:
  model::Completion complete(const model::ModelRequest& request) override;
};

class RecordingProvider : public model::Provider {
 public:
  RecordingProvider(model::ProviderPtr inner, std::string fixture_path);
  model::Completion complete(const model::ModelRequest& request) override;

 private:
  model::ProviderPtr inner_;
  std::string path_;
  Fixture fixture_;
  std::mutex mu_;
};

// Transport indirection so retry behavior is testable without sockets.
struct HttpRequestData {
  std::string url;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct HttpResponseData {
  int status{0};
  std::string body;
  bool transport_error{false};
  std::string error_detail;
};

using Transport = std::function<HttpResponseData(const HttpRequestData&)>;
using Sleeper = std::function<void(int /*ms*/)>;

class HttpProvider : public model::Provider {
 public:
  /// Default-constructed transport performs a real POST to
  /// {base_url}/chat/completions; tests inject fakes. The sleeper is only
  /// used between retries.
  explicit HttpProvider(ProviderConfig config, Transport transport = {},
                        Sleeper sleeper = {});

  model::Completion complete(const model::ModelRequest& request) override;

  /// Number of transport attempts made by the last complete() call.
  int last_attempts() const { return last_attempts_; }

 private:
  ProviderConfig config_;
  Transport transport_;
  Sleeper sleeper_;
  int last_attempts_{0};

  // Counting semaphore capping concurrent transport calls.
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_{0};
};

}  // namespace geneus::provider
