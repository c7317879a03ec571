#include "geneus/provider.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "geneus/digest.hpp"
#include "geneus/util.hpp"

namespace geneus::provider {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::http: return "http";
    case Kind::replay: return "replay";
    case Kind::record: return "record";
    case Kind::mock: return "mock";
  }
  return "http";
}

Kind kind_from_name(const std::string& name) {
  if (name == "http") return Kind::http;
  if (name == "replay") return Kind::replay;
  if (name == "record") return Kind::record;
  if (name == "mock") return Kind::mock;
  throw std::invalid_argument("unknown provider kind: " + name);
}

std::string normalize_digest(const model::ModelRequest& request) {
  char temp[16];
  std::snprintf(temp, sizeof(temp), "%.2f", request.temperature);
  Json canon;
  canon["model"] = request.model_id;
  canon["temperature"] = temp;
  Json msgs = Json::array();
  for (const auto& m : request.messages) {
    msgs.push_back(Json::array({model::role_name(m.role), m.content}));
  }
  canon["messages"] = std::move(msgs);
  return digest::sha256_hex(canon.dump());
}

// ---------------- fixtures ----------------

Fixture Fixture::load(const std::string& path) {
  std::string raw = util::read_file(path);
  Json j;
  try {
    j = Json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    throw model::ProviderError("fixture file is not valid JSON: " + path +
                                   " (" + e.what() + ")",
                               false);
  }
  return from_json(j);
}

Fixture Fixture::from_json(const Json& j) {
  if (!j.is_array()) {
    throw model::ProviderError("fixture must be a JSON array of entries", false);
  }
  Fixture f;
  for (const auto& item : j) {
    FixtureEntry e;
    e.digest = item.value("digest", "");
    e.response_text = item.value("response_text", "");
    e.finish_reason = item.value("finish_reason", "stop");
    if (e.digest.empty()) {
      throw model::ProviderError("fixture entry without digest", false);
    }
    if (!f.insert(std::move(e))) {
      throw model::ProviderError("fixture contains a duplicate digest", false);
    }
  }
  return f;
}

Json Fixture::to_json() const {
  Json arr = Json::array();
  for (const auto& e : entries) {
    arr.push_back({{"digest", e.digest},
                   {"response_text", e.response_text},
                   {"finish_reason", e.finish_reason}});
  }
  return arr;
}

void Fixture::save(const std::string& path) const {
  util::write_file_atomic(path, to_json().dump(2) + "\n");
}

const FixtureEntry* Fixture::find(const std::string& digest) const {
  auto it = index_.find(digest);
  if (it == index_.end()) return nullptr;
  return &entries[it->second];
}

bool Fixture::insert(FixtureEntry entry) {
  if (index_.count(entry.digest)) return false;
  index_[entry.digest] = entries.size();
  entries.push_back(std::move(entry));
  return true;
}

void Fixture::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < entries.size(); ++i) index_[entries[i].digest] = i;
}

// ---------------- replay ----------------

ReplayProvider::ReplayProvider(Fixture fixture) : fixture_(std::move(fixture)) {}

model::Completion ReplayProvider::complete(const model::ModelRequest& request) {
  model::validate(request);
  std::string digest = normalize_digest(request);
  const FixtureEntry* entry = fixture_.find(digest);
  if (!entry) throw model::FixtureMiss(digest);
  model::Completion c;
  c.text = entry->response_text;
  c.finish_reason = model::finish_reason_from_name(entry->finish_reason);
  return c;
}

// ---------------- mock ----------------

model::Completion MockProvider::complete(const model::ModelRequest& request) {
  model::validate(request);
  static const char* kWords[] = {
      "system",  "record",   "signal",  "monitor", "report", "alert",
      "process", "schedule", "review",  "update",  "deliver", "track",
      "input",   "output",   "status",  "level",   "safety",  "check",
      "value",   "sensor",   "control", "manage",  "request", "notify"};
  constexpr std::size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

  std::string digest = normalize_digest(request);
  std::uint64_t h = 0;
  for (int i = 0; i < 16; ++i) {
    char c = digest[i];
    h = (h << 4) | std::uint64_t(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  std::uint64_t seed = h ^ (std::uint64_t(request.seed.value_or(0)) *
                            0x9E3779B97F4A7C15ULL);
  std::mt19937_64 rng(seed);
  std::size_t count = 12 + rng() % 24;
  std::string text;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) text.push_back(' ');
    text += kWords[rng() % kWordCount];
  }
  text.push_back('.');
  model::Completion c;
  c.text = std::move(text);
  return c;
}

// ---------------- recording ----------------

RecordingProvider::RecordingProvider(model::ProviderPtr inner,
                                     std::string fixture_path)
    : inner_(std::move(inner)), path_(std::move(fixture_path)) {
  if (!inner_) throw std::invalid_argument("recording provider needs an inner provider");
}

model::Completion RecordingProvider::complete(const model::ModelRequest& request) {
  model::Completion c = inner_->complete(request);
  FixtureEntry e;
  e.digest = normalize_digest(request);
  e.response_text = c.text;
  e.finish_reason = model::finish_reason_name(c.finish_reason);
  std::lock_guard<std::mutex> lock(mu_);
  if (fixture_.insert(std::move(e))) fixture_.save(path_);
  return c;
}

// ---------------- http ----------------

namespace {

Transport default_transport(const ProviderConfig& config) {
  double timeout = config.timeout_s;
  return [timeout](const HttpRequestData& req) -> HttpResponseData {
    // Split "scheme://host[:port]/prefix" into client target and path.
    std::size_t scheme_end = req.url.find("://");
    std::size_t path_start = scheme_end == std::string::npos
                                 ? req.url.find('/')
                                 : req.url.find('/', scheme_end + 3);
    std::string target = path_start == std::string::npos
                             ? req.url
                             : req.url.substr(0, path_start);
    std::string path = path_start == std::string::npos
                           ? "/"
                           : req.url.substr(path_start);
    httplib::Client client(target);
    auto secs = std::chrono::duration<double>(timeout);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(secs));
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    auto res = client.Post(path, headers, req.body, "application/json");
    HttpResponseData out;
    if (!res) {
      out.transport_error = true;
      out.error_detail = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

std::string body_excerpt(const std::string& body) {
  if (body.size() <= 200) return body;
  return body.substr(0, 200) + "...";
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config, Transport transport,
                           Sleeper sleeper)
    : config_(std::move(config)),
      transport_(transport ? std::move(transport) : default_transport(config_)),
      sleeper_(sleeper ? std::move(sleeper) : [](int ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
      }) {
  if (config_.in_flight_limit < 1) config_.in_flight_limit = 1;
}

model::Completion HttpProvider::complete(const model::ModelRequest& request) {
  model::validate(request);

  auto key = util::env_var(config_.api_key_ref);
  if (!key || key->empty()) {
    throw model::ProviderError(
        "api key environment variable is not set: " + config_.api_key_ref,
        false);
  }

  Json body;
  body["model"] = request.model_id;
  Json msgs = Json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", model::role_name(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  body["temperature"] = request.temperature;
  if (request.seed) body["seed"] = *request.seed;

  HttpRequestData http;
  http.url = config_.base_url + "/chat/completions";
  http.body = body.dump();
  http.headers["Authorization"] = "Bearer " + *key;

  thread_local std::mt19937_64 jitter_rng(std::random_device{}());

  last_attempts_ = 0;
  const RetryPolicy& rp = config_.retry;
  std::string last_error;
  bool last_retryable = false;
  for (int attempt = 0; attempt <= rp.max_retries; ++attempt) {
    if (attempt > 0) {
      double raw = rp.base_delay_ms * std::pow(rp.factor, attempt - 1);
      int delay = static_cast<int>(std::min<double>(raw, rp.max_delay_ms));
      if (rp.jitter && delay > 0) {
        delay = static_cast<int>(jitter_rng() % (std::uint64_t(delay) + 1));
      }
      if (delay > 0) sleeper_(delay);
    }

    HttpResponseData res;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return in_flight_ < config_.in_flight_limit; });
      ++in_flight_;
    }
    res = transport_(http);
    {
      std::lock_guard<std::mutex> lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
    ++last_attempts_;

    if (res.transport_error) {
      last_error = "transport failure: " + res.error_detail;
      last_retryable = true;
      continue;
    }
    if (res.status == 200) {
      Json j;
      try {
        j = Json::parse(res.body);
      } catch (const nlohmann::json::parse_error&) {
        throw model::ProviderError("provider returned malformed JSON", false);
      }
      if (!j.contains("choices") || !j["choices"].is_array() ||
          j["choices"].empty()) {
        throw model::ProviderError("provider response has no choices", false);
      }
      const Json& choice = j["choices"][0];
      model::Completion c;
      c.text = choice.contains("message")
                   ? choice["message"].value("content", "")
                   : "";
      c.finish_reason =
          model::finish_reason_from_name(choice.value("finish_reason", "stop"));
      if (j.contains("usage") && j["usage"].is_object()) {
        model::TokenUsage u;
        u.prompt_tokens = j["usage"].value("prompt_tokens", 0);
        u.completion_tokens = j["usage"].value("completion_tokens", 0);
        c.usage = u;
      }
      return c;
    }
    bool retryable = res.status == 429 || res.status >= 500;
    std::string detail = "provider returned status " +
                         std::to_string(res.status) + ": " +
                         body_excerpt(res.body);
    if (!retryable) throw model::ProviderError(detail, false);
    last_error = detail;
    last_retryable = true;
  }
  throw model::ProviderError(
      last_error + " (after " + std::to_string(last_attempts_) + " attempts)",
      last_retryable);
}

// ---------------- factory ----------------

model::ProviderPtr make_provider(const ProviderConfig& config) {
  switch (config.kind) {
    case Kind::http:
      return std::make_shared<HttpProvider>(config);
    case Kind::replay: {
      if (config.fixture_path.empty()) {
        throw model::ProviderError("replay provider needs a fixture_path", false);
      }
      return std::make_shared<ReplayProvider>(Fixture::load(config.fixture_path));
    }
    case Kind::record: {
      if (config.fixture_path.empty()) {
        throw model::ProviderError("record provider needs a fixture_path", false);
      }
      ProviderConfig inner = config;
      inner.kind = Kind::http;
      return std::make_shared<RecordingProvider>(
          std::make_shared<HttpProvider>(inner), config.fixture_path);
    }
    case Kind::mock:
      return std::make_shared<MockProvider>();
  }
  throw model::ProviderError("unsupported provider kind", false);
}

}  // namespace geneus::provider
