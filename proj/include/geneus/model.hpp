#pragma once

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Shared boundary between prompt orchestration and concrete backends: the
// request/completion value types plus the abstract Provider interface.

namespace geneus::model {

enum class Role { system, user, assistant };

const char* role_name(Role r);
Role role_from_name(const std::string& name);

struct Message {
  Role role{Role::user};
  std::string content;
};

struct ModelRequest {
  std::vector<Message> messages;
  std::string model_id;
  double temperature{0.2};
  int max_output{2048};
  std::optional<std::int64_t> seed;
};

/// Throws std::invalid_argument when the request violates its preconditions
/// (no messages, temperature outside [0, 2], non-positive max_output).
void validate(const ModelRequest& request);

enum class FinishReason { stop, length, error };

const char* finish_reason_name(FinishReason r);
FinishReason finish_reason_from_name(const std::string& name);

struct TokenUsage {
  int prompt_tokens{0};
  int completion_tokens{0};
};

struct Completion {
  std::string text;
  FinishReason finish_reason{FinishReason::stop};
  std::optional<TokenUsage> usage;  // absent for mock and replay backends

  /// Consumers must treat a truncated completion as unusable for parsing.
  bool truncated() const { return finish_reason == FinishReason::length; }
};

struct ProviderError : std::runtime_error {
  bool retryable{false};
  ProviderError(const std::string& detail, bool retryable_)
      : std::runtime_error(detail), retryable(retryable_) {}
};

/// True when the captured exception is (derived from) ProviderError, either
/// directly or anywhere in its nested-exception chain. Lets callers route a
/// stored failure to the right exit code or HTTP status.
bool is_provider_error(const std::exception_ptr& p);

/// Replay backend was asked for a request that is not in its fixture.
struct FixtureMiss : ProviderError {
  std::string digest;
  explicit FixtureMiss(std::string digest_)
      : ProviderError("no fixture entry for request digest " + digest_, false),
        digest(std::move(digest_)) {}
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual Completion complete(const ModelRequest& request) = 0;
};

using ProviderPtr = std::shared_ptr<Provider>;

}  // namespace geneus::model
