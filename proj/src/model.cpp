#include "geneus/model.hpp"

namespace geneus::model {

const char* role_name(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_name(const std::string& name) {
  if (name == "system") return Role::system;
  if (name == "assistant") return Role::assistant;
  if (name == "user") return Role::user;
  throw std::invalid_argument("unknown message role: " + name);
}

void validate(const ModelRequest& request) {
  if (request.messages.empty()) {
    throw std::invalid_argument("model request needs at least one message");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw std::invalid_argument("temperature must be within [0, 2]");
  }
  if (request.max_output <= 0) {
    throw std::invalid_argument("max_output must be positive");
  }
  if (request.model_id.empty()) {
    throw std::invalid_argument("model_id must not be empty");
  }
}

const char* finish_reason_name(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "stop";
}

FinishReason finish_reason_from_name(const std::string& name) {
  if (name == "length") return FinishReason::length;
  if (name == "error") return FinishReason::error;
  return FinishReason::stop;
}

bool is_provider_error(const std::exception_ptr& p) {
  if (!p) return false;
  try {
    std::rethrow_exception(p);
  } catch (const ProviderError&) {
    return true;
  } catch (const std::exception& e) {
    // Prompting blocks wrap failures in their own types; the original
    // provider exception survives as a nested cause.
    try {
      std::rethrow_if_nested(e);
    } catch (...) {
      return is_provider_error(std::current_exception());
    }
    return false;
  } catch (...) {
    return false;
  }
}

}  // namespace geneus::model
