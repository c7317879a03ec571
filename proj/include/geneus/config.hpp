#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "geneus/provider.hpp"

namespace geneus::api {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AppConfig {
  provider::ProviderConfig provider;
  /// Directory of prompt template .txt files; empty means the compiled-in
  /// templates.
  std::string templates_dir;
  std::string output_dir{"runs"};
  int default_runs{10};
  double duplicate_threshold{0.9};
  int chunk_max_chars{12000};
  /// Extra actor words accepted by the lint who-check, on top of the
  /// built-in lexicon.
  std::vector<std::string> actor_lexicon;
};

/// Parses the TOML subset used for configuration: bare top-level keys,
/// [provider] and [quality] tables, string/int/float/bool values and
/// single-line string arrays, # comments. Unknown keys are errors.
AppConfig parse_config(const std::string& toml_text);

/// parse_config over a file, then validate + env overrides.
AppConfig load_config(const std::string& path);

/// Range and enum checks for every field; throws ConfigError.
void validate(const AppConfig& config);

/// GENEUS_BASE_URL and GENEUS_MODEL replace the configured provider values
/// when set. The API key is not copied here: the provider reads the env var
/// named by api_key_ref at request time.
void apply_env_overrides(AppConfig& config);

}  // namespace geneus::api
