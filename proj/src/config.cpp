#include "geneus/config.hpp"

#include <cstdlib>

#include "geneus/util.hpp"

namespace geneus::api {

namespace {

struct TomlValue {
  enum class Type { string, integer, floating, boolean, string_array };
  Type type{Type::string};
  std::string str;
  long long integer{0};
  double floating{0.0};
  bool boolean{false};
  std::vector<std::string> array;
};

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + message);
}

// Removes a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string parse_string(const std::string& raw, std::size_t line_no) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"') {
    fail(line_no, "expected a quoted string, got: " + raw);
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    char c = raw[i];
    if (c == '\\' && i + 2 < raw.size()) {
      char next = raw[++i];
      switch (next) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line_no, std::string("unsupported escape \\") + next);
      }
    } else if (c == '"') {
      fail(line_no, "unescaped quote inside string");
    } else {
      out += c;
    }
  }
  return out;
}

TomlValue parse_value(const std::string& raw, std::size_t line_no) {
  TomlValue v;
  if (raw.empty()) fail(line_no, "missing value");

  if (raw.front() == '"') {
    v.type = TomlValue::Type::string;
    v.str = parse_string(raw, line_no);
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(line_no, "array must close on the same line");
    v.type = TomlValue::Type::string_array;
    std::string body = util::trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) return v;
    std::size_t pos = 0;
    while (pos < body.size()) {
      if (body[pos] != '"') fail(line_no, "arrays may hold only strings");
      std::size_t end = pos + 1;
      while (end < body.size() && !(body[end] == '"' && body[end - 1] != '\\')) {
        ++end;
      }
      if (end >= body.size()) fail(line_no, "unterminated string in array");
      v.array.push_back(parse_string(body.substr(pos, end - pos + 1), line_no));
      pos = end + 1;
      while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
      if (pos < body.size()) {
        if (body[pos] != ',') fail(line_no, "expected ',' between array items");
        ++pos;
        while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
      }
    }
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.type = TomlValue::Type::boolean;
    v.boolean = (raw == "true");
    return v;
  }
  // Numeric: integer unless it carries a dot or exponent.
  try {
    std::size_t consumed = 0;
    if (raw.find_first_of(".eE") == std::string::npos) {
      v.type = TomlValue::Type::integer;
      v.integer = std::stoll(raw, &consumed);
    } else {
      v.type = TomlValue::Type::floating;
      v.floating = std::stod(raw, &consumed);
    }
    if (consumed != raw.size()) fail(line_no, "trailing junk after number: " + raw);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    fail(line_no, "cannot parse value: " + raw);
  }
  return v;
}

std::string want_string(const TomlValue& v, const std::string& key,
                        std::size_t line_no) {
  if (v.type != TomlValue::Type::string) fail(line_no, key + " must be a string");
  return v.str;
}

long long want_int(const TomlValue& v, const std::string& key,
                   std::size_t line_no) {
  if (v.type != TomlValue::Type::integer) fail(line_no, key + " must be an integer");
  return v.integer;
}

double want_number(const TomlValue& v, const std::string& key,
                   std::size_t line_no) {
  if (v.type == TomlValue::Type::integer) return static_cast<double>(v.integer);
  if (v.type == TomlValue::Type::floating) return v.floating;
  fail(line_no, key + " must be a number");
}

void apply_top_level(AppConfig& config, const std::string& key,
                     const TomlValue& v, std::size_t line_no) {
  if (key == "templates_dir") {
    config.templates_dir = want_string(v, key, line_no);
  } else if (key == "output_dir") {
    config.output_dir = want_string(v, key, line_no);
  } else if (key == "default_runs") {
    config.default_runs = static_cast<int>(want_int(v, key, line_no));
  } else if (key == "chunk_max_chars") {
    config.chunk_max_chars = static_cast<int>(want_int(v, key, line_no));
  } else {
    fail(line_no, "unknown key: " + key);
  }
}

void apply_provider(AppConfig& config, const std::string& key,
                    const TomlValue& v, std::size_t line_no) {
  auto& p = config.provider;
  if (key == "kind") {
    try {
      p.kind = provider::kind_from_name(want_string(v, key, line_no));
    } catch (const std::exception& e) {
      fail(line_no, e.what());
    }
  } else if (key == "base_url") {
    p.base_url = want_string(v, key, line_no);
  } else if (key == "model_id") {
    p.model_id = want_string(v, key, line_no);
  } else if (key == "api_key_ref") {
    p.api_key_ref = want_string(v, key, line_no);
  } else if (key == "timeout_s") {
    p.timeout_s = want_number(v, key, line_no);
  } else if (key == "max_retries") {
    p.retry.max_retries = static_cast<int>(want_int(v, key, line_no));
  } else if (key == "fixture_path") {
    p.fixture_path = want_string(v, key, line_no);
  } else if (key == "in_flight_limit") {
    p.in_flight_limit = static_cast<int>(want_int(v, key, line_no));
  } else {
    fail(line_no, "unknown key in [provider]: " + key);
  }
}

void apply_quality(AppConfig& config, const std::string& key,
                   const TomlValue& v, std::size_t line_no) {
  if (key == "duplicate_threshold") {
    config.duplicate_threshold = want_number(v, key, line_no);
  } else if (key == "actor_lexicon") {
    if (v.type != TomlValue::Type::string_array) {
      fail(line_no, "actor_lexicon must be an array of strings");
    }
    config.actor_lexicon = v.array;
  } else {
    fail(line_no, "unknown key in [quality]: " + key);
  }
}

}  // namespace

AppConfig parse_config(const std::string& toml_text) {
  AppConfig config;
  std::string section;
  std::size_t line_no = 0;

  for (const std::string& raw_line : util::split_lines(toml_text)) {
    ++line_no;
    std::string line = util::trim(strip_comment(raw_line));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated table header");
      section = util::trim(line.substr(1, line.size() - 2));
      if (section != "provider" && section != "quality") {
        fail(line_no, "unknown table: [" + section + "]");
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    std::string key = util::trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    TomlValue value = parse_value(util::trim(line.substr(eq + 1)), line_no);

    if (section.empty()) {
      apply_top_level(config, key, value, line_no);
    } else if (section == "provider") {
      apply_provider(config, key, value, line_no);
    } else {
      apply_quality(config, key, value, line_no);
    }
  }
  return config;
}

AppConfig load_config(const std::string& path) {
  AppConfig config = parse_config(util::read_file(path));
  apply_env_overrides(config);
  validate(config);
  return config;
}

void validate(const AppConfig& config) {
  const auto& p = config.provider;
  if (p.model_id.empty()) throw ConfigError("provider.model_id must not be empty");
  if (p.kind == provider::Kind::http && p.base_url.empty()) {
    throw ConfigError("provider.base_url required for the http provider");
  }
  if ((p.kind == provider::Kind::replay || p.kind == provider::Kind::record) &&
      p.fixture_path.empty()) {
    throw ConfigError("provider.fixture_path required for replay/record");
  }
  if (p.timeout_s <= 0) throw ConfigError("provider.timeout_s must be positive");
  if (p.retry.max_retries < 0) {
    throw ConfigError("provider.max_retries must be non-negative");
  }
  if (p.in_flight_limit < 1) {
    throw ConfigError("provider.in_flight_limit must be at least 1");
  }
  if (config.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (config.default_runs < 2) {
    throw ConfigError("default_runs must be at least 2");
  }
  if (!(config.duplicate_threshold > 0.0 && config.duplicate_threshold <= 1.0)) {
    throw ConfigError("duplicate_threshold must be in (0, 1]");
  }
  if (config.chunk_max_chars < 256) {
    throw ConfigError("chunk_max_chars must be at least 256");
  }
}

void apply_env_overrides(AppConfig& config) {
  if (auto url = util::env_var("GENEUS_BASE_URL")) {
    config.provider.base_url = *url;
  }
  if (auto model = util::env_var("GENEUS_MODEL")) {
    config.provider.model_id = *model;
  }
}

}  // namespace geneus::api
