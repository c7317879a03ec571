#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace geneus::util {

// Reads a whole file in binary mode. Throws std::runtime_error with the path
// in the message when the file cannot be opened.
std::string read_file(const std::string& path);

void write_file(const std::string& path, const std::string& content);

// Write-to-temp-then-rename, so readers never observe a half-written file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string iso8601_utc(std::chrono::system_clock::time_point tp);

std::optional<std::string> env_var(const std::string& name);

std::string to_lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split_lines(const std::string& s);

}  // namespace geneus::util
