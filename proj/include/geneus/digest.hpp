#pragma once

#include <string>
#include <string_view>

namespace geneus::digest {

/// SHA-256 of the input bytes as a 64-char lowercase hex string.
std::string sha256_hex(std::string_view data);

}  // namespace geneus::digest
