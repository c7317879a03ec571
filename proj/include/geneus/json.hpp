#pragma once

#include <json.hpp>

namespace geneus {

// Insertion-ordered JSON keeps envelope key order stable for canonical
// serialization and fixtures.
using Json = nlohmann::ordered_json;

}  // namespace geneus
