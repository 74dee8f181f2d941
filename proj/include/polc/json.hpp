#pragma once

#include <json.hpp>

namespace polc {

// Insertion-ordered JSON keeps serialized documents in schema order, which in
// turn keeps every machine-readable output byte-stable across runs.
using Json = nlohmann::ordered_json;

}  // namespace polc
