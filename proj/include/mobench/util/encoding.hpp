#pragma once

#include <string>
#include <string_view>

namespace mobench {

/// Lowercase SHA-256 hex digest.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view text);

}  // namespace mobench
