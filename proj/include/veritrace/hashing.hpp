#pragma once

#include <string>
#include <string_view>

namespace veritrace {

/// Lowercase hex SHA-256 of the raw bytes of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace veritrace
