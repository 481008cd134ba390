#pragma once

#include <cstdint>
#include <string>

namespace xkde {

// SHA-256 of a byte string, returned as lowercase hex. Used for request
// cache keys and output-manifest content hashes.
std::string sha256_hex(const std::string& data);

// Hash of a file's contents; throws DataError if the file cannot be read.
std::string sha256_file(const std::string& path);

} // namespace xkde
