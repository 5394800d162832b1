#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace permdet::util {

// Lowercase hex SHA-256 (OpenSSL EVP behind the scenes).
std::string sha256_hex(std::span<const uint8_t> data);
std::string sha256_hex_file(const std::filesystem::path& path);

// CRC-32 as stored in ZIP central directories (zlib).
uint32_t crc32_of(std::span<const uint8_t> data);

}  // namespace permdet::util
