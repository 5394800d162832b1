#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace permdet::apk {

struct BadArchive : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EntryNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedMethod : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CrcMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CompressionMethod : uint16_t { Stored = 0, Deflate = 8 };

struct ZipEntryMeta {
    std::string name;
    uint16_t method = 0;
    uint32_t compressed_size = 0;
    uint32_t uncompressed_size = 0;
    uint32_t crc32 = 0;
    uint32_t local_header_offset = 0;
};

// Central-directory view over an APK/ZIP held in memory. The archive must
// end with a valid End-Of-Central-Directory record; entries are read through
// their local headers and inflated with raw Deflate when needed.
class ZipReader {
public:
    explicit ZipReader(std::span<const uint8_t> data);

    const std::vector<ZipEntryMeta>& entries() const { return entries_; }
    const ZipEntryMeta* find(const std::string& name) const;

    // Decompressed entry bytes; output CRC-32 must match the stored value.
    std::vector<uint8_t> read(const std::string& name) const;
    std::vector<uint8_t> read(const ZipEntryMeta& meta) const;

private:
    std::span<const uint8_t> data_;
    std::vector<ZipEntryMeta> entries_;
};

std::vector<uint8_t> read_apk_entry(std::span<const uint8_t> archive,
                                    const std::string& entry_name);

// Raw-Deflate (RFC 1951) inflate via zlib.
std::vector<uint8_t> inflate_raw(std::span<const uint8_t> compressed,
                                 size_t expected_size);

}  // namespace permdet::apk
