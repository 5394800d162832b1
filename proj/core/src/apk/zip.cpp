#include "permdet/apk/zip.hpp"

#include <zlib.h>

#include "permdet/util/bytes.hpp"
#include "permdet/util/hash.hpp"

namespace permdet::apk {

namespace {

constexpr uint32_t kEocdSig = 0x06054b50;
constexpr uint32_t kCentralSig = 0x02014b50;
constexpr uint32_t kLocalSig = 0x04034b50;
constexpr size_t kEocdMinSize = 22;
// EOCD comment is at most 64 KiB, so the record starts within this window.
constexpr size_t kEocdSearchWindow = kEocdMinSize + 0xFFFF;

size_t find_eocd(std::span<const uint8_t> data) {
    if (data.size() < kEocdMinSize) throw BadArchive("archive shorter than EOCD");
    size_t lo = data.size() > kEocdSearchWindow ? data.size() - kEocdSearchWindow : 0;
    for (size_t pos = data.size() - kEocdMinSize + 1; pos-- > lo;) {
        if (util::read_u32le(data.data() + pos) == kEocdSig) {
            uint16_t comment_len = util::read_u16le(data.data() + pos + 20);
            if (pos + kEocdMinSize + comment_len == data.size()) return pos;
        }
    }
    throw BadArchive("no end-of-central-directory record");
}

}  // namespace

ZipReader::ZipReader(std::span<const uint8_t> data) : data_(data) {
    size_t eocd = find_eocd(data_);
    util::ByteReader r(data_, eocd + 4);
    try {
        r.skip(4);  // disk numbers
        uint16_t entries_this_disk = r.u16();
        uint16_t entries_total = r.u16();
        uint32_t cd_size = r.u32();
        uint32_t cd_offset = r.u32();
        if (entries_this_disk != entries_total)
            throw BadArchive("multi-disk archives unsupported");
        if (static_cast<size_t>(cd_offset) + cd_size > data_.size())
            throw BadArchive("central directory overruns archive");

        util::ByteReader cd(data_, cd_offset);
        entries_.reserve(entries_total);
        for (uint16_t i = 0; i < entries_total; ++i) {
            if (cd.u32() != kCentralSig)
                throw BadArchive("bad central-directory entry signature");
            cd.skip(6);  // versions, flags
            ZipEntryMeta meta;
            meta.method = cd.u16();
            cd.skip(4);  // dos time/date
            meta.crc32 = cd.u32();
            meta.compressed_size = cd.u32();
            meta.uncompressed_size = cd.u32();
            uint16_t name_len = cd.u16();
            uint16_t extra_len = cd.u16();
            uint16_t comment_len = cd.u16();
            cd.skip(8);  // disk start, attributes
            meta.local_header_offset = cd.u32();
            auto name_bytes = cd.bytes(name_len);
            meta.name.assign(name_bytes.begin(), name_bytes.end());
            cd.skip(static_cast<size_t>(extra_len) + comment_len);
            if (meta.name.empty()) throw BadArchive("empty entry name");
            entries_.push_back(std::move(meta));
        }
    } catch (const util::TruncatedData&) {
        throw BadArchive("truncated central directory");
    }
}

const ZipEntryMeta* ZipReader::find(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

std::vector<uint8_t> ZipReader::read(const std::string& name) const {
    const ZipEntryMeta* meta = find(name);
    if (!meta) throw EntryNotFound(name);
    return read(*meta);
}

std::vector<uint8_t> ZipReader::read(const ZipEntryMeta& meta) const {
    util::ByteReader r(data_, meta.local_header_offset);
    std::span<const uint8_t> raw;
    try {
        if (r.u32() != kLocalSig) throw BadArchive("bad local header signature");
        r.skip(2 + 2 + 2 + 2 + 2 + 4 + 4 + 4);  // version..uncompressed_size
        uint16_t name_len = r.u16();
        uint16_t extra_len = r.u16();
        // Sizes come from the central directory; local ones may be zeroed
        // when the archive uses data descriptors.
        r.skip(static_cast<size_t>(name_len) + extra_len);
        raw = r.bytes(meta.compressed_size);
    } catch (const util::TruncatedData&) {
        throw BadArchive("truncated local entry");
    }

    std::vector<uint8_t> out;
    switch (meta.method) {
        case static_cast<uint16_t>(CompressionMethod::Stored):
            out.assign(raw.begin(), raw.end());
            break;
        case static_cast<uint16_t>(CompressionMethod::Deflate):
            out = inflate_raw(raw, meta.uncompressed_size);
            break;
        default:
            throw UnsupportedMethod("compression method " + std::to_string(meta.method));
    }
    if (out.size() != meta.uncompressed_size)
        throw BadArchive("entry size disagrees with central directory");
    if (util::crc32_of(out) != meta.crc32)
        throw CrcMismatch("crc32 mismatch for " + meta.name);
    return out;
}

std::vector<uint8_t> read_apk_entry(std::span<const uint8_t> archive,
                                    const std::string& entry_name) {
    ZipReader reader(archive);
    return reader.read(entry_name);
}

std::vector<uint8_t> inflate_raw(std::span<const uint8_t> compressed,
                                 size_t expected_size) {
    // One slack byte lets zlib reach Z_STREAM_END even for empty entries and
    // exposes streams that would produce more than the directory claims.
    std::vector<uint8_t> out(expected_size + 1);
    z_stream zs{};
    // Negative window bits = raw deflate stream, no zlib header.
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
        throw BadArchive("inflate init failed");
    zs.next_in = const_cast<Bytef*>(compressed.data());
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    size_t produced = out.size() - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected_size)
        throw BadArchive("deflate stream corrupt");
    out.resize(produced);
    return out;
}

}  // namespace permdet::apk
